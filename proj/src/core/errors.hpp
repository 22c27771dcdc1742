#pragma once

#include <stdexcept>
#include <string>

namespace ruin {

// Error codes shared with the C API surface (values must stay in sync with
// rs_status in include/ruinsolver.h).
enum class ErrorCode : int {
    ok = 0,
    invalid_params = 1,
    out_of_regime = 2,
    domain_error = 3,
    no_bracket = 4,
    no_root = 5,
    singular_derivative = 6,
    convergence_failure = 7,
    unbounded = 8,
    scheme_mismatch = 9,
    parse_error = 10,
    io_error = 11,
    null_argument = 12,
    internal = 13,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

} // namespace ruin
