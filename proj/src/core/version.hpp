#pragma once

namespace ruin {

inline constexpr const char* kVersion = "0.1.0";

} // namespace ruin
