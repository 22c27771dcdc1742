#include "scenario.hpp"

#include <cctype>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace ruin {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        fail(ErrorCode::parse_error, "scenario: bad number for '" + key + "': " + v);
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        fail(ErrorCode::parse_error, "scenario: bad integer for '" + key + "': " + v);
    }
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace

Scenario Scenario::parse(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorCode::parse_error,
                 "scenario line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            fail(ErrorCode::parse_error,
                 "scenario line " + std::to_string(lineno) + ": empty key or value");
        if (!kv.emplace(key, value).second)
            fail(ErrorCode::parse_error, "scenario: duplicate key '" + key + "'");
    }

    auto take = [&](const char* key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    auto require = [&](const char* key) -> std::string {
        auto v = take(key);
        if (!v) fail(ErrorCode::parse_error, std::string("scenario: missing key '") + key + "'");
        return *v;
    };

    Scenario sc;
    sc.market.riskless_rate = parse_double("riskless_rate_per_year", require("riskless_rate_per_year"));
    sc.market.risky_drift = parse_double("risky_drift_per_year", require("risky_drift_per_year"));
    sc.market.risky_volatility =
        parse_double("risky_volatility_per_sqrt_year", require("risky_volatility_per_sqrt_year"));
    sc.market.hazard_rate = parse_double("hazard_rate_per_year", require("hazard_rate_per_year"));

    const std::string family = require("consumption_family");
    if (family == "affine") {
        const double slope = parse_double("consumption_slope_per_year",
                                          require("consumption_slope_per_year"));
        const double icpt = parse_double("consumption_intercept_per_year",
                                         require("consumption_intercept_per_year"));
        sc.consumption = ConsumptionSpec::affine(slope, icpt);
    } else if (family == "power") {
        const double scale = parse_double("consumption_scale_per_year",
                                          require("consumption_scale_per_year"));
        const double expo = parse_double("consumption_exponent", require("consumption_exponent"));
        sc.consumption = ConsumptionSpec::power(scale, expo);
    } else {
        fail(ErrorCode::parse_error, "scenario: consumption_family must be affine or power");
    }

    sc.state.wealth = parse_double("wealth", require("wealth"));
    sc.state.max_wealth = parse_double("max_wealth", require("max_wealth"));

    SimConfig sim;
    bool any_sim = false;
    if (auto v = take("sim_dt_years")) { sim.dt = parse_double("sim_dt_years", *v); any_sim = true; }
    if (auto v = take("sim_paths")) {
        sim.n_paths = static_cast<std::int64_t>(parse_u64("sim_paths", *v));
        any_sim = true;
    }
    if (auto v = take("sim_seed")) { sim.seed = parse_u64("sim_seed", *v); any_sim = true; }
    if (auto v = take("sim_t_max_years")) {
        sim.t_max = parse_double("sim_t_max_years", *v);
        any_sim = true;
    }
    if (auto v = take("sim_threads")) {
        sim.n_threads = static_cast<int>(parse_u64("sim_threads", *v));
        any_sim = true;
    }
    if (auto v = take("sim_scheme")) {
        if (*v == "euler") sim.scheme = SimScheme::euler_maruyama;
        else if (*v == "exact_shortfall") sim.scheme = SimScheme::exact_shortfall_gbm;
        else fail(ErrorCode::parse_error, "scenario: sim_scheme must be euler or exact_shortfall");
        any_sim = true;
    }
    if (any_sim) sc.sim = sim;

    if (!kv.empty())
        fail(ErrorCode::parse_error, "scenario: unknown key '" + kv.begin()->first + "'");

    sc.market.validate();
    sc.state.validate();
    return sc;
}

std::string Scenario::serialize() const {
    std::ostringstream os;
    os << "# ruin scenario\n";
    os << "riskless_rate_per_year = " << fmt(market.riskless_rate) << "\n";
    os << "risky_drift_per_year = " << fmt(market.risky_drift) << "\n";
    os << "risky_volatility_per_sqrt_year = " << fmt(market.risky_volatility) << "\n";
    os << "hazard_rate_per_year = " << fmt(market.hazard_rate) << "\n";
    if (consumption.family() == ConsumptionSpec::Family::affine) {
        os << "consumption_family = affine\n";
        os << "consumption_slope_per_year = " << fmt(consumption.a()) << "\n";
        os << "consumption_intercept_per_year = " << fmt(consumption.b()) << "\n";
    } else {
        os << "consumption_family = power\n";
        os << "consumption_scale_per_year = " << fmt(consumption.a()) << "\n";
        os << "consumption_exponent = " << fmt(consumption.b()) << "\n";
    }
    os << "wealth = " << fmt(state.wealth) << "\n";
    os << "max_wealth = " << fmt(state.max_wealth) << "\n";
    if (sim) {
        os << "sim_dt_years = " << fmt(sim->dt) << "\n";
        os << "sim_paths = " << sim->n_paths << "\n";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%" PRIu64, static_cast<std::uint64_t>(sim->seed));
        os << "sim_seed = " << buf << "\n";
        if (sim->t_max > 0.0) os << "sim_t_max_years = " << fmt(sim->t_max) << "\n";
        if (sim->n_threads > 0) os << "sim_threads = " << sim->n_threads << "\n";
        os << "sim_scheme = "
           << (sim->scheme == SimScheme::euler_maruyama ? "euler" : "exact_shortfall") << "\n";
    }
    return os.str();
}

Scenario Scenario::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_error, "cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void Scenario::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io_error, "cannot write scenario file: " + path);
    out << serialize();
}

} // namespace ruin
