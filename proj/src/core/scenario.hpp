#pragma once

#include <optional>
#include <string>

#include "market.hpp"
#include "simulate.hpp"

namespace ruin {

// A scenario ties together market, consumption, state and optional simulator
// overrides. On disk it is a commented key = value text file with units baked
// into the key names.
struct Scenario {
    MarketParams market;
    ConsumptionSpec consumption = ConsumptionSpec::affine(0.0, 1.0);
    AgentState state;
    std::optional<SimConfig> sim;

    static Scenario parse(const std::string& text);
    static Scenario load(const std::string& path);
    std::string serialize() const;
    void save(const std::string& path) const;
};

} // namespace ruin
