#pragma once

#include "htr/core/replica.hpp"
#include "htr/oracle/oracle.hpp"
#include "htr/sim/network.hpp"
#include "htr/sim/time.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace htr::workload {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class AccessPattern { random, contiguous };

struct TxClassParams {
    ClassId class_id = 0;
    std::uint32_t probability = 0;  // per mille
    std::uint32_t reads = 0;
    std::uint32_t updates = 0;
    std::uint64_t range = 1;
    std::uint64_t offset = 0;
    std::uint64_t sleep = 0;  // ticks
    AccessPattern access_pattern = AccessPattern::random;

    bool operator==(const TxClassParams&) const = default;
};

/// Changes applied to the base classes while a phase is active. Phases are
/// not cumulative: each one is relative to the base parameters.
struct ClassOverride {
    std::vector<ClassId> classes;  // empty means every class
    std::optional<std::uint32_t> reads;
    std::optional<std::uint32_t> updates;
    std::optional<std::uint64_t> range;
    std::optional<std::uint64_t> sleep;
    std::optional<double> reads_scale;
    std::optional<double> updates_scale;
    std::optional<double> range_scale;
};

struct Phase {
    std::string label;
    sim::SimTime start{};
    std::vector<ClassOverride> overrides;
};

struct ScenarioConfig {
    std::string name = "scenario";
    std::uint64_t hashtable_size = 1000;
    bool prepopulate = true;
    std::uint32_t nodes = 3;
    sim::SimTime duration = sim::SimTime::from_seconds(10);
    std::uint32_t clients_per_replica = 16;
    std::uint64_t seed = 1;
    double warmup_s = 0.0;
    bool distinct_ranges = true;  // updating classes must not share keys

    sim::NetConfig net;
    ReplicaConfig replica;
    oracle::HybMLConfig hybml;

    std::vector<TxClassParams> classes;
    std::vector<Phase> phases;

    /// Class parameters in force at `t`.
    std::vector<TxClassParams> classes_at(sim::SimTime t) const;
    /// Index of the phase in force at `t`, or -1 before the first phase.
    int phase_index(sim::SimTime t) const;
    void validate() const;
};

/// Applies overrides of one phase to a copy of the base classes.
std::vector<TxClassParams> apply_phase(const std::vector<TxClassParams>& base, const Phase& phase);

ScenarioConfig load_scenario(const std::string& path, const std::vector<std::string>& overrides = {});
ScenarioConfig parse_scenario(const std::string& json_text, const std::vector<std::string>& overrides = {});

}  // namespace htr::workload
