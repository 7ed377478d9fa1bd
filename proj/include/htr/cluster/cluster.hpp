#pragma once

#include "htr/core/history.hpp"
#include "htr/core/replica.hpp"
#include "htr/oracle/oracle.hpp"
#include "htr/workload/scenario.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace htr::cluster {

struct Fault {
    enum class Kind { crash, recover };
    Kind kind = Kind::crash;
    std::uint32_t process = 0;
    sim::SimTime at{};
};

/// Parses "p@t" with t in seconds.
Fault parse_fault(Fault::Kind kind, const std::string& text);

struct RunOptions {
    oracle::OracleKind oracle = oracle::OracleKind::hybml;
    std::vector<Fault> faults;
    bool record_history = false;
    sim::SimTime metrics_interval = sim::SimTime::from_seconds(1);
    /// Stop after this many requests have been issued in total (0: no cap).
    std::uint64_t max_requests = 0;
};

struct MetricsRow {
    double time_s = 0.0;
    double committed_tps = 0.0;
    double abort_rate = 0.0;  // conflict aborts over updating-request attempts
    std::vector<double> du_ratio;
    std::vector<double> sm_ratio;
    double mean_msg_bytes = 0.0;
    double network_utilization = 0.0;
};

struct ClassSummary {
    ClassId class_id = 0;
    std::uint64_t attempts = 0;
    std::uint64_t du_attempts = 0;
    std::uint64_t sm_attempts = 0;
    std::uint64_t aborts = 0;  // DU conflict aborts, local or global
    std::uint64_t commits = 0;
    std::uint64_t post_warmup_du = 0;
    std::uint64_t post_warmup_sm = 0;
    // Learned statistics of replica 0's HybML oracle at the end of the run.
    std::optional<double> du_cost_median;
    std::optional<double> sm_cost_median;
    std::optional<double> learned_abort_rate;
    double abort_rate() const { return attempts ? static_cast<double>(aborts) / static_cast<double>(attempts) : 0.0; }
    double post_warmup_sm_ratio() const;
    Mode dominant() const { return post_warmup_sm > post_warmup_du ? Mode::sm : Mode::du; }
};

struct RunResult {
    std::string scenario;
    std::string oracle;
    std::uint32_t nodes = 0;
    std::uint64_t seed = 0;
    sim::SimTime duration{};
    sim::SimTime end_time{};  // after draining

    std::vector<ClassId> class_ids;
    std::vector<MetricsRow> rows;
    std::vector<ClassSummary> classes;

    std::uint64_t requests_issued = 0;
    std::uint64_t requests_completed = 0;
    std::uint64_t commits = 0;
    std::uint64_t rollbacks = 0;
    std::uint64_t conflict_aborts = 0;
    std::uint64_t post_warmup_commits = 0;
    double post_warmup_tps = 0.0;

    std::uint64_t sm_conflict_aborts = 0;
    std::uint32_t max_main_depth = 0;
    std::uint64_t cross_class_conflicts = 0;
    std::uint64_t same_class_conflicts = 0;

    bool converged = false;
    std::vector<std::optional<std::uint64_t>> state_hashes;  // nullopt for replicas that are down
    std::vector<std::uint64_t> lcs;

    ReplicaCounters totals;
    std::optional<THistory> history;

    /// Per-row majority mode per class (SM when sm_ratio > 0.5; rows without attempts repeat the previous mode).
    std::vector<std::vector<Mode>> dominant_modes() const;
};

/// Builds and runs one seeded simulation of a scenario.
RunResult run_scenario(const workload::ScenarioConfig& scenario, const RunOptions& options);

std::string metrics_csv(const RunResult& r);
std::string summary(const RunResult& r);

}  // namespace htr::cluster
