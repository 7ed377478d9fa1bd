#pragma once

#include "htr/core/descriptor.hpp"
#include "htr/core/history.hpp"
#include "htr/core/state.hpp"
#include "htr/core/tx.hpp"
#include "htr/oracle/oracle.hpp"
#include "htr/sim/network.hpp"
#include "htr/sim/scheduler.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <variant>
#include <vector>

namespace htr {

/// A protocol or model invariant was broken during a run.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Submission-time rejection of a request.
class RequestError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Simulated CPU time, in ticks.
struct CostModel {
    std::uint64_t op_cost = 1;           // per read or write
    std::uint64_t cert_cost = 0;         // per readset element
    std::uint64_t apply_cost = 0;        // per update applied
    std::uint64_t deliver_overhead = 0;  // per delivery on the main thread
};

struct ReplicaConfig {
    CostModel costs;
    std::uint32_t worker_cores = 4;
    std::uint64_t du_yield_quantum = 50;
    std::size_t dense_capacity = 0;
#ifdef NDEBUG
    bool verify_certification = false;
#else
    bool verify_certification = true;
#endif
};

struct Response {
    RequestId id = 0;
    std::uint64_t lc = 0;
    bool rolled_back = false;
    Mode mode = Mode::du;  // mode of the final attempt
    std::uint32_t attempts = 0;
};

/// One finished execution attempt, reported by the replica that handled the request.
struct AttemptRecord {
    sim::SimTime at{};
    ClassId class_id = 0;
    Mode mode = Mode::du;
    oracle::Outcome outcome = oracle::Outcome::committed;
    bool updating_request = false;
};

struct ReplicaCounters {
    std::uint64_t oracle_queries = 0;
    std::uint64_t du_attempts = 0;
    std::uint64_t du_commits = 0;
    std::uint64_t du_read_aborts = 0;
    std::uint64_t du_local_cert_aborts = 0;
    std::uint64_t du_global_aborts = 0;
    std::uint64_t sm_attempts = 0;
    std::uint64_t sm_executions = 0;  // at this replica, any origin
    std::uint64_t sm_commits = 0;
    std::uint64_t sm_conflict_aborts = 0;
    std::uint64_t retries = 0;
    std::uint64_t rollbacks = 0;
    std::uint64_t descriptors_delivered = 0;
    std::uint64_t descriptors_committed = 0;
    std::uint64_t broadcasts = 0;
    std::uint64_t certification_checks = 0;
    std::uint32_t max_main_depth = 0;
    std::uint64_t main_busy_ticks = 0;
    std::uint64_t max_main_queue = 0;
};

class Replica final : public sim::Process {
public:
    using Respond = std::function<void(const Response&)>;

    Replica(sim::ProcessId self, sim::Scheduler& scheduler, sim::Network& network, const ProgramTable& programs,
            oracle::TransactionOracle& oracle, ReplicaConfig config, HistoryRecorder* history = nullptr);
    ~Replica() override;

    /// Runs `r` on this replica until it commits or rolls back, then calls `done`.
    void submit(Request r, Respond done);

    void on_deliver(const sim::TobMessage& message) override;
    void on_crash() override;
    sim::Snapshot take_snapshot() const override;
    void install_snapshot(const sim::Snapshot& snapshot) override;
    std::uint64_t retained_floor() const override { return applied_; }

    sim::ProcessId id() const { return self_; }
    const ReplicaState& state() const { return state_; }
    /// Initial population; only valid before the run starts.
    void preload(ObjectId oid, Value v) { state_.preload(oid, v); }
    const ReplicaCounters& counters() const { return counters_; }
    oracle::TransactionOracle& oracle() { return oracle_; }
    std::uint64_t applied() const { return applied_; }
    std::size_t live_runs() const { return runs_.size(); }
    bool quiescent() const { return runs_.empty() && main_queue_.empty() && !main_busy_; }
    oracle::EnvSnapshot env_snapshot() const;

    std::function<void(const AttemptRecord&)> on_attempt;
    /// Called when a delivered descriptor fails certification: (descriptor class, conflicting class).
    std::function<void(ClassId, ClassId)> on_conflict;

private:
    struct Run;
    class DuContext;
    class SmContext;
    struct MainItem {
        std::variant<TxDescriptor, Request> body;
        sim::ProcessId sender;
        std::uint64_t size_bytes = 0;
    };

    void start_attempt(Run& run);
    void start_du(Run& run);
    void grant_core(Run& run);
    void step_du(std::uint64_t run_id);
    void finish_du_execution(std::uint64_t run_id);
    void du_commit(std::uint64_t run_id);
    void du_outcome(Run& run, oracle::Outcome outcome, std::uint64_t commit_cost);
    void start_sm(Run& run);
    void release_core(Run& run);
    void finish_request(Run& run, bool rolled_back);
    void report(const Run& run, oracle::Outcome outcome);

    void pump_main();
    void serve_descriptor(MainItem& item);
    void serve_request(MainItem& item);
    void wake_clock_waiters();
    void collect_garbage();

    bool certify(std::uint64_t start, std::span<const ObjectId> readset);
    bool certify_read(std::uint64_t start, ObjectId oid);
    void enter_main();
    void leave_main() { --main_depth_; }
    std::uint32_t pid() const { return sim::index(self_); }

    sim::ProcessId self_;
    sim::Scheduler& scheduler_;
    sim::Network& network_;
    const ProgramTable& programs_;
    oracle::TransactionOracle& oracle_;
    ReplicaConfig config_;
    HistoryRecorder* history_;

    ReplicaState state_;
    std::uint64_t applied_ = 0;
    ReplicaCounters counters_;

    std::unordered_map<std::uint64_t, std::unique_ptr<Run>> runs_;
    std::uint64_t next_run_id_ = 0;
    std::uint64_t next_tx_counter_ = 0;
    std::unordered_map<TxId, std::uint64_t> awaiting_descriptor_;  // DU tx id -> run
    std::unordered_map<TxId, std::uint64_t> awaiting_sm_;          // SM descriptor id -> run
    std::vector<std::uint64_t> clock_waiters_;
    std::deque<std::uint64_t> core_queue_;
    std::uint32_t free_cores_ = 0;
    std::multiset<std::uint64_t> live_starts_;
    std::size_t live_du_ = 0;

    std::deque<MainItem> main_queue_;
    bool main_busy_ = false;
    std::uint32_t main_depth_ = 0;
};

}  // namespace htr
