#pragma once

#include "htr/sim/scheduler.hpp"
#include "htr/sim/time.hpp"

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace htr::sim {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct NetConfig {
    SimTime base_latency{200};
    double per_byte_latency = 0.0;               // ticks per byte
    std::uint64_t bandwidth_bytes_per_tick = 0;  // 0 disables the link model
    std::uint64_t jitter_seed = 0;
    SimTime jitter{0};                           // upper bound of per-delivery jitter
    SimTime utilization_window{10'000};
    SimTime snapshot_latency{1'000};
};

struct TobMessage {
    std::vector<std::byte> payload;
    ProcessId sender{};
    std::uint64_t size_bytes = 0;
    std::uint64_t seq = 0;
};

struct Snapshot {
    std::vector<std::byte> state;
    std::uint64_t next_seq = 0;
};

/// A participant of the simulated network.
class Process {
public:
    virtual ~Process() = default;
    virtual void on_deliver(const TobMessage& message) = 0;
    virtual void on_crash() = 0;
    virtual Snapshot take_snapshot() const = 0;
    virtual void install_snapshot(const Snapshot& snapshot) = 0;
    /// Lowest sequence number this process could still need after a peer recovers from it.
    virtual std::uint64_t retained_floor() const = 0;
};

/// Total order broadcast over a simulator-owned sequencer, plus crash-stop
/// failures with snapshot-based rejoin.
///
/// Sequence numbers are assigned when a broadcast is accepted, so the order is
/// fixed before any process delivers. Each process delivers in sequence order
/// at base latency + size cost + jitter, never earlier than its previous delivery.
class Network {
public:
    enum class State { up, down, restoring };

    Network(Scheduler& scheduler, NetConfig config);

    void attach(ProcessId p, Process* process);

    /// Returns the assigned sequence number, or nullopt when the sender is not up.
    std::optional<std::uint64_t> tob_broadcast(ProcessId sender, std::vector<std::byte> payload);

    void crash(ProcessId p, SimTime at);
    void recover(ProcessId p, SimTime at);

    State state(ProcessId p) const { return state_.at(index(p)); }
    bool up(ProcessId p) const { return state(p) == State::up; }
    std::size_t process_count() const { return processes_.size(); }
    std::size_t max_faulty() const { return (process_count() + 1) / 2 - 1; }

    /// Fraction of the trailing utilization window the sequencer link was busy.
    double utilization() const;

    std::uint64_t ordered_count() const { return next_seq_; }
    std::uint64_t bytes_broadcast() const { return bytes_; }
    std::uint64_t next_delivery(ProcessId p) const { return next_.at(index(p)); }
    const NetConfig& config() const { return config_; }

    std::function<void(ProcessId)> on_crash_hook;
    std::function<void(ProcessId)> on_recover_hook;

private:
    struct Ordered {
        TobMessage message;
        SimTime ready;  // time the sequencer finished ordering it
    };

    SimTime latency(std::uint64_t seq, ProcessId p, std::uint64_t size) const;
    void schedule_delivery(ProcessId p, std::uint64_t seq);
    void deliver(ProcessId p, std::uint64_t seq);
    const Ordered& at_seq(std::uint64_t seq) const { return log_.at(seq - log_base_); }
    void prune();

    Scheduler& scheduler_;
    NetConfig config_;
    std::vector<Process*> processes_;
    std::vector<State> state_;
    std::vector<std::uint64_t> next_;
    std::vector<SimTime> horizon_;
    std::deque<Ordered> log_;
    std::uint64_t log_base_ = 0;
    std::uint64_t next_seq_ = 0;
    std::uint64_t bytes_ = 0;
    SimTime link_free_{};
    std::deque<std::pair<SimTime, SimTime>> busy_;
    std::vector<std::uint64_t> pending_restores_;
};

}  // namespace htr::sim
