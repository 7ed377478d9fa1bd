#pragma once

#include "htr/sim/time.hpp"

#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <vector>

namespace htr::sim {

class SchedulerError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Single-threaded discrete-event loop.
///
/// Events at equal time are dispatched in (target, insertion counter) order.
/// Every process has a liveness flag and an epoch; an event addressed to a
/// process is dropped when the process is down at dispatch time or has crashed
/// since the event was scheduled. Environment events are always dispatched.
class Scheduler {
public:
    using Action = std::function<void()>;

    struct TraceEntry {
        SimTime at;
        ProcessId target;
        std::uint64_t counter;
        bool operator==(const TraceEntry&) const = default;
    };

    explicit Scheduler(std::size_t process_count);

    SimTime now() const { return now_; }
    std::size_t process_count() const { return alive_.size(); }

    void schedule(SimTime at, ProcessId target, Action action);
    void schedule_after(SimTime delay, ProcessId target, Action action) {
        schedule(now_ + delay, target, std::move(action));
    }

    /// Dispatches one event; returns false when the queue is empty.
    bool step();
    /// Dispatches all events with time <= limit, then advances the clock to limit.
    void run_until(SimTime limit);
    void run();

    bool empty() const { return queue_.empty(); }
    std::uint64_t dispatched() const { return dispatched_; }

    bool alive(ProcessId p) const { return alive_.at(index(p)); }
    void bring_down(ProcessId p);
    void bring_up(ProcessId p);

    void enable_trace(bool on) { tracing_ = on; }
    const std::vector<TraceEntry>& trace() const { return trace_; }

private:
    struct Entry {
        SimTime at;
        ProcessId target;
        std::uint64_t counter;
        std::uint64_t epoch;
        Action action;
    };
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.at != b.at) return a.at > b.at;
            if (a.target != b.target) return index(a.target) > index(b.target);
            return a.counter > b.counter;
        }
    };

    SimTime now_{};
    std::uint64_t counter_ = 0;
    std::uint64_t dispatched_ = 0;
    std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
    std::vector<bool> alive_;
    std::vector<std::uint64_t> epoch_;
    bool tracing_ = false;
    std::vector<TraceEntry> trace_;
};

}  // namespace htr::sim
