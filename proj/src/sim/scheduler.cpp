#include "htr/sim/scheduler.hpp"

#include <string>

namespace htr::sim {

Scheduler::Scheduler(std::size_t process_count)
    : alive_(process_count, true), epoch_(process_count, 0) {
    if (process_count == 0) throw SchedulerError("scheduler needs at least one process");
}

void Scheduler::schedule(SimTime at, ProcessId target, Action action) {
    if (at < now_) {
        throw SchedulerError("event scheduled in the past: at=" + std::to_string(at.ticks) +
                             " now=" + std::to_string(now_.ticks));
    }
    std::uint64_t epoch = 0;
    if (target != kEnvironment) epoch = epoch_.at(index(target));
    queue_.push(Entry{at, target, counter_++, epoch, std::move(action)});
}

bool Scheduler::step() {
    if (queue_.empty()) return false;
    // priority_queue::top is const; the action is moved out before pop.
    Entry e = std::move(const_cast<Entry&>(queue_.top()));
    queue_.pop();
    now_ = e.at;
    if (e.target != kEnvironment) {
        const auto i = index(e.target);
        if (!alive_[i] || epoch_[i] != e.epoch) return true;
    }
    ++dispatched_;
    if (tracing_) trace_.push_back(TraceEntry{e.at, e.target, e.counter});
    e.action();
    return true;
}

void Scheduler::run_until(SimTime limit) {
    while (!queue_.empty() && queue_.top().at <= limit) step();
    if (now_ < limit) now_ = limit;
}

void Scheduler::run() {
    while (step()) {
    }
}

void Scheduler::bring_down(ProcessId p) {
    const auto i = index(p);
    alive_.at(i) = false;
    ++epoch_[i];
}

void Scheduler::bring_up(ProcessId p) { alive_.at(index(p)) = true; }

}  // namespace htr::sim
