#include "htr/sim/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace htr::sim {
namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string name(ProcessId p) { return "p" + std::to_string(index(p)); }

}  // namespace

Network::Network(Scheduler& scheduler, NetConfig config)
    : scheduler_(scheduler),
      config_(config),
      processes_(scheduler.process_count(), nullptr),
      state_(scheduler.process_count(), State::up),
      next_(scheduler.process_count(), 0),
      horizon_(scheduler.process_count(), SimTime{}) {}

void Network::attach(ProcessId p, Process* process) { processes_.at(index(p)) = process; }

SimTime Network::latency(std::uint64_t seq, ProcessId p, std::uint64_t size) const {
    std::uint64_t t = config_.base_latency.ticks;
    t += static_cast<std::uint64_t>(std::llround(config_.per_byte_latency * static_cast<double>(size)));
    if (config_.jitter.ticks > 0) {
        const auto h = mix64(config_.jitter_seed ^ mix64(seq * 0x100000001b3ULL + index(p)));
        t += h % (config_.jitter.ticks + 1);
    }
    return SimTime{t};
}

std::optional<std::uint64_t> Network::tob_broadcast(ProcessId sender, std::vector<std::byte> payload) {
    if (state(sender) != State::up) return std::nullopt;

    const auto size = static_cast<std::uint64_t>(payload.size());
    SimTime ready = scheduler_.now();
    if (config_.bandwidth_bytes_per_tick > 0) {
        const auto tx = (size + config_.bandwidth_bytes_per_tick - 1) / config_.bandwidth_bytes_per_tick;
        const SimTime begin = std::max(scheduler_.now(), link_free_);
        ready = begin + SimTime{tx};
        link_free_ = ready;
        if (tx > 0) busy_.emplace_back(begin, ready);
    }

    const auto seq = next_seq_++;
    bytes_ += size;
    log_.push_back(Ordered{TobMessage{std::move(payload), sender, size, seq}, ready});
    for (std::uint32_t i = 0; i < processes_.size(); ++i) {
        if (state_[i] == State::up) schedule_delivery(process(i), seq);
    }
    if ((seq & 1023) == 1023) prune();
    return seq;
}

void Network::schedule_delivery(ProcessId p, std::uint64_t seq) {
    const auto& entry = at_seq(seq);
    const auto i = index(p);
    SimTime at = entry.ready + latency(seq, p, entry.message.size_bytes);
    at = std::max({at, horizon_[i], scheduler_.now()});
    horizon_[i] = at;
    scheduler_.schedule(at, p, [this, p, seq] { deliver(p, seq); });
}

void Network::deliver(ProcessId p, std::uint64_t seq) {
    const auto i = index(p);
    if (state_[i] != State::up || seq != next_[i]) return;
    ++next_[i];
    processes_[i]->on_deliver(at_seq(seq).message);
}

void Network::crash(ProcessId p, SimTime at) {
    scheduler_.schedule(at, kEnvironment, [this, p] {
        if (state(p) != State::up) throw ConfigError("crash of " + name(p) + " which is not up");
        const auto faulty = static_cast<std::size_t>(
            std::count_if(state_.begin(), state_.end(), [](State s) { return s != State::up; }));
        if (faulty + 1 > max_faulty()) {
            throw ConfigError("crashing " + name(p) + " exceeds the fault bound of " +
                              std::to_string(max_faulty()) + " for n=" + std::to_string(process_count()));
        }
        state_[index(p)] = State::down;
        scheduler_.bring_down(p);
        processes_[index(p)]->on_crash();
        if (on_crash_hook) on_crash_hook(p);
    });
}

void Network::recover(ProcessId p, SimTime at) {
    scheduler_.schedule(at, kEnvironment, [this, p] {
        if (state(p) != State::down) throw ConfigError("recover of " + name(p) + " which is not down");
        std::optional<std::uint32_t> peer;
        for (std::uint32_t i = 0; i < processes_.size(); ++i) {
            if (state_[i] == State::up) {
                peer = i;
                break;
            }
        }
        if (!peer) throw ConfigError("no correct peer to recover " + name(p) + " from");
        state_[index(p)] = State::restoring;
        auto snapshot = processes_[*peer]->take_snapshot();
        pending_restores_.push_back(snapshot.next_seq);
        scheduler_.schedule_after(config_.snapshot_latency, kEnvironment,
                                  [this, p, snap = std::move(snapshot)] {
                                      const auto i = index(p);
                                      auto it = std::find(pending_restores_.begin(), pending_restores_.end(),
                                                          snap.next_seq);
                                      if (it != pending_restores_.end()) pending_restores_.erase(it);
                                      processes_[i]->install_snapshot(snap);
                                      state_[i] = State::up;
                                      scheduler_.bring_up(p);
                                      next_[i] = snap.next_seq;
                                      horizon_[i] = scheduler_.now();
                                      for (auto s = snap.next_seq; s < next_seq_; ++s) schedule_delivery(p, s);
                                      if (on_recover_hook) on_recover_hook(p);
                                  });
    });
}

double Network::utilization() const {
    if (config_.bandwidth_bytes_per_tick == 0 || config_.utilization_window.ticks == 0) return 0.0;
    const auto now = scheduler_.now();
    const auto window = config_.utilization_window;
    const SimTime from = now.ticks > window.ticks ? now - window : SimTime{};
    std::uint64_t busy = 0;
    for (auto it = busy_.rbegin(); it != busy_.rend(); ++it) {
        if (it->second <= from) break;
        const auto b = std::max(it->first, from);
        const auto e = std::min(it->second, now);
        if (e > b) busy += (e - b).ticks;
    }
    const auto span = (now - from).ticks;
    if (span == 0) return 0.0;
    return std::min(1.0, static_cast<double>(busy) / static_cast<double>(window.ticks));
}

void Network::prune() {
    std::uint64_t floor = next_seq_;
    for (std::uint32_t i = 0; i < processes_.size(); ++i) {
        if (state_[i] == State::up) floor = std::min({floor, next_[i], processes_[i]->retained_floor()});
    }
    for (auto s : pending_restores_) floor = std::min(floor, s);
    while (log_base_ < floor && !log_.empty()) {
        log_.pop_front();
        ++log_base_;
    }
    const auto now = scheduler_.now();
    const SimTime from = now.ticks > config_.utilization_window.ticks ? now - config_.utilization_window : SimTime{};
    while (!busy_.empty() && busy_.front().second < from) busy_.pop_front();
}

}  // namespace htr::sim
