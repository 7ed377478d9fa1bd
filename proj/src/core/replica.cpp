#include "htr/core/replica.hpp"

#include <algorithm>
#include <string>

namespace htr {

using oracle::Outcome;
using sim::SimTime;

struct Replica::Run {
    enum class Phase { clock, core, exec, cert, deliver, sm };

    std::uint64_t id = 0;
    Request r;
    Respond done;
    Mode mode = Mode::du;
    Phase phase = Phase::clock;
    std::uint32_t attempts = 0;
    std::uint32_t sm_attempts = 0;

    // Current DU attempt. The context must outlive the coroutine frame.
    TxDescriptor t;
    std::unique_ptr<DuContext> ctx;
    TxTask task;
    bool has_core = false;
    bool live = false;
    std::uint64_t exec_ticks = 0;
    SimTime attempt_at{};    // core grant of the current DU attempt
    std::uint64_t exec_wall = 0;
    SimTime broadcast_at{};  // descriptor broadcast of the current DU attempt
};

class Replica::DuContext final : public TxContext {
public:
    DuContext(Replica& rep, Run& run) : rep_(rep), run_(run) {}
    Mode mode() const override { return Mode::du; }

    /// Ticks charged since the last suspension.
    std::uint64_t accrued = 0;

protected:
    bool should_yield() const override { return accrued >= rep_.config_.du_yield_quantum; }

    void suspend(std::coroutine_handle<>) override {
        const auto delay = accrued;
        run_.exec_ticks += accrued;
        accrued = 0;
        const auto id = run_.id;
        rep_.scheduler_.schedule_after(SimTime{delay}, rep_.self_, [r = &rep_, id] { r->step_du(id); });
    }

    Value do_read(ObjectId oid) override {
        const auto now = rep_.scheduler_.now();
        auto& t = run_.t;
        if (rep_.history_) rep_.history_->invoke(now, rep_.pid(), t.id, OpKind::read, oid);
        t.add_read(oid);
        accrued += rep_.config_.costs.op_cost;
        if (!rep_.certify_read(t.start, oid)) {
            if (rep_.history_) rep_.history_->respond(now, rep_.pid(), t.id, OpKind::read, ResultKind::abort, oid);
            throw ConflictAbort{oid};
        }
        const Value v = rep_.state_.get_object(t.updates, oid);
        if (rep_.history_) rep_.history_->respond(now, rep_.pid(), t.id, OpKind::read, ResultKind::value, oid, v);
        return v;
    }

    void do_write(ObjectId oid, Value v) override {
        const auto now = rep_.scheduler_.now();
        auto& t = run_.t;
        if (rep_.history_) rep_.history_->invoke(now, rep_.pid(), t.id, OpKind::write, oid, v);
        t.updates.put(oid, v);
        accrued += rep_.config_.costs.op_cost;
        if (rep_.history_) rep_.history_->respond(now, rep_.pid(), t.id, OpKind::write, ResultKind::ok, oid);
    }

    void charge(std::uint64_t ticks) override { accrued += ticks; }

private:
    Replica& rep_;
    Run& run_;
};

class Replica::SmContext final : public TxContext {
public:
    SmContext(Replica& rep, TxDescriptor& t, TxId hist) : rep_(rep), t_(t), hist_(hist) {}
    Mode mode() const override { return Mode::sm; }

    std::uint64_t accrued = 0;

protected:
    bool should_yield() const override { return false; }

    void suspend(std::coroutine_handle<>) override {
        throw InvariantError("SM program attempted to suspend");
    }

    Value do_read(ObjectId oid) override {
        const auto now = rep_.scheduler_.now();
        if (rep_.history_) rep_.history_->invoke(now, rep_.pid(), hist_, OpKind::read, oid);
        accrued += rep_.config_.costs.op_cost;
        const Value v = rep_.state_.get_object(t_.updates, oid);
        if (rep_.history_) rep_.history_->respond(now, rep_.pid(), hist_, OpKind::read, ResultKind::value, oid, v);
        return v;
    }

    void do_write(ObjectId oid, Value v) override {
        const auto now = rep_.scheduler_.now();
        if (rep_.history_) rep_.history_->invoke(now, rep_.pid(), hist_, OpKind::write, oid, v);
        t_.updates.put(oid, v);
        accrued += rep_.config_.costs.op_cost;
        if (rep_.history_) rep_.history_->respond(now, rep_.pid(), hist_, OpKind::write, ResultKind::ok, oid);
    }

    void charge(std::uint64_t ticks) override { accrued += ticks; }

private:
    Replica& rep_;
    TxDescriptor& t_;
    TxId hist_;
};

Replica::Replica(sim::ProcessId self, sim::Scheduler& scheduler, sim::Network& network,
                 const ProgramTable& programs, oracle::TransactionOracle& oracle, ReplicaConfig config,
                 HistoryRecorder* history)
    : self_(self),
      scheduler_(scheduler),
      network_(network),
      programs_(programs),
      oracle_(oracle),
      config_(config),
      history_(history),
      state_(config.dense_capacity),
      free_cores_(config.worker_cores) {
    if (config_.worker_cores == 0) throw std::invalid_argument("replica needs at least one worker core");
    if (config_.du_yield_quantum == 0) config_.du_yield_quantum = 1;
    network_.attach(self_, this);
}

Replica::~Replica() = default;

oracle::EnvSnapshot Replica::env_snapshot() const {
    return oracle::EnvSnapshot{network_.utilization(), state_.lc(), live_du_};
}

void Replica::submit(Request r, Respond done) {
    if (r.irrevocable && !r.deterministic) {
        throw RequestError("request " + std::to_string(r.id) + " is irrevocable but not deterministic");
    }
    if (r.program >= programs_.size()) throw RequestError("request " + std::to_string(r.id) + " names no program");
    auto run = std::make_unique<Run>();
    run->id = next_run_id_++;
    run->r = std::move(r);
    run->done = std::move(done);
    auto& ref = *run;
    runs_.emplace(ref.id, std::move(run));
    if (state_.lc() < ref.r.clock) {
        ref.phase = Run::Phase::clock;
        clock_waiters_.push_back(ref.id);
        return;
    }
    start_attempt(ref);
}

void Replica::start_attempt(Run& run) {
    ++run.attempts;
    Mode m;
    if (run.r.read_only) {
        m = Mode::du;
    } else if (run.r.irrevocable) {
        m = Mode::sm;
    } else {
        ++counters_.oracle_queries;
        m = oracle_.query(run.r, env_snapshot());
    }
    run.mode = m;
    if (m == Mode::du) {
        start_du(run);
    } else {
        start_sm(run);
    }
}

void Replica::start_du(Run& run) {
    if (free_cores_ == 0) {
        run.phase = Run::Phase::core;
        core_queue_.push_back(run.id);
        return;
    }
    --free_cores_;
    run.has_core = true;
    run.phase = Run::Phase::core;
    const auto id = run.id;
    scheduler_.schedule_after(SimTime{0}, self_, [this, id] {
        if (auto it = runs_.find(id); it != runs_.end()) grant_core(*it->second);
    });
}

void Replica::grant_core(Run& run) {
    ++counters_.du_attempts;
    run.t = TxDescriptor{};
    run.t.id = ids::du_tx(pid(), ++next_tx_counter_);
    run.t.start = state_.lc();
    run.t.class_id = run.r.class_id;
    run.attempt_at = scheduler_.now();
    run.exec_ticks = 0;
    run.live = true;
    ++live_du_;
    live_starts_.insert(run.t.start);
    run.phase = Run::Phase::exec;
    if (history_) {
        history_->begin(scheduler_.now(), pid(), run.t.id, Mode::du, run.r.id, run.r.class_id, run.t.start);
    }
    run.task.reset();
    run.ctx = std::make_unique<DuContext>(*this, run);
    run.task = programs_.at(run.r.program)(*run.ctx, run.r);
    step_du(run.id);
}

void Replica::step_du(std::uint64_t run_id) {
    auto it = runs_.find(run_id);
    if (it == runs_.end()) return;
    Run& run = *it->second;
    run.task.resume();
    if (!run.task.done()) return;
    const auto pending = run.ctx->accrued;
    run.exec_ticks += pending;
    run.ctx->accrued = 0;
    if (pending == 0) {
        finish_du_execution(run_id);
    } else {
        scheduler_.schedule_after(SimTime{pending}, self_, [this, run_id] { finish_du_execution(run_id); });
    }
}

void Replica::finish_du_execution(std::uint64_t run_id) {
    auto it = runs_.find(run_id);
    if (it == runs_.end()) return;
    Run& run = *it->second;
    const auto error = run.task.error();
    run.task.reset();
    run.exec_wall = (scheduler_.now() - run.attempt_at).ticks;
    if (!error) {
        du_commit(run_id);
        return;
    }
    const auto now = scheduler_.now();
    try {
        std::rethrow_exception(error);
    } catch (const ConflictAbort&) {
        ++counters_.du_read_aborts;
        du_outcome(run, Outcome::aborted_local, 0);
    } catch (const RetrySignal&) {
        if (history_) {
            history_->invoke(now, pid(), run.t.id, OpKind::try_abort);
            history_->respond(now, pid(), run.t.id, OpKind::try_abort, ResultKind::abort);
        }
        ++counters_.retries;
        du_outcome(run, Outcome::retried, 0);
    } catch (const RollbackSignal&) {
        if (history_) {
            history_->invoke(now, pid(), run.t.id, OpKind::try_abort);
            history_->respond(now, pid(), run.t.id, OpKind::try_abort, ResultKind::abort);
        }
        ++counters_.rollbacks;
        du_outcome(run, Outcome::rolled_back, 0);
    }
}

void Replica::du_commit(std::uint64_t run_id) {
    Run& run = *runs_.at(run_id);
    auto& t = run.t;
    const auto now = scheduler_.now();
    if (history_) history_->invoke(now, pid(), t.id, OpKind::try_commit);
    t.normalize();
    if (t.updates.empty()) {
        if (history_) {
            history_->describe(t.id, t);
            history_->respond(now, pid(), t.id, OpKind::try_commit, ResultKind::commit);
        }
        du_outcome(run, Outcome::committed, 0);
        return;
    }
    run.phase = Run::Phase::cert;
    const auto cost = config_.costs.cert_cost * t.readset.size();
    auto local_cert = [this, run_id, cost] {
        auto it = runs_.find(run_id);
        if (it == runs_.end()) return;
        Run& run = *it->second;
        auto& t = run.t;
        const auto now = scheduler_.now();
        if (!certify(t.start, t.readset)) {
            if (history_) history_->respond(now, pid(), t.id, OpKind::try_commit, ResultKind::abort);
            ++counters_.du_local_cert_aborts;
            du_outcome(run, Outcome::aborted_local, cost);
            return;
        }
        if (history_) history_->describe(t.id, t);
        auto payload = encode(t);
        t.stats.message_bytes = payload.size();
        run.phase = Run::Phase::deliver;
        run.broadcast_at = now;
        awaiting_descriptor_[t.id] = run_id;
        ++counters_.broadcasts;
        if (!network_.tob_broadcast(self_, std::move(payload))) {
            throw InvariantError("broadcast from a replica that is not up");
        }
        release_core(run);
    };
    if (cost == 0) {
        local_cert();
    } else {
        scheduler_.schedule_after(SimTime{cost}, self_, std::move(local_cert));
    }
}

void Replica::du_outcome(Run& run, Outcome outcome, std::uint64_t commit_cost) {
    release_core(run);
    if (run.live) {
        run.live = false;
        --live_du_;
        live_starts_.erase(live_starts_.find(run.t.start));
    }
    oracle::OracleSample s;
    s.class_id = run.r.class_id;
    s.mode = Mode::du;
    s.outcome = outcome;
    s.exec_cost = run.exec_wall;
    s.commit_cost = commit_cost;
    s.message_bytes = outcome == Outcome::committed || outcome == Outcome::aborted_global ? run.t.stats.message_bytes : 0;
    oracle_.feed(s);
    if (outcome == Outcome::committed) ++counters_.du_commits;
    if (outcome == Outcome::aborted_global) ++counters_.du_global_aborts;
    report(run, outcome);
    run.ctx.reset();
    if (outcome == Outcome::committed || outcome == Outcome::rolled_back) {
        finish_request(run, outcome == Outcome::rolled_back);
    } else {
        start_attempt(run);
    }
}

void Replica::release_core(Run& run) {
    if (!run.has_core) return;
    run.has_core = false;
    if (core_queue_.empty()) {
        ++free_cores_;
        return;
    }
    const auto next = core_queue_.front();
    core_queue_.pop_front();
    auto it = runs_.find(next);
    if (it == runs_.end()) {
        ++free_cores_;
        return;
    }
    it->second->has_core = true;
    scheduler_.schedule_after(SimTime{0}, self_, [this, next] {
        if (auto it = runs_.find(next); it != runs_.end()) grant_core(*it->second);
    });
}

void Replica::start_sm(Run& run) {
    ++counters_.sm_attempts;
    run.r.attempt = ++run.sm_attempts;
    run.r.broadcast_at = scheduler_.now();
    run.phase = Run::Phase::sm;
    awaiting_sm_[ids::sm_tx(run.r.id, run.r.attempt)] = run.id;
    ++counters_.broadcasts;
    if (!network_.tob_broadcast(self_, encode(run.r))) {
        throw InvariantError("broadcast from a replica that is not up");
    }
}

void Replica::report(const Run& run, Outcome outcome) {
    if (on_attempt) {
        on_attempt(AttemptRecord{scheduler_.now(), run.r.class_id, run.mode, outcome, !run.r.read_only});
    }
}

void Replica::finish_request(Run& run, bool rolled_back) {
    Response resp{run.r.id, state_.lc(), rolled_back, run.mode, run.attempts};
    auto done = std::move(run.done);
    runs_.erase(run.id);
    if (done) done(resp);
}

void Replica::on_deliver(const sim::TobMessage& message) {
    MainItem item;
    item.sender = message.sender;
    item.size_bytes = message.size_bytes;
    if (wire_kind(message.payload) == WireKind::descriptor) {
        item.body = decode_descriptor(message.payload);
    } else {
        item.body = decode_request(message.payload);
    }
    main_queue_.push_back(std::move(item));
    pump_main();
}

void Replica::pump_main() {
    counters_.max_main_queue = std::max<std::uint64_t>(counters_.max_main_queue, main_queue_.size());
    if (main_busy_ || main_queue_.empty()) return;
    MainItem item = std::move(main_queue_.front());
    main_queue_.pop_front();
    main_busy_ = true;
    ++applied_;
    if (std::holds_alternative<TxDescriptor>(item.body)) {
        serve_descriptor(item);
    } else {
        serve_request(item);
    }
}

void Replica::enter_main() {
    ++main_depth_;
    counters_.max_main_depth = std::max(counters_.max_main_depth, main_depth_);
    if (main_depth_ > 1) throw InvariantError("main-thread steps interleaved");
}

bool Replica::certify(std::uint64_t start, std::span<const ObjectId> readset) {
    ++counters_.certification_checks;
    const bool ok = state_.certify(start, readset);
    if (config_.verify_certification) {
        const auto scan = state_.certify_log(start, readset);
        if (scan != CertResult::too_old && (scan == CertResult::success) != ok) {
            throw InvariantError("version certification disagrees with the log scan");
        }
    }
    return ok;
}

bool Replica::certify_read(std::uint64_t start, ObjectId oid) {
    return certify(start, std::span<const ObjectId>(&oid, 1));
}

void Replica::serve_descriptor(MainItem& item) {
    auto& t = std::get<TxDescriptor>(item.body);
    const auto now = scheduler_.now();
    enter_main();
    ++counters_.descriptors_delivered;
    const bool ok = certify(t.start, t.readset);
    auto cost = config_.costs.deliver_overhead + config_.costs.cert_cost * t.readset.size();
    if (ok) {
        state_.commit(t);
        cost += config_.costs.apply_cost * t.updates.size();
        ++counters_.descriptors_committed;
        if (history_) history_->certified(t.id, t.end);
    } else {
        if (history_) history_->delivered(t.id);
        if (on_conflict) {
            if (const auto* e = state_.first_conflict(t.start, t.readset)) on_conflict(t.class_id, e->class_id);
        }
    }
    leave_main();
    if (ok) wake_clock_waiters();
    collect_garbage();

    std::optional<std::uint64_t> origin;
    if (item.sender == self_) {
        if (auto it = awaiting_descriptor_.find(t.id); it != awaiting_descriptor_.end()) {
            origin = it->second;
            awaiting_descriptor_.erase(it);
        }
    }
    const TxId tx = t.id;
    counters_.main_busy_ticks += cost;
    scheduler_.schedule_after(SimTime{cost}, self_, [this, origin, ok, cost, tx] {
        main_busy_ = false;
        if (origin) {
            if (auto it = runs_.find(*origin); it != runs_.end()) {
                if (history_) {
                    history_->respond(scheduler_.now(), pid(), tx, OpKind::try_commit,
                                      ok ? ResultKind::commit : ResultKind::abort);
                }
                du_outcome(*it->second, ok ? Outcome::committed : Outcome::aborted_global, cost);
            }
        }
        pump_main();
    });
    (void)now;
}

void Replica::serve_request(MainItem& item) {
    auto& r = std::get<Request>(item.body);
    const auto now = scheduler_.now();
    enter_main();
    ++counters_.sm_executions;
    TxDescriptor t;
    t.id = ids::sm_tx(r.id, r.attempt);
    t.start = state_.lc();
    t.class_id = r.class_id;
    const TxId hist = ids::sm_execution(t.id, pid());
    if (history_) history_->begin(now, pid(), hist, Mode::sm, r.id, r.class_id, t.start);

    SmContext ctx(*this, t, hist);
    Outcome outcome = Outcome::committed;
    {
        TxTask task = programs_.at(r.program)(ctx, r);
        task.resume();
        if (!task.done()) throw InvariantError("SM program did not run to completion");
        if (const auto error = task.error()) {
            try {
                std::rethrow_exception(error);
            } catch (const RetrySignal&) {
                outcome = Outcome::retried;
            } catch (const RollbackSignal&) {
                outcome = Outcome::rolled_back;
            } catch (const ConflictAbort&) {
                ++counters_.sm_conflict_aborts;
                throw InvariantError("conflict abort inside an SM transaction");
            }
        }
    }
    auto cost = config_.costs.deliver_overhead + ctx.accrued;
    if (outcome == Outcome::committed) {
        if (history_) history_->invoke(now, pid(), hist, OpKind::try_commit);
        t.normalize();
        if (!t.updates.empty()) {
            state_.commit(t);
            cost += config_.costs.apply_cost * t.updates.size();
            ++counters_.sm_commits;
        }
        if (history_) history_->describe(hist, t);
    } else {
        if (outcome == Outcome::retried) ++counters_.retries;
        if (outcome == Outcome::rolled_back) ++counters_.rollbacks;
        if (history_) {
            history_->invoke(now, pid(), hist, OpKind::try_abort);
            history_->respond(now, pid(), hist, OpKind::try_abort, ResultKind::abort);
        }
    }
    leave_main();
    if (!t.updates.empty() && outcome == Outcome::committed) wake_clock_waiters();
    collect_garbage();

    std::optional<std::uint64_t> origin;
    if (item.sender == self_) {
        if (auto it = awaiting_sm_.find(t.id); it != awaiting_sm_.end()) {
            origin = it->second;
            awaiting_sm_.erase(it);
        }
    }
    const auto broadcast_at = r.broadcast_at;
    const auto bytes = item.size_bytes;
    const auto class_id = r.class_id;
    counters_.main_busy_ticks += cost;
    scheduler_.schedule_after(SimTime{cost}, self_, [this, origin, outcome, hist, broadcast_at, bytes, class_id] {
        const auto done_at = scheduler_.now();
        if (outcome == Outcome::committed && history_) {
            history_->respond(done_at, pid(), hist, OpKind::try_commit, ResultKind::commit);
        }
        oracle::OracleSample s;
        s.class_id = class_id;
        s.mode = Mode::sm;
        s.outcome = outcome;
        s.exec_cost = (done_at - broadcast_at).ticks;
        s.message_bytes = bytes;
        oracle_.feed(s);
        main_busy_ = false;
        if (origin) {
            if (auto it = runs_.find(*origin); it != runs_.end()) {
                Run& run = *it->second;
                report(run, outcome);
                if (outcome == Outcome::retried) {
                    start_attempt(run);
                } else {
                    finish_request(run, outcome == Outcome::rolled_back);
                }
            }
        }
        pump_main();
    });
}

void Replica::wake_clock_waiters() {
    if (clock_waiters_.empty()) return;
    std::vector<std::uint64_t> ready;
    std::vector<std::uint64_t> still;
    for (auto id : clock_waiters_) {
        auto it = runs_.find(id);
        if (it == runs_.end()) continue;
        (it->second->r.clock <= state_.lc() ? ready : still).push_back(id);
    }
    clock_waiters_ = std::move(still);
    for (auto id : ready) {
        if (auto it = runs_.find(id); it != runs_.end()) start_attempt(*it->second);
    }
}

void Replica::collect_garbage() {
    const auto floor = live_starts_.empty() ? state_.lc() : std::min(*live_starts_.begin(), state_.lc());
    state_.prune_log(floor);
}

void Replica::on_crash() {
    runs_.clear();
    awaiting_descriptor_.clear();
    awaiting_sm_.clear();
    clock_waiters_.clear();
    core_queue_.clear();
    free_cores_ = config_.worker_cores;
    live_starts_.clear();
    live_du_ = 0;
    main_queue_.clear();
    main_busy_ = false;
    main_depth_ = 0;
}

sim::Snapshot Replica::take_snapshot() const { return sim::Snapshot{state_.encode(), applied_}; }

void Replica::install_snapshot(const sim::Snapshot& snapshot) {
    on_crash();
    state_ = ReplicaState::decode(snapshot.state, config_.dense_capacity);
    applied_ = snapshot.next_seq;
}

}  // namespace htr
