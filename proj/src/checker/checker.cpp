#include "htr/checker/checker.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

namespace htr::checker {
namespace {

enum class Status { live, committed, aborted };

struct TxInfo {
    TxId tx = 0;
    const TxMeta* meta = nullptr;
    std::uint32_t process = 0;
    std::vector<std::size_t> events;
    std::uint64_t first_seq = 0;
    std::uint64_t last_seq = 0;
    Status status = Status::live;
    bool commit_pending = false;
    bool updating = false;
};

struct Index {
    std::vector<TxInfo> txs;  // ordered by first event
    std::unordered_map<TxId, std::size_t> pos;

    const TxInfo* find(TxId tx) const {
        auto it = pos.find(tx);
        return it == pos.end() ? nullptr : &txs[it->second];
    }
};

Index build_index(const THistory& h) {
    Index ix;
    std::unordered_map<TxId, const TxMeta*> meta;
    meta.reserve(h.meta.size());
    for (const auto& m : h.meta) meta.emplace(m.tx, &m);
    for (std::size_t i = 0; i < h.events.size(); ++i) {
        const auto& e = h.events[i];
        auto [it, fresh] = ix.pos.emplace(e.tx, ix.txs.size());
        if (fresh) {
            TxInfo t;
            t.tx = e.tx;
            t.process = e.process;
            t.first_seq = e.seq;
            auto m = meta.find(e.tx);
            t.meta = m == meta.end() ? nullptr : m->second;
            ix.txs.push_back(std::move(t));
        }
        auto& t = ix.txs[it->second];
        t.events.push_back(i);
        t.last_seq = e.seq;
        if (e.kind == EventKind::invoke && e.op == OpKind::write) t.updating = true;
    }
    for (auto& t : ix.txs) {
        const auto& last = h.events[t.events.back()];
        if (last.kind == EventKind::respond && last.result == ResultKind::commit) t.status = Status::committed;
        if (last.kind == EventKind::respond && last.result == ResultKind::abort) t.status = Status::aborted;
        t.commit_pending = last.kind == EventKind::invoke && last.op == OpKind::try_commit;
    }
    return ix;
}

std::string op_name(OpKind op) {
    switch (op) {
        case OpKind::read: return "read";
        case OpKind::write: return "write";
        case OpKind::try_commit: return "tryC";
        case OpKind::try_abort: return "tryA";
    }
    return "?";
}

std::string value_text(Value v) { return v.is_empty() ? "nil" : std::to_string(v.raw()); }

std::vector<std::uint64_t> bounds(const TxInfo& t) { return {t.first_seq, t.last_seq}; }

bool committed_updating(const TxInfo& t) { return t.status == Status::committed && t.updating; }

Verdict order_check(const std::vector<TxId>& s, const THistory& completed, bool write_variant) {
    const Index ix = build_index(completed);
    std::vector<const TxInfo*> seq;
    seq.reserve(s.size());
    for (auto id : s) {
        const auto* t = ix.find(id);
        if (!t) throw InputError("serialization names unknown transaction " + std::to_string(id));
        seq.push_back(t);
    }
    // Sweep from the back of S keeping, for each obligation class, the
    // transaction later in S that finished earliest in real time.
    const TxInfo* later_updating = nullptr;
    std::unordered_map<std::uint32_t, const TxInfo*> later_same_process;
    auto violation = [](const TxInfo& before, const TxInfo& after, const char* why) {
        Violation v;
        v.kind = ViolationKind::rt_order;
        v.message = std::string(why) + ": tx " + std::to_string(before.tx) + " precedes tx " +
                    std::to_string(after.tx) + " in real time but follows it in the serialization";
        v.witness = {before.last_seq, after.first_seq};
        v.transactions = {before.tx, after.tx};
        return Verdict::fail(std::move(v));
    };
    for (auto it = seq.rbegin(); it != seq.rend(); ++it) {
        const TxInfo& t = **it;
        const bool cu = committed_updating(t);
        const bool ro_committed = t.status == Status::committed && !t.updating;
        if ((cu || (write_variant && ro_committed)) && later_updating && later_updating->last_seq < t.first_seq) {
            return violation(*later_updating, t, cu ? "committed updating order" : "write real-time order");
        }
        auto& lp = later_same_process[t.process];
        if (lp && lp->last_seq < t.first_seq) return violation(*lp, t, "same-process order");
        if (!lp || t.last_seq < lp->last_seq) lp = &t;
        if (cu && (!later_updating || t.last_seq < later_updating->last_seq)) later_updating = &t;
    }
    return Verdict::ok();
}

}  // namespace

std::string to_string(ViolationKind k) {
    switch (k) {
        case ViolationKind::legality: return "legality";
        case ViolationKind::rt_order: return "rt-order";
        case ViolationKind::completion: return "completion";
        case ViolationKind::structure: return "structure";
    }
    return "?";
}

void validate(const THistory& h) {
    std::unordered_map<TxId, const TxMeta*> meta;
    for (const auto& m : h.meta) {
        if (!meta.emplace(m.tx, &m).second) throw InputError("duplicate metadata for tx " + std::to_string(m.tx));
        if (m.mode == Mode::sm && !m.request_id) {
            throw InputError("SM transaction " + std::to_string(m.tx) + " has no request id");
        }
    }
    struct Cursor {
        bool open = false;  // an invocation awaits its response
        OpKind op = OpKind::read;
        bool finished = false;
        bool terminal_seen = false;
        std::uint32_t process = 0;
    };
    std::unordered_map<TxId, Cursor> cur;
    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < h.events.size(); ++i) {
        const auto& e = h.events[i];
        const auto where = "event " + std::to_string(e.seq) + ": ";
        if (i > 0 && e.seq <= prev) throw InputError(where + "sequence numbers must increase");
        prev = e.seq;
        if (e.process >= h.process_count) throw InputError(where + "process out of range");
        if (!meta.contains(e.tx)) throw InputError(where + "no metadata for tx " + std::to_string(e.tx));
        auto [it, fresh] = cur.emplace(e.tx, Cursor{});
        auto& c = it->second;
        if (fresh) c.process = e.process;
        if (c.process != e.process) throw InputError(where + "transaction changes process");
        if (c.finished) throw InputError(where + "event after the transaction completed");
        if (e.kind == EventKind::invoke) {
            if (c.open) throw InputError(where + "invocation while another is pending");
            if (e.op == OpKind::try_commit || e.op == OpKind::try_abort) {
                if (c.terminal_seen) throw InputError(where + "second tryC/tryA");
                c.terminal_seen = true;
            }
            c.open = true;
            c.op = e.op;
        } else {
            if (!c.open) throw InputError(where + "response without invocation");
            if (e.op != c.op) throw InputError(where + "response does not match its invocation");
            bool fits = false;
            switch (e.op) {
                case OpKind::read: fits = e.result == ResultKind::value || e.result == ResultKind::abort; break;
                case OpKind::write: fits = e.result == ResultKind::ok || e.result == ResultKind::abort; break;
                case OpKind::try_commit: fits = e.result == ResultKind::commit || e.result == ResultKind::abort; break;
                case OpKind::try_abort: fits = e.result == ResultKind::abort; break;
            }
            if (!fits) throw InputError(where + "response kind not allowed for " + op_name(e.op));
            c.open = false;
            if (e.result == ResultKind::commit || e.result == ResultKind::abort) c.finished = true;
        }
    }
}

THistory smreduce(const THistory& h) {
    THistory out = h;
    const Index ix = build_index(h);
    // request id -> (commit response seq, event index) of the earliest SM commit
    std::map<RequestId, std::pair<std::uint64_t, std::size_t>> first;
    std::vector<std::pair<RequestId, std::size_t>> commits;
    for (const auto& t : ix.txs) {
        if (!t.meta || t.meta->mode != Mode::sm || t.status != Status::committed) continue;
        if (!t.meta->request_id) throw InputError("SM transaction " + std::to_string(t.tx) + " has no request id");
        const auto rid = *t.meta->request_id;
        const auto last = t.events.back();
        commits.emplace_back(rid, last);
        auto it = first.find(rid);
        if (it == first.end() || h.events[last].seq < it->second.first) first[rid] = {h.events[last].seq, last};
    }
    for (const auto& [rid, ev] : commits) {
        if (first.at(rid).second != ev) out.events[ev].result = ResultKind::abort;
    }
    return out;
}

Completion complete(const THistory& h) {
    Completion c{h, false};
    const Index ix = build_index(h);
    std::uint64_t seq = h.events.empty() ? 0 : h.events.back().seq + 1;
    const sim::SimTime wall = h.events.empty() ? sim::SimTime{} : h.events.back().wall;
    auto add = [&](const TxInfo& t, EventKind kind, OpKind op, ResultKind result, ObjectId oid) {
        c.history.events.push_back(TEvent{seq++, wall, t.process, t.tx, kind, op, oid, result, Value::empty()});
    };
    for (const auto& t : ix.txs) {
        if (t.status != Status::live) continue;
        const auto& last = h.events[t.events.back()];
        if (t.commit_pending) {
            const bool du = t.meta && t.meta->mode == Mode::du;
            if (du && t.meta->certified) {
                add(t, EventKind::respond, OpKind::try_commit, ResultKind::commit, 0);
            } else {
                if (du) c.crash_truncated = true;
                add(t, EventKind::respond, OpKind::try_commit, ResultKind::abort, 0);
            }
        } else if (last.kind == EventKind::invoke) {
            add(t, EventKind::respond, last.op, ResultKind::abort, last.oid);
        } else {
            add(t, EventKind::invoke, OpKind::try_abort, ResultKind::none, 0);
            add(t, EventKind::respond, OpKind::try_abort, ResultKind::abort, 0);
        }
    }
    return c;
}

Serialization build_serialization(const THistory& completed) {
    Serialization out;
    const Index ix = build_index(completed);
    std::vector<const TxInfo*> updating;
    std::vector<const TxInfo*> others;
    for (const auto& t : ix.txs) {
        if (!t.meta) throw InputError("no metadata for tx " + std::to_string(t.tx));
        (committed_updating(t) ? updating : others).push_back(&t);
    }
    auto structural = [&](std::string msg, std::vector<const TxInfo*> txs) {
        Violation v;
        v.kind = ViolationKind::structure;
        v.message = std::move(msg);
        for (const auto* t : txs) {
            auto b = bounds(*t);
            v.witness.insert(v.witness.end(), b.begin(), b.end());
            v.transactions.push_back(t->tx);
        }
        out.violation = std::move(v);
        out.order.clear();
        return out;
    };

    const std::size_t m = updating.size();
    std::vector<const TxInfo*> by_end(m + 1, nullptr);
    for (const auto* t : updating) {
        const auto e = t->meta->end;
        if (e == 0 || e > m) {
            return structural("committed updating tx " + std::to_string(t->tx) + " has end " + std::to_string(e) +
                                  " outside 1.." + std::to_string(m),
                              {t});
        }
        if (by_end[e]) {
            return structural("end value " + std::to_string(e) + " claimed by two committed updating transactions",
                              {by_end[e], t});
        }
        if (t->meta->start >= e) {
            return structural("committed updating tx " + std::to_string(t->tx) + " has start >= end", {t});
        }
        by_end[e] = t;
    }

    std::vector<std::vector<const TxInfo*>> slots(m + 1);
    for (const auto* t : others) {
        const auto s = t->meta->start;
        if (s > m) {
            return structural("tx " + std::to_string(t->tx) + " starts at " + std::to_string(s) +
                                  " but no committed updating transaction has that end",
                              {t});
        }
        slots[s].push_back(t);
    }
    for (auto& slot : slots) {
        if (slot.size() < 2) continue;
        std::sort(slot.begin(), slot.end(), [](const TxInfo* a, const TxInfo* b) { return a->tx < b->tx; });
        // Give each process's positions back to its transactions in execution order.
        std::map<std::uint32_t, std::vector<std::size_t>> positions;
        std::map<std::uint32_t, std::vector<const TxInfo*>> members;
        for (std::size_t i = 0; i < slot.size(); ++i) {
            positions[slot[i]->process].push_back(i);
            members[slot[i]->process].push_back(slot[i]);
        }
        for (auto& [p, txs] : members) {
            std::sort(txs.begin(), txs.end(),
                      [](const TxInfo* a, const TxInfo* b) { return a->first_seq < b->first_seq; });
            const auto& pos = positions[p];
            for (std::size_t k = 0; k < pos.size(); ++k) slot[pos[k]] = txs[k];
        }
    }
    out.order.reserve(ix.txs.size());
    for (std::size_t e = 0; e <= m; ++e) {
        if (e > 0) out.order.push_back(by_end[e]->tx);
        for (const auto* t : slots[e]) out.order.push_back(t->tx);
    }
    return out;
}

Verdict check_legality(const std::vector<TxId>& s, const THistory& completed) {
    const Index ix = build_index(completed);
    std::unordered_map<ObjectId, Value> committed;
    committed.reserve(completed.initial.size());
    for (const auto& [oid, v] : completed.initial) committed[oid] = v;
    std::unordered_map<ObjectId, Value> local;
    for (auto id : s) {
        const auto* t = ix.find(id);
        if (!t) throw InputError("serialization names unknown transaction " + std::to_string(id));
        local.clear();
        for (auto i : t->events) {
            const auto& e = completed.events[i];
            if (e.kind == EventKind::invoke && e.op == OpKind::write) {
                local[e.oid] = e.value;
            } else if (e.kind == EventKind::respond && e.op == OpKind::read && e.result == ResultKind::value) {
                Value expected = Value::empty();
                if (auto l = local.find(e.oid); l != local.end()) {
                    expected = l->second;
                } else if (auto c = committed.find(e.oid); c != committed.end()) {
                    expected = c->second;
                }
                if (expected != e.value) {
                    Violation v;
                    v.kind = ViolationKind::legality;
                    v.message = "tx " + std::to_string(t->tx) + " read object " + std::to_string(e.oid) + " = " +
                                value_text(e.value) + " but the serialization implies " + value_text(expected);
                    v.witness = {i > 0 ? completed.events[i - 1].seq : e.seq, e.seq};
                    // The invocation is the previous event of the same transaction.
                    for (std::size_t k = 1; k < t->events.size(); ++k) {
                        if (t->events[k] == i) v.witness[0] = completed.events[t->events[k - 1]].seq;
                    }
                    v.transactions = {t->tx};
                    return Verdict::fail(std::move(v));
                }
            }
        }
        if (t->status == Status::committed) {
            for (const auto& [oid, v] : local) committed[oid] = v;
        }
    }
    return Verdict::ok();
}

Verdict check_update_real_time(const std::vector<TxId>& s, const THistory& completed) {
    return order_check(s, completed, false);
}

Verdict check_write_real_time(const std::vector<TxId>& s, const THistory& completed) {
    return order_check(s, completed, true);
}

Verdict check(const THistory& h, OrderVariant variant) {
    validate(h);
    const auto reduced = smreduce(h);
    const auto done = complete(reduced);
    auto ser = build_serialization(done.history);
    Verdict v;
    if (ser.violation) {
        v = Verdict::fail(std::move(*ser.violation));
    } else {
        v = check_legality(ser.order, done.history);
        if (v.pass) {
            v = variant == OrderVariant::update_real_time ? check_update_real_time(ser.order, done.history)
                                                          : check_write_real_time(ser.order, done.history);
        }
    }
    v.crash_truncated = done.crash_truncated;
    return v;
}

THistory write_real_time_counterexample() {
    // p0 commits a write of x; afterwards p1 runs a read-only transaction
    // that began from the older snapshot (start 0) and reads the initial x.
    constexpr ObjectId x = 7;
    constexpr TxId writer = 1;
    constexpr TxId reader = 2;
    THistory h;
    h.process_count = 2;
    h.initial = {{x, Value{0}}};
    const sim::SimTime t0{0};
    std::uint64_t seq = 0;
    auto ev = [&](std::uint32_t p, TxId tx, EventKind k, OpKind op, ResultKind r, ObjectId oid, Value v) {
        h.events.push_back(TEvent{seq, sim::SimTime{seq * 10}, p, tx, k, op, oid, r, v});
        ++seq;
    };
    ev(0, writer, EventKind::invoke, OpKind::read, ResultKind::none, x, Value::empty());
    ev(0, writer, EventKind::respond, OpKind::read, ResultKind::value, x, Value{0});
    ev(0, writer, EventKind::invoke, OpKind::write, ResultKind::none, x, Value{1});
    ev(0, writer, EventKind::respond, OpKind::write, ResultKind::ok, x, Value::empty());
    ev(0, writer, EventKind::invoke, OpKind::try_commit, ResultKind::none, 0, Value::empty());
    ev(0, writer, EventKind::respond, OpKind::try_commit, ResultKind::commit, 0, Value::empty());
    ev(1, reader, EventKind::invoke, OpKind::read, ResultKind::none, x, Value::empty());
    ev(1, reader, EventKind::respond, OpKind::read, ResultKind::value, x, Value{0});
    ev(1, reader, EventKind::invoke, OpKind::try_commit, ResultKind::none, 0, Value::empty());
    ev(1, reader, EventKind::respond, OpKind::try_commit, ResultKind::commit, 0, Value::empty());
    (void)t0;

    TxMeta w;
    w.tx = writer;
    w.process = 0;
    w.mode = Mode::du;
    w.request_id = 100;
    w.start = 0;
    w.end = 1;
    w.certified = true;
    w.delivered = true;
    w.readset = {x};
    w.updates = {{x, Value{1}}};
    TxMeta r;
    r.tx = reader;
    r.process = 1;
    r.mode = Mode::du;
    r.request_id = 101;
    r.start = 0;
    r.readset = {x};
    h.meta = {w, r};
    return h;
}

std::string describe(const Verdict& v) {
    std::ostringstream os;
    if (v.pass) {
        os << "PASS";
    } else {
        os << "VIOLATION " << to_string(v.violation->kind) << ": " << v.violation->message << "\n  witness events:";
        for (auto s : v.violation->witness) os << ' ' << s;
        os << "\n  transactions:";
        for (auto t : v.violation->transactions) os << ' ' << t;
    }
    if (v.crash_truncated) os << "\n  note: crash-truncated (commit-pending DU transactions completed as aborted)";
    return os.str();
}

}  // namespace htr::checker
