#include "htr/checker/corrupt.hpp"

#include "htr/checker/checker.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

namespace htr::checker {

std::string to_string(Corruption c) {
    switch (c) {
        case Corruption::value_forgery: return "value-forgery";
        case Corruption::order_forgery: return "order-forgery";
        case Corruption::double_sm_commit: return "double-sm-commit";
    }
    return "?";
}

namespace {

struct Span {
    std::uint64_t first = 0;
    std::uint64_t last = 0;
    bool committed = false;
    bool updating = false;
    std::size_t last_index = 0;
};

std::unordered_map<TxId, Span> spans(const THistory& h) {
    std::unordered_map<TxId, Span> out;
    for (std::size_t i = 0; i < h.events.size(); ++i) {
        const auto& e = h.events[i];
        auto [it, fresh] = out.emplace(e.tx, Span{});
        if (fresh) it->second.first = e.seq;
        it->second.last = e.seq;
        it->second.last_index = i;
        if (e.kind == EventKind::invoke && e.op == OpKind::write) it->second.updating = true;
        it->second.committed = e.kind == EventKind::respond && e.result == ResultKind::commit;
    }
    return out;
}

std::optional<Corrupted> forge_value(const THistory& h, std::size_t k) {
    std::size_t seen = 0;
    for (std::size_t i = 0; i < h.events.size(); ++i) {
        const auto& e = h.events[i];
        if (e.kind != EventKind::respond || e.op != OpKind::read || e.result != ResultKind::value) continue;
        if (seen++ != k) continue;
        Corrupted c{h, {}};
        auto& f = c.history.events[i];
        // One more than the largest value anywhere in the history cannot have been written.
        std::int64_t top = 0;
        for (const auto& x : h.events) {
            if (!x.value.is_empty()) top = std::max(top, x.value.raw());
        }
        for (const auto& [oid, v] : h.initial) {
            if (!v.is_empty()) top = std::max(top, v.raw());
        }
        f.value = Value{top + 1};
        c.touched = {i > 0 ? h.events[i - 1].seq : f.seq, f.seq};
        return c;
    }
    return std::nullopt;
}

std::optional<Corrupted> forge_order(const THistory& h, std::size_t k) {
    const auto reduced = smreduce(h);
    const auto sp = spans(reduced);
    std::map<std::uint64_t, TxId> by_end;  // surviving committed updating transactions
    for (const auto& m : reduced.meta) {
        auto it = sp.find(m.tx);
        if (it == sp.end() || !it->second.committed || !it->second.updating) continue;
        by_end[m.end] = m.tx;
    }
    std::size_t seen = 0;
    for (auto it = by_end.begin(); it != by_end.end(); ++it) {
        auto nx = std::next(it);
        if (nx == by_end.end()) break;
        const auto& a = sp.at(it->second);
        const auto& b = sp.at(nx->second);
        if (!(a.last < b.first)) continue;
        if (seen++ != k) continue;
        Corrupted c{h, {a.last, b.first}};
        const auto ea = it->first;
        const auto eb = nx->first;
        for (auto& m : c.history.meta) {
            if (m.end == ea) {
                m.end = eb;
            } else if (m.end == eb) {
                m.end = ea;
            }
        }
        return c;
    }
    return std::nullopt;
}

std::optional<Corrupted> double_commit(const THistory& h, std::size_t k) {
    const auto sp = spans(h);
    std::map<RequestId, std::vector<const TxMeta*>> copies;
    RequestId top = 0;
    for (const auto& m : h.meta) {
        if (m.request_id) top = std::max(top, *m.request_id);
        if (m.mode != Mode::sm || !m.request_id) continue;
        auto it = sp.find(m.tx);
        if (it == sp.end() || !it->second.committed || !it->second.updating) continue;
        copies[*m.request_id].push_back(&m);
    }
    std::size_t seen = 0;
    for (auto& [rid, list] : copies) {
        if (list.size() < 2) continue;
        if (seen++ != k) continue;
        std::sort(list.begin(), list.end(),
                  [&](const TxMeta* a, const TxMeta* b) { return sp.at(a->tx).last < sp.at(b->tx).last; });
        const TxId victim = list[1]->tx;
        Corrupted c{h, {sp.at(victim).first, sp.at(victim).last}};
        for (auto& m : c.history.meta) {
            if (m.tx == victim) m.request_id = top + 1;
        }
        return c;
    }
    return std::nullopt;
}

}  // namespace

std::optional<Corrupted> corrupt(const THistory& h, Corruption kind, std::size_t k) {
    switch (kind) {
        case Corruption::value_forgery: return forge_value(h, k);
        case Corruption::order_forgery: return forge_order(h, k);
        case Corruption::double_sm_commit: return double_commit(h, k);
    }
    return std::nullopt;
}

}  // namespace htr::checker
