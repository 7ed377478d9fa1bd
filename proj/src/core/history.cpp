#include "htr/core/history.hpp"

#include <stdexcept>
#include <string>

namespace htr {

TxMeta& HistoryRecorder::meta(TxId tx) {
    auto it = index_.find(tx);
    if (it == index_.end()) throw std::logic_error("history: unknown transaction " + std::to_string(tx));
    return h_.meta[it->second];
}

void HistoryRecorder::begin(sim::SimTime, std::uint32_t process, TxId tx, Mode mode,
                            std::optional<RequestId> request, ClassId class_id, std::uint64_t start) {
    if (index_.contains(tx)) throw std::logic_error("history: duplicate transaction " + std::to_string(tx));
    index_.emplace(tx, h_.meta.size());
    TxMeta m;
    m.tx = tx;
    m.process = process;
    m.mode = mode;
    m.request_id = request;
    m.class_id = class_id;
    m.start = start;
    h_.meta.push_back(std::move(m));
}

void HistoryRecorder::invoke(sim::SimTime now, std::uint32_t process, TxId tx, OpKind op, ObjectId oid,
                             Value value) {
    h_.events.push_back(TEvent{seq_++, now, process, tx, EventKind::invoke, op, oid, ResultKind::none, value});
}

void HistoryRecorder::respond(sim::SimTime now, std::uint32_t process, TxId tx, OpKind op, ResultKind result,
                              ObjectId oid, Value value) {
    h_.events.push_back(TEvent{seq_++, now, process, tx, EventKind::respond, op, oid, result, value});
}

void HistoryRecorder::describe(TxId tx, const TxDescriptor& t) {
    auto& m = meta(tx);
    m.start = t.start;
    m.end = t.end;
    m.readset = t.readset;
    m.updates = t.updates.entries();
}

void HistoryRecorder::certified(TxId tx, std::uint64_t end) {
    auto& m = meta(tx);
    m.certified = true;
    m.delivered = true;
    m.end = end;
}

void HistoryRecorder::delivered(TxId tx) { meta(tx).delivered = true; }

}  // namespace htr
