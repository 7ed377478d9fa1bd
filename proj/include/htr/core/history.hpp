#pragma once

#include "htr/core/descriptor.hpp"
#include "htr/core/types.hpp"
#include "htr/sim/time.hpp"

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

namespace htr {

enum class EventKind : std::uint8_t { invoke, respond };
enum class OpKind : std::uint8_t { read, write, try_commit, try_abort };
enum class ResultKind : std::uint8_t { none, value, ok, commit, abort };

struct TEvent {
    std::uint64_t seq = 0;
    sim::SimTime wall{};
    std::uint32_t process = 0;
    TxId tx = 0;
    EventKind kind = EventKind::invoke;
    OpKind op = OpKind::read;
    ObjectId oid = 0;
    ResultKind result = ResultKind::none;  // responses only
    Value value;                            // write argument or read result

    bool operator==(const TEvent&) const = default;
};

struct TxMeta {
    TxId tx = 0;
    std::uint32_t process = 0;
    Mode mode = Mode::du;
    std::optional<RequestId> request_id;
    ClassId class_id = 0;
    std::uint64_t start = 0;
    std::uint64_t end = 0;
    bool certified = false;  // some replica certified and applied the descriptor
    bool delivered = false;  // some replica delivered the descriptor
    std::vector<ObjectId> readset;
    std::vector<std::pair<ObjectId, Value>> updates;

    bool operator==(const TxMeta&) const = default;
};

struct THistory {
    std::uint32_t process_count = 0;
    std::vector<std::pair<ObjectId, Value>> initial;  // objects not at the empty value initially
    std::vector<TEvent> events;                      // ascending seq
    std::vector<TxMeta> meta;

    bool operator==(const THistory&) const = default;
};

/// Collects events from all replicas of one run in dispatch order.
class HistoryRecorder {
public:
    explicit HistoryRecorder(std::uint32_t process_count) { h_.process_count = process_count; }

    void set_initial(std::vector<std::pair<ObjectId, Value>> initial) { h_.initial = std::move(initial); }

    void begin(sim::SimTime now, std::uint32_t process, TxId tx, Mode mode, std::optional<RequestId> request,
               ClassId class_id, std::uint64_t start);
    void invoke(sim::SimTime now, std::uint32_t process, TxId tx, OpKind op, ObjectId oid = 0,
                Value value = Value::empty());
    void respond(sim::SimTime now, std::uint32_t process, TxId tx, OpKind op, ResultKind result, ObjectId oid = 0,
                 Value value = Value::empty());
    void describe(TxId tx, const TxDescriptor& t);
    void certified(TxId tx, std::uint64_t end);
    void delivered(TxId tx);

    const THistory& history() const { return h_; }
    THistory take() { return std::move(h_); }

private:
    TxMeta& meta(TxId tx);
    THistory h_;
    std::uint64_t seq_ = 0;
    std::unordered_map<TxId, std::size_t> index_;
};

}  // namespace htr
