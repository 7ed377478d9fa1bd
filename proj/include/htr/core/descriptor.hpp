#pragma once

#include "htr/core/types.hpp"
#include "htr/sim/time.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace htr {

/// Write buffer of a transaction: one entry per object, the last write wins.
class UpdateSet {
public:
    using Entry = std::pair<ObjectId, Value>;

    void put(ObjectId oid, Value value);
    std::optional<Value> find(ObjectId oid) const;
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    const std::vector<Entry>& entries() const { return entries_; }
    /// Orders entries by object id; the wire form and the digest use this order.
    void normalize();
    void clear() { entries_.clear(); }

    bool operator==(const UpdateSet&) const = default;

private:
    std::vector<Entry> entries_;
};

/// Statistics gathered during one run; never serialized.
struct TxStats {
    std::uint64_t exec_ticks = 0;
    std::uint64_t commit_ticks = 0;
    std::uint64_t message_bytes = 0;
};

struct TxDescriptor {
    TxId id = 0;
    std::uint64_t start = 0;
    std::uint64_t end = 0;
    std::vector<ObjectId> readset;  // sorted and unique once normalized
    UpdateSet updates;
    ClassId class_id = 0;
    TxStats stats;

    void add_read(ObjectId oid) { readset.push_back(oid); }
    void normalize();
    bool read_only() const { return updates.empty(); }

    /// Equality excluding the statistics field.
    bool same_as(const TxDescriptor& o) const {
        return id == o.id && start == o.start && end == o.end && readset == o.readset &&
               updates == o.updates && class_id == o.class_id;
    }
};

using ProgramId = std::uint32_t;

struct Request {
    RequestId id = 0;
    ClassId class_id = 0;
    ProgramId program = 0;
    std::vector<std::int64_t> args;
    std::uint64_t clock = 0;
    bool read_only = false;
    bool irrevocable = false;
    bool deterministic = true;
    // Set by the originator when it broadcasts the request for SM execution.
    std::uint32_t attempt = 0;
    sim::SimTime broadcast_at{};
};

class WireError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class WireKind : std::uint8_t { descriptor = 'D', request = 'R' };

std::vector<std::byte> encode(const TxDescriptor& t);
std::vector<std::byte> encode(const Request& r);

WireKind wire_kind(std::span<const std::byte> bytes);
TxDescriptor decode_descriptor(std::span<const std::byte> bytes);
Request decode_request(std::span<const std::byte> bytes);

/// Little-endian, length-prefixed primitive codec shared by the wire and snapshot formats.
class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(std::byte{v}); }
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    std::vector<std::byte> take() { return std::move(out_); }
    std::size_t size() const { return out_.size(); }

private:
    std::vector<std::byte> out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::byte> in) : in_(in) {}
    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    bool done() const { return pos_ == in_.size(); }

private:
    void need(std::size_t n) const;
    std::span<const std::byte> in_;
    std::size_t pos_ = 0;
};

}  // namespace htr
