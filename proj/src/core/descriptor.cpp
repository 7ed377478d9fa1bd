#include "htr/core/descriptor.hpp"

#include <algorithm>

namespace htr {

void UpdateSet::put(ObjectId oid, Value value) {
    for (auto& e : entries_) {
        if (e.first == oid) {
            e.second = value;
            return;
        }
    }
    entries_.emplace_back(oid, value);
}

std::optional<Value> UpdateSet::find(ObjectId oid) const {
    for (const auto& e : entries_) {
        if (e.first == oid) return e.second;
    }
    return std::nullopt;
}

void UpdateSet::normalize() {
    std::sort(entries_.begin(), entries_.end(),
              [](const Entry& a, const Entry& b) { return a.first < b.first; });
}

void TxDescriptor::normalize() {
    std::sort(readset.begin(), readset.end());
    readset.erase(std::unique(readset.begin(), readset.end()), readset.end());
    updates.normalize();
}

void ByteWriter::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(std::byte(static_cast<std::uint8_t>(v >> (8 * i))));
}

void ByteWriter::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(std::byte(static_cast<std::uint8_t>(v >> (8 * i))));
}

void ByteReader::need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw WireError("truncated message");
}

std::uint8_t ByteReader::u8() {
    need(1);
    return std::to_integer<std::uint8_t>(in_[pos_++]);
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{std::to_integer<std::uint8_t>(in_[pos_++])} << (8 * i);
    return v;
}

std::uint64_t ByteReader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{std::to_integer<std::uint8_t>(in_[pos_++])} << (8 * i);
    return v;
}

std::vector<std::byte> encode(const TxDescriptor& t) {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(WireKind::descriptor));
    w.u64(t.id);
    w.u64(t.start);
    w.u32(static_cast<std::uint32_t>(t.readset.size()));
    for (auto oid : t.readset) w.u64(oid);
    w.u32(static_cast<std::uint32_t>(t.updates.size()));
    for (const auto& [oid, v] : t.updates.entries()) {
        w.u64(oid);
        w.i64(v.raw());
    }
    w.u32(t.class_id);
    return w.take();
}

std::vector<std::byte> encode(const Request& r) {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(WireKind::request));
    w.u64(r.id);
    w.u32(r.class_id);
    w.u32(r.program);
    w.u64(r.clock);
    w.u8(static_cast<std::uint8_t>((r.read_only ? 1 : 0) | (r.irrevocable ? 2 : 0) | (r.deterministic ? 4 : 0)));
    w.u32(r.attempt);
    w.u64(r.broadcast_at.ticks);
    w.u32(static_cast<std::uint32_t>(r.args.size()));
    for (auto a : r.args) w.i64(a);
    return w.take();
}

WireKind wire_kind(std::span<const std::byte> bytes) {
    if (bytes.empty()) throw WireError("empty message");
    const auto k = std::to_integer<std::uint8_t>(bytes[0]);
    if (k != static_cast<std::uint8_t>(WireKind::descriptor) && k != static_cast<std::uint8_t>(WireKind::request)) {
        throw WireError("unknown message kind");
    }
    return static_cast<WireKind>(k);
}

TxDescriptor decode_descriptor(std::span<const std::byte> bytes) {
    ByteReader r(bytes);
    if (r.u8() != static_cast<std::uint8_t>(WireKind::descriptor)) throw WireError("not a descriptor");
    TxDescriptor t;
    t.id = r.u64();
    t.start = r.u64();
    const auto nr = r.u32();
    t.readset.reserve(nr);
    for (std::uint32_t i = 0; i < nr; ++i) t.readset.push_back(r.u64());
    const auto nu = r.u32();
    for (std::uint32_t i = 0; i < nu; ++i) {
        const auto oid = r.u64();
        t.updates.put(oid, Value{r.i64()});
    }
    t.class_id = r.u32();
    if (!r.done()) throw WireError("trailing bytes in descriptor");
    return t;
}

Request decode_request(std::span<const std::byte> bytes) {
    ByteReader rd(bytes);
    if (rd.u8() != static_cast<std::uint8_t>(WireKind::request)) throw WireError("not a request");
    Request r;
    r.id = rd.u64();
    r.class_id = rd.u32();
    r.program = rd.u32();
    r.clock = rd.u64();
    const auto flags = rd.u8();
    r.read_only = (flags & 1) != 0;
    r.irrevocable = (flags & 2) != 0;
    r.deterministic = (flags & 4) != 0;
    r.attempt = rd.u32();
    r.broadcast_at = sim::SimTime{rd.u64()};
    const auto na = rd.u32();
    r.args.reserve(na);
    for (std::uint32_t i = 0; i < na; ++i) r.args.push_back(rd.i64());
    if (!rd.done()) throw WireError("trailing bytes in request");
    return r;
}

}  // namespace htr
