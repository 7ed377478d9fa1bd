#include "htr/core/state.hpp"

#include <algorithm>

namespace htr {

std::uint64_t digest_mix(std::uint64_t h, std::uint64_t x) {
    std::uint64_t z = h ^ (x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

bool meets(const std::vector<ObjectId>& writeset, std::span<const ObjectId> readset) {
    for (auto oid : readset) {
        if (std::binary_search(writeset.begin(), writeset.end(), oid)) return true;
    }
    return false;
}

}  // namespace

CertResult ReplicaState::certify_log(std::uint64_t start, std::span<const ObjectId> readset) const {
    if (start < watermark_) return CertResult::too_old;
    for (auto it = log_.rbegin(); it != log_.rend() && it->end > start; ++it) {
        if (meets(it->writeset, readset)) return CertResult::failure;
    }
    return CertResult::success;
}

const LogEntry* ReplicaState::first_conflict(std::uint64_t start, std::span<const ObjectId> readset) const {
    const LogEntry* found = nullptr;
    for (auto it = log_.rbegin(); it != log_.rend() && it->end > start; ++it) {
        if (meets(it->writeset, readset)) found = &*it;
    }
    return found;
}

void ReplicaState::commit(TxDescriptor& t) {
    ++lc_;
    t.end = lc_;
    LogEntry e{t.id, t.start, t.end, t.class_id, {}};
    e.writeset.reserve(t.updates.size());
    for (const auto& [oid, v] : t.updates.entries()) {
        e.writeset.push_back(oid);
        store_.put(oid, v, lc_);
    }
    std::sort(e.writeset.begin(), e.writeset.end());
    log_.push_back(std::move(e));

    auto h = digest_mix(log_digest_, t.id);
    h = digest_mix(h, t.start);
    h = digest_mix(h, t.end);
    h = digest_mix(h, t.class_id);
    for (auto oid : t.readset) h = digest_mix(h, oid);
    h = digest_mix(h, 0xffff'ffff'ffff'ffffULL);
    for (const auto& [oid, v] : t.updates.entries()) {
        h = digest_mix(h, oid);
        h = digest_mix(h, static_cast<std::uint64_t>(v.raw()));
    }
    log_digest_ = h;
}

void ReplicaState::prune_log(std::uint64_t floor) {
    while (!log_.empty() && log_.front().end <= floor) {
        watermark_ = log_.front().end;
        log_.pop_front();
    }
}

std::uint64_t ReplicaState::state_hash() const {
    std::uint64_t h = digest_mix(0, lc_);
    store_.for_each_set([&](ObjectId oid, const ObjectCell& c) {
        h = digest_mix(h, oid);
        h = digest_mix(h, static_cast<std::uint64_t>(c.value.raw()));
        h = digest_mix(h, c.version);
    });
    return h;
}

std::vector<std::byte> ReplicaState::encode() const {
    ByteWriter w;
    w.u64(lc_);
    w.u64(watermark_);
    w.u64(log_digest_);
    w.u64(log_.size());
    for (const auto& e : log_) {
        w.u64(e.id);
        w.u64(e.start);
        w.u64(e.end);
        w.u32(e.class_id);
        w.u32(static_cast<std::uint32_t>(e.writeset.size()));
        for (auto oid : e.writeset) w.u64(oid);
    }
    std::uint64_t cells = 0;
    store_.for_each_set([&](ObjectId, const ObjectCell&) { ++cells; });
    w.u64(cells);
    store_.for_each_set([&](ObjectId oid, const ObjectCell& c) {
        w.u64(oid);
        w.i64(c.value.raw());
        w.u64(c.version);
    });
    return w.take();
}

ReplicaState ReplicaState::decode(std::span<const std::byte> bytes, std::size_t dense_capacity) {
    ByteReader r(bytes);
    ReplicaState s(dense_capacity);
    s.lc_ = r.u64();
    s.watermark_ = r.u64();
    s.log_digest_ = r.u64();
    const auto n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
        LogEntry e;
        e.id = r.u64();
        e.start = r.u64();
        e.end = r.u64();
        e.class_id = r.u32();
        const auto w = r.u32();
        e.writeset.reserve(w);
        for (std::uint32_t j = 0; j < w; ++j) e.writeset.push_back(r.u64());
        s.log_.push_back(std::move(e));
    }
    const auto cells = r.u64();
    for (std::uint64_t i = 0; i < cells; ++i) {
        const auto oid = r.u64();
        const auto v = r.i64();
        const auto ver = r.u64();
        s.store_.put(oid, Value{v}, ver);
    }
    if (!r.done()) throw WireError("trailing bytes in snapshot");
    return s;
}

}  // namespace htr
