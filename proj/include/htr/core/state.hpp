#pragma once

#include "htr/core/descriptor.hpp"
#include "htr/core/store.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

namespace htr {

enum class CertResult { success, failure, too_old };

struct LogEntry {
    TxId id = 0;
    std::uint64_t start = 0;
    std::uint64_t end = 0;
    ClassId class_id = 0;
    std::vector<ObjectId> writeset;  // sorted
};

/// LC, the committed-transaction log, and the versioned store of one replica.
class ReplicaState {
public:
    explicit ReplicaState(std::size_t dense_capacity = 0) : store_(dense_capacity) {}

    std::uint64_t lc() const { return lc_; }
    const ObjectStore& store() const { return store_; }
    const std::deque<LogEntry>& log() const { return log_; }
    /// Entries with end <= watermark have been pruned.
    std::uint64_t watermark() const { return watermark_; }

    /// Value seen by a transaction: its own buffered write, else the store.
    Value get_object(const UpdateSet& updates, ObjectId oid) const {
        if (auto v = updates.find(oid)) return *v;
        return store_.get(oid).value;
    }

    /// Version-based certification: fails iff some read object changed after `start`.
    bool certify(std::uint64_t start, std::span<const ObjectId> readset) const {
        for (auto oid : readset) {
            if (store_.get(oid).version > start) return false;
        }
        return true;
    }
    bool certify_one(std::uint64_t start, ObjectId oid) const { return store_.get(oid).version <= start; }

    /// Log-scan certification over entries with end > start.
    CertResult certify_log(std::uint64_t start, std::span<const ObjectId> readset) const;

    /// Committed entry (end > start) whose writeset meets the readset, if still in the log.
    const LogEntry* first_conflict(std::uint64_t start, std::span<const ObjectId> readset) const;

    /// Commits an updating transaction: LC += 1, stamps end, appends to the log, applies updates.
    void commit(TxDescriptor& t);

    /// Installs an initial value at version 0 without touching LC or the log.
    void preload(ObjectId oid, Value v) { store_.put(oid, v, 0); }

    void prune_log(std::uint64_t floor);

    /// Stable digest over the sorted store and LC.
    std::uint64_t state_hash() const;
    /// Running digest over every descriptor ever appended (statistics excluded).
    std::uint64_t log_digest() const { return log_digest_; }

    std::vector<std::byte> encode() const;
    static ReplicaState decode(std::span<const std::byte> bytes, std::size_t dense_capacity);

private:
    std::uint64_t lc_ = 0;
    std::deque<LogEntry> log_;
    std::uint64_t watermark_ = 0;
    ObjectStore store_;
    std::uint64_t log_digest_ = 0;
};

std::uint64_t digest_mix(std::uint64_t h, std::uint64_t x);

}  // namespace htr
