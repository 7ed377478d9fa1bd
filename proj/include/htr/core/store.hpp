#pragma once

#include "htr/core/types.hpp"

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

namespace htr {

struct ObjectCell {
    Value value;
    std::uint64_t version = 0;  // LC at the last modification
    bool operator==(const ObjectCell&) const = default;
};

/// Versioned object store. Ids below `dense_capacity` live in a flat array;
/// anything else falls back to a hash map.
class ObjectStore {
public:
    explicit ObjectStore(std::size_t dense_capacity = 0) : dense_(dense_capacity) {}

    const ObjectCell& get(ObjectId oid) const {
        if (oid < dense_.size()) return dense_[oid];
        auto it = sparse_.find(oid);
        return it == sparse_.end() ? kAbsent : it->second;
    }

    void put(ObjectId oid, Value value, std::uint64_t version) {
        ObjectCell& cell = oid < dense_.size() ? dense_[oid] : sparse_[oid];
        cell.value = value;
        cell.version = version;
    }

    std::size_t dense_capacity() const { return dense_.size(); }

    /// Visits every cell that differs from the never-written state, in ascending id order.
    void for_each_set(const std::function<void(ObjectId, const ObjectCell&)>& fn) const;

    std::size_t occupied(ObjectId from, ObjectId to) const;

    bool operator==(const ObjectStore& other) const;

private:
    static const ObjectCell kAbsent;
    std::vector<ObjectCell> dense_;
    std::unordered_map<ObjectId, ObjectCell> sparse_;
};

}  // namespace htr
