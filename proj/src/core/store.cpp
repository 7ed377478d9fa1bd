#include "htr/core/store.hpp"

#include <algorithm>

namespace htr {

const ObjectCell ObjectStore::kAbsent{};

void ObjectStore::for_each_set(const std::function<void(ObjectId, const ObjectCell&)>& fn) const {
    for (ObjectId oid = 0; oid < dense_.size(); ++oid) {
        if (!(dense_[oid] == kAbsent)) fn(oid, dense_[oid]);
    }
    std::vector<ObjectId> keys;
    keys.reserve(sparse_.size());
    for (const auto& [oid, cell] : sparse_) {
        if (!(cell == kAbsent)) keys.push_back(oid);
    }
    std::sort(keys.begin(), keys.end());
    for (auto oid : keys) fn(oid, sparse_.at(oid));
}

std::size_t ObjectStore::occupied(ObjectId from, ObjectId to) const {
    std::size_t n = 0;
    for (ObjectId oid = from; oid < to; ++oid) n += get(oid).value.is_empty() ? 0 : 1;
    return n;
}

bool ObjectStore::operator==(const ObjectStore& other) const {
    std::vector<std::pair<ObjectId, ObjectCell>> a, b;
    for_each_set([&](ObjectId oid, const ObjectCell& c) { a.emplace_back(oid, c); });
    other.for_each_set([&](ObjectId oid, const ObjectCell& c) { b.emplace_back(oid, c); });
    return a == b;
}

}  // namespace htr
