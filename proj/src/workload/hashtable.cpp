#include "htr/workload/hashtable.hpp"

#include "htr/oracle/oracle.hpp"

#include <algorithm>
#include <stdexcept>

namespace htr::workload {

std::uint64_t below(std::mt19937_64& rng, std::uint64_t n) {
    const auto x = static_cast<std::uint64_t>(oracle::uniform01(rng) * static_cast<double>(n));
    return std::min(x, n - 1);
}

std::vector<std::int64_t> HashtableArgs::encode() const {
    std::vector<std::int64_t> a;
    a.reserve(3 + read_keys.size() + 2 * toggles.size());
    a.push_back(static_cast<std::int64_t>(sleep));
    a.push_back(static_cast<std::int64_t>(read_keys.size()));
    a.push_back(static_cast<std::int64_t>(toggles.size()));
    for (auto k : read_keys) a.push_back(static_cast<std::int64_t>(k));
    for (const auto& [k, v] : toggles) {
        a.push_back(static_cast<std::int64_t>(k));
        a.push_back(v);
    }
    return a;
}

HashtableArgs HashtableArgs::decode(std::span<const std::int64_t> a) {
    if (a.size() < 3) throw std::invalid_argument("hashtable args too short");
    HashtableArgs h;
    h.sleep = static_cast<std::uint64_t>(a[0]);
    const auto reads = static_cast<std::size_t>(a[1]);
    const auto updates = static_cast<std::size_t>(a[2]);
    if (a.size() != 3 + reads + 2 * updates) throw std::invalid_argument("hashtable args length mismatch");
    for (std::size_t i = 0; i < reads; ++i) h.read_keys.push_back(static_cast<ObjectId>(a[3 + i]));
    for (std::size_t j = 0; j < updates; ++j) {
        h.toggles.emplace_back(static_cast<ObjectId>(a[3 + reads + 2 * j]), a[3 + reads + 2 * j + 1]);
    }
    return h;
}

TxTask hashtable_program(TxContext& ctx, const Request& r) {
    const auto& a = r.args;
    const auto sleep = static_cast<std::uint64_t>(a[0]);
    const auto reads = static_cast<std::size_t>(a[1]);
    const auto updates = static_cast<std::size_t>(a[2]);
    for (std::size_t i = 0; i < reads; ++i) {
        co_await ctx.read(static_cast<ObjectId>(a[3 + i]));
    }
    for (std::size_t j = 0; j < updates; ++j) {
        const auto key = static_cast<ObjectId>(a[3 + reads + 2 * j]);
        const Value cur = co_await ctx.read(key);
        ctx.write(key, cur.is_empty() ? Value{a[3 + reads + 2 * j + 1]} : Value::empty());
    }
    if (sleep > 0) co_await ctx.sleep(sleep);
}

ProgramId register_hashtable(ProgramTable& table) { return table.add(hashtable_program); }

const TxClassParams& pick_class(std::mt19937_64& rng, const std::vector<TxClassParams>& classes) {
    const auto roll = static_cast<std::uint32_t>(below(rng, 1000));
    std::uint32_t acc = 0;
    for (const auto& c : classes) {
        acc += c.probability;
        if (roll < acc) return c;
    }
    return classes.back();
}

Request generate_request(std::mt19937_64& rng, const std::vector<TxClassParams>& classes, ProgramId program,
                         RequestId id, std::uint64_t clock) {
    const auto& p = pick_class(rng, classes);
    HashtableArgs h;
    h.sleep = p.sleep;
    h.read_keys.reserve(p.reads);
    if (p.access_pattern == AccessPattern::contiguous) {
        const auto base = below(rng, p.range);
        for (std::uint32_t i = 0; i < p.reads; ++i) h.read_keys.push_back(p.offset + (base + i) % p.range);
    } else {
        for (std::uint32_t i = 0; i < p.reads; ++i) h.read_keys.push_back(p.offset + below(rng, p.range));
    }
    for (std::uint32_t j = 0; j < p.updates; ++j) {
        const ObjectId key = p.offset + below(rng, p.range);
        const auto value = static_cast<std::int64_t>(rng() >> 2);
        h.toggles.emplace_back(key, value);
    }
    Request r;
    r.id = id;
    r.class_id = p.class_id;
    r.program = program;
    r.args = h.encode();
    r.clock = clock;
    r.read_only = p.updates == 0;
    return r;
}

std::vector<std::pair<ObjectId, Value>> prepopulate(std::uint64_t h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::uint64_t want = h / 2;
    std::vector<std::pair<ObjectId, Value>> out;
    out.reserve(want);
    std::uint64_t chosen = 0;
    for (std::uint64_t slot = 0; slot < h && chosen < want; ++slot) {
        // Select slot with probability (remaining needed) / (remaining slots).
        if (below(rng, h - slot) < want - chosen) {
            out.emplace_back(slot, Value{static_cast<std::int64_t>(rng() >> 2)});
            ++chosen;
        }
    }
    return out;
}

}  // namespace htr::workload
