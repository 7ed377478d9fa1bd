#pragma once

#include "htr/core/descriptor.hpp"
#include "htr/core/tx.hpp"
#include "htr/workload/scenario.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace htr::workload {

/// Uniform integer in [0, n).
std::uint64_t below(std::mt19937_64& rng, std::uint64_t n);

/// Argument layout of a hashtable request:
///   [sleep, reads, updates, read keys..., (update key, insert value)...]
struct HashtableArgs {
    std::uint64_t sleep = 0;
    std::vector<ObjectId> read_keys;
    std::vector<std::pair<ObjectId, std::int64_t>> toggles;

    std::vector<std::int64_t> encode() const;
    static HashtableArgs decode(std::span<const std::int64_t> args);
};

/// Reads every read key, then toggles each update key (insert the pre-drawn
/// value into an empty slot, remove an occupied one), then sleeps.
TxTask hashtable_program(TxContext& ctx, const Request& r);

ProgramId register_hashtable(ProgramTable& table);

/// Class chosen by per-mille weight.
const TxClassParams& pick_class(std::mt19937_64& rng, const std::vector<TxClassParams>& classes);

/// Request with keys and toggle values drawn up front so SM executions replay identically.
Request generate_request(std::mt19937_64& rng, const std::vector<TxClassParams>& classes, ProgramId program,
                         RequestId id, std::uint64_t clock);

/// Exactly h/2 occupied slots chosen uniformly (selection sampling), with random values.
std::vector<std::pair<ObjectId, Value>> prepopulate(std::uint64_t h, std::uint64_t seed);

}  // namespace htr::workload
