#pragma once

#include "htr/core/history.hpp"

#include <cstddef>
#include <optional>
#include <string>

namespace htr::checker {

enum class Corruption { value_forgery, order_forgery, double_sm_commit };

std::string to_string(Corruption c);

struct Corrupted {
    THistory history;
    std::vector<std::uint64_t> touched;  // seqs of the events the corruption concerns
};

/// Applies the k-th instance of a corruption class, or nullopt if the history
/// has fewer than k+1 candidate sites.
///   value_forgery:    a read response gets a value no serialization allows;
///   order_forgery:    two really-ordered committed updating transactions swap end stamps;
///   double_sm_commit: a later SM copy is detached from its request so it also counts as committed.
std::optional<Corrupted> corrupt(const THistory& h, Corruption kind, std::size_t k);

}  // namespace htr::checker
