#pragma once

#include "htr/core/history.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace htr::checker {

/// Malformed or unreadable history.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ViolationKind { legality, rt_order, completion, structure };

std::string to_string(ViolationKind k);

struct Violation {
    ViolationKind kind = ViolationKind::structure;
    std::string message;
    std::vector<std::uint64_t> witness;  // event seqs
    std::vector<TxId> transactions;
};

struct Verdict {
    bool pass = true;
    std::optional<Violation> violation;
    bool crash_truncated = false;

    static Verdict ok() { return Verdict{}; }
    static Verdict fail(Violation v) { return Verdict{false, std::move(v), false}; }
};

/// For every request executed in SM mode, only the earliest commit response
/// survives; later commit responses of the same request become aborts.
THistory smreduce(const THistory& h);

struct Completion {
    THistory history;
    bool crash_truncated = false;
};

/// Closes every live transaction with a commit or abort response.
Completion complete(const THistory& h);

struct Serialization {
    std::vector<TxId> order;
    std::optional<Violation> violation;
};

/// Committed updating transactions in end order; every other transaction
/// right after the committed updating transaction whose end equals its start.
Serialization build_serialization(const THistory& completed);

Verdict check_legality(const std::vector<TxId>& s, const THistory& completed);

/// Real-time order obligations: committed updating pairs and same-process pairs.
Verdict check_update_real_time(const std::vector<TxId>& s, const THistory& completed);

/// Stricter variant that also orders committed updating before committed read-only transactions.
Verdict check_write_real_time(const std::vector<TxId>& s, const THistory& completed);

enum class OrderVariant { update_real_time, write_real_time };

/// smreduce, complete, serialize, then legality and order checks. Throws InputError on malformed input.
Verdict check(const THistory& h, OrderVariant variant = OrderVariant::update_real_time);

/// Well-formedness: alternation, known transactions, SM request ids. Throws InputError.
void validate(const THistory& h);

/// A history that satisfies update-real-time order but not write-real-time order.
THistory write_real_time_counterexample();

void write_history(std::ostream& out, const THistory& h);
THistory read_history(std::istream& in);
void save_history(const std::string& path, const THistory& h);
THistory load_history(const std::string& path);

std::string describe(const Verdict& v);

}  // namespace htr::checker
