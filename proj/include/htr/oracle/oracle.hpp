#pragma once

#include "htr/core/descriptor.hpp"
#include "htr/core/types.hpp"

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace htr::oracle {

enum class Outcome : std::uint8_t { committed, aborted_local, aborted_global, rolled_back, retried };

std::string_view to_string(Outcome o);

struct OracleSample {
    ClassId class_id = 0;
    Mode mode = Mode::du;
    Outcome outcome = Outcome::committed;
    std::uint64_t exec_cost = 0;
    std::uint64_t commit_cost = 0;
    std::uint64_t message_bytes = 0;
};

struct EnvSnapshot {
    double network_utilization = 0.0;
    std::uint64_t lc = 0;
    std::size_t live_du_count = 0;
};

class TransactionOracle {
public:
    virtual ~TransactionOracle() = default;
    virtual Mode query(const Request& r, const EnvSnapshot& env) = 0;
    virtual void feed(const OracleSample& sample) = 0;
    virtual std::string_view name() const = 0;
};

/// DU-only or SM-only oracle.
class FixedOracle final : public TransactionOracle {
public:
    explicit FixedOracle(Mode m) : mode_(m) {}
    Mode query(const Request&, const EnvSnapshot&) override { return mode_; }
    void feed(const OracleSample&) override {}
    std::string_view name() const override { return mode_ == Mode::du ? "du" : "sm"; }

private:
    Mode mode_;
};

class MovingMedian {
public:
    explicit MovingMedian(std::size_t window) : window_(window) {}
    void push(double x);
    bool empty() const { return values_.empty(); }
    std::size_t size() const { return values_.size(); }
    /// Mean of the two middle elements for even sizes.
    double value() const;

private:
    std::size_t window_;
    std::deque<double> values_;
    mutable std::vector<double> scratch_;
    mutable bool dirty_ = true;
    mutable double cached_ = 0.0;
};

class MovingAverage {
public:
    explicit MovingAverage(std::size_t window) : window_(window) {}
    void push(double x);
    bool empty() const { return values_.empty(); }
    double value() const { return values_.empty() ? 0.0 : sum_ / static_cast<double>(values_.size()); }

private:
    std::size_t window_;
    std::deque<double> values_;
    double sum_ = 0.0;
};

struct HybMLConfig {
    double eps_du = 0.01;
    double eps_sm = 0.1;
    std::size_t median_window = 64;
    std::size_t average_window = 128;
    double decay = 0.95;
    std::size_t decay_every = 256;
    double net_threshold = 0.9;
    double eps_floor = 0.01;
    bool feed_local_aborts = true;
    std::uint64_t seed = 0;
};

struct ClassStats {
    explicit ClassStats(const HybMLConfig& cfg, std::uint64_t stream_seed);

    MovingMedian du_exec;
    MovingMedian du_commit;
    MovingMedian sm_exec;
    MovingAverage du_msg;
    MovingAverage sm_msg;
    double du_attempts = 0.0;
    double du_commits = 0.0;
    double du_aborts_local = 0.0;
    double du_aborts_global = 0.0;
    Mode dominant_mode = Mode::du;
    std::uint64_t samples = 0;
    std::uint64_t queries = 0;
    std::uint64_t explorations = 0;
    std::mt19937_64 rng;

    double abort_rate() const;
    double expected_attempts(double eps_floor) const;
};

/// Per-class epsilon-greedy choice between DU and SM.
class HybMLOracle final : public TransactionOracle {
public:
    explicit HybMLOracle(HybMLConfig cfg) : cfg_(cfg) {}

    Mode query(const Request& r, const EnvSnapshot& env) override;
    void feed(const OracleSample& sample) override;
    std::string_view name() const override { return "hybml"; }

    /// The exploitation rule alone, without exploration or bookkeeping.
    Mode exploit(const ClassStats& s, const EnvSnapshot& env) const;

    ClassStats& stats(ClassId c);
    const ClassStats* find(ClassId c) const;
    const HybMLConfig& config() const { return cfg_; }

private:
    HybMLConfig cfg_;
    std::map<ClassId, ClassStats> classes_;
};

enum class OracleKind { du, sm, hybml };

OracleKind parse_oracle_kind(std::string_view s);
std::unique_ptr<TransactionOracle> make_oracle(OracleKind kind, const HybMLConfig& cfg);

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

}  // namespace htr::oracle
