#include "htr/oracle/oracle.hpp"

#include "htr/core/state.hpp"

#include <algorithm>
#include <stdexcept>

namespace htr::oracle {

std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::committed: return "committed";
        case Outcome::aborted_local: return "aborted_local";
        case Outcome::aborted_global: return "aborted_global";
        case Outcome::rolled_back: return "rolled_back";
        case Outcome::retried: return "retried";
    }
    return "?";
}

void MovingMedian::push(double x) {
    values_.push_back(x);
    if (values_.size() > window_) values_.pop_front();
    dirty_ = true;
}

double MovingMedian::value() const {
    if (values_.empty()) return 0.0;
    if (!dirty_) return cached_;
    scratch_.assign(values_.begin(), values_.end());
    const auto n = scratch_.size();
    const auto mid = scratch_.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(scratch_.begin(), mid, scratch_.end());
    double m = *mid;
    if (n % 2 == 0) m = (m + *std::max_element(scratch_.begin(), mid)) / 2.0;
    cached_ = m;
    dirty_ = false;
    return m;
}

void MovingAverage::push(double x) {
    values_.push_back(x);
    sum_ += x;
    if (values_.size() > window_) {
        sum_ -= values_.front();
        values_.pop_front();
    }
}

ClassStats::ClassStats(const HybMLConfig& cfg, std::uint64_t stream_seed)
    : du_exec(cfg.median_window),
      du_commit(cfg.median_window),
      sm_exec(cfg.median_window),
      du_msg(cfg.average_window),
      sm_msg(cfg.average_window),
      rng(stream_seed) {}

double ClassStats::abort_rate() const {
    return std::clamp((du_aborts_local + du_aborts_global) / std::max(1.0, du_attempts), 0.0, 1.0);
}

double ClassStats::expected_attempts(double eps_floor) const {
    return 1.0 / std::max(eps_floor, 1.0 - abort_rate());
}

ClassStats& HybMLOracle::stats(ClassId c) {
    auto it = classes_.find(c);
    if (it == classes_.end()) {
        it = classes_.emplace(c, ClassStats(cfg_, digest_mix(digest_mix(0, cfg_.seed), c))).first;
    }
    return it->second;
}

const ClassStats* HybMLOracle::find(ClassId c) const {
    auto it = classes_.find(c);
    return it == classes_.end() ? nullptr : &it->second;
}

Mode HybMLOracle::exploit(const ClassStats& s, const EnvSnapshot& env) const {
    const double k = s.expected_attempts(cfg_.eps_floor);
    if (env.network_utilization >= cfg_.net_threshold) {
        if (s.du_msg.empty() || s.sm_msg.empty()) return Mode::du;
        return s.sm_msg.value() < s.du_msg.value() * k ? Mode::sm : Mode::du;
    }
    if (s.du_exec.empty() || s.sm_exec.empty()) return Mode::du;
    const double du = (s.du_exec.value() + s.du_commit.value()) * k;
    return s.sm_exec.value() < du ? Mode::sm : Mode::du;
}

Mode HybMLOracle::query(const Request& r, const EnvSnapshot& env) {
    auto& s = stats(r.class_id);
    ++s.queries;
    const double u = uniform01(s.rng);
    if (s.samples == 0) return Mode::du;
    const Mode prevalent = s.dominant_mode;
    const double eps = prevalent == Mode::du ? cfg_.eps_du : cfg_.eps_sm;
    if (u < eps) {
        ++s.explorations;
        return prevalent == Mode::du ? Mode::sm : Mode::du;
    }
    s.dominant_mode = exploit(s, env);
    return s.dominant_mode;
}

void HybMLOracle::feed(const OracleSample& sample) {
    if (sample.outcome == Outcome::aborted_local && !cfg_.feed_local_aborts) return;
    auto& s = stats(sample.class_id);
    if (sample.mode == Mode::du) {
        s.du_exec.push(static_cast<double>(sample.exec_cost));
        s.du_commit.push(static_cast<double>(sample.commit_cost));
        if (sample.message_bytes > 0) s.du_msg.push(static_cast<double>(sample.message_bytes));
        s.du_attempts += 1;
        if (sample.outcome == Outcome::committed) s.du_commits += 1;
        if (sample.outcome == Outcome::aborted_local) s.du_aborts_local += 1;
        if (sample.outcome == Outcome::aborted_global) s.du_aborts_global += 1;
    } else {
        s.sm_exec.push(static_cast<double>(sample.exec_cost));
        s.sm_msg.push(static_cast<double>(sample.message_bytes));
    }
    ++s.samples;
    if (cfg_.decay_every > 0 && s.samples % cfg_.decay_every == 0) {
        s.du_attempts *= cfg_.decay;
        s.du_commits *= cfg_.decay;
        s.du_aborts_local *= cfg_.decay;
        s.du_aborts_global *= cfg_.decay;
    }
}

OracleKind parse_oracle_kind(std::string_view s) {
    if (s == "du") return OracleKind::du;
    if (s == "sm") return OracleKind::sm;
    if (s == "hybml") return OracleKind::hybml;
    throw std::invalid_argument("unknown oracle '" + std::string(s) + "' (expected du, sm or hybml)");
}

std::unique_ptr<TransactionOracle> make_oracle(OracleKind kind, const HybMLConfig& cfg) {
    switch (kind) {
        case OracleKind::du: return std::make_unique<FixedOracle>(Mode::du);
        case OracleKind::sm: return std::make_unique<FixedOracle>(Mode::sm);
        case OracleKind::hybml: return std::make_unique<HybMLOracle>(cfg);
    }
    throw std::invalid_argument("unknown oracle kind");
}

}  // namespace htr::oracle
