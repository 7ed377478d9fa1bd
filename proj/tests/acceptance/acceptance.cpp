// Acceptance run: one PASS/FAIL line per criterion, thresholds pinned below.
// Usage: htr_acceptance [criterion numbers...]   (default: all)

#include "htr/checker/checker.hpp"
#include "htr/checker/corrupt.hpp"
#include "htr/cluster/cluster.hpp"
#include "htr/oracle/oracle.hpp"
#include "htr/sim/network.hpp"
#include "htr/sim/scheduler.hpp"
#include "htr/workload/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace htr;

namespace {

// ---- pinned thresholds ---------------------------------------------------
constexpr int kTobRuns = 500;
constexpr double kTobBudgetSeconds = 60.0;
constexpr std::uint64_t kConvergenceRequests = 10'000;
constexpr int kCheckerRuns = 102;
constexpr std::uint64_t kCheckerBigRequests = 10'000;
constexpr double kCheckerBudgetSeconds = 10.0;
constexpr int kCorpusPerClass = 10;
constexpr int kCalibrationQueries = 100'000;
constexpr double kCalibrationSigmas = 3.0;
constexpr double kHotSmRatioMin = 0.80;
constexpr double kColdSmRatioMax = 0.20;
constexpr double kHybridThroughputFactor = 0.90;
constexpr int kStableRows = 10;            // consecutive 1 s metric rows without a flip
constexpr double kRestabilizeSeconds = 50.0;

std::string config_path(const std::string& rel) { return std::string(HTR_SOURCE_DIR) + "/configs/" + rel; }

struct Line {
    bool pass = false;
    std::string text;
};

std::map<int, Line> g_lines;
std::uint64_t g_sm_conflict_aborts = 0;
std::uint64_t g_runs_seen = 0;

void report(int id, bool pass, const std::string& text) {
    g_lines[id] = Line{pass, text};
    std::cerr << (pass ? "  pass " : "  FAIL ") << "C" << id << " (" << text << ")\n";
}

cluster::RunResult run(const workload::ScenarioConfig& scn, const cluster::RunOptions& opt) {
    auto r = cluster::run_scenario(scn, opt);
    g_sm_conflict_aborts += r.sm_conflict_aborts;
    ++g_runs_seen;
    return r;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const char* oracle_names[] = {"du", "sm", "hybml"};

// ---- 1: TOB -----------------------------------------------------------------

class Tape final : public sim::Process {
public:
    void on_deliver(const sim::TobMessage& m) override { seen.push_back(m.seq); }
    void on_crash() override {}
    sim::Snapshot take_snapshot() const override { return sim::Snapshot{{}, seen.size()}; }
    void install_snapshot(const sim::Snapshot&) override {}
    std::uint64_t retained_floor() const override { return seen.size(); }
    std::vector<std::uint64_t> seen;
};

void criterion_tob() {
    const auto t0 = std::chrono::steady_clock::now();
    int agreeing = 0;
    std::string first_bad;
    for (int run_id = 0; run_id < kTobRuns; ++run_id) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(run_id) * 7919 + 1);
        const std::uint32_t n = run_id % 2 ? 5 : 3;
        sim::Scheduler s(n);
        sim::NetConfig cfg;
        cfg.base_latency = sim::SimTime{100 + rng() % 400};
        cfg.jitter = sim::SimTime{rng() % 300};
        cfg.jitter_seed = rng();
        cfg.per_byte_latency = 0.01;
        sim::Network net(s, cfg);
        std::vector<Tape> tapes(n);
        for (std::uint32_t p = 0; p < n; ++p) net.attach(sim::process(p), &tapes[p]);

        std::set<std::uint32_t> crashed;
        const auto crashes = rng() % (net.max_faulty() + 1);
        while (crashed.size() < crashes) crashed.insert(static_cast<std::uint32_t>(rng() % n));
        for (auto p : crashed) net.crash(sim::process(p), sim::SimTime{rng() % 5000});

        // (sender, accepted seq)
        std::vector<std::pair<std::uint32_t, std::uint64_t>> accepted;
        const int broadcasts = 20 + static_cast<int>(rng() % 60);
        for (int b = 0; b < broadcasts; ++b) {
            const auto p = static_cast<std::uint32_t>(rng() % n);
            const std::size_t size = 1 + rng() % 200;
            s.schedule(sim::SimTime{rng() % 6000}, sim::process(p), [&net, &accepted, p, size] {
                if (auto q = net.tob_broadcast(sim::process(p), std::vector<std::byte>(size))) accepted.emplace_back(p, *q);
            });
        }
        s.run();

        bool ok = true;
        const std::vector<std::uint64_t>* ref = nullptr;
        for (std::uint32_t p = 0; p < n && ok; ++p) {
            const auto& seq = tapes[p].seen;
            if (std::set<std::uint64_t>(seq.begin(), seq.end()).size() != seq.size()) ok = false;  // integrity
            if (crashed.count(p)) continue;
            if (!ref) ref = &seq;
            ok = ok && seq == *ref;  // agreement and total order
        }
        for (std::uint32_t p = 0; p < n && ok && ref; ++p) {
            const auto& seq = tapes[p].seen;  // a crashed process delivered a prefix
            ok = seq.size() <= ref->size() && std::equal(seq.begin(), seq.end(), ref->begin());
        }
        for (const auto& [p, q] : accepted) {  // validity for correct senders
            if (ok && !crashed.count(p)) ok = std::find(ref->begin(), ref->end(), q) != ref->end();
        }
        agreeing += ok;
        if (!ok && first_bad.empty()) first_bad = " first failing run " + std::to_string(run_id);
    }
    const double secs = seconds_since(t0);
    report(1, agreeing == kTobRuns && secs < kTobBudgetSeconds,
           fmt("TOB agreement: %d/%d runs, %.2f s; need 100%% and < %.0f s%s", agreeing, kTobRuns, secs,
               kTobBudgetSeconds, first_bad.c_str()));
}

// ---- 2: convergence ----------------------------------------------------------

void criterion_convergence() {
    int ok = 0, total = 0;
    std::string detail;
    for (std::uint32_t n : {3u, 4u, 5u}) {
        for (const char* o : oracle_names) {
            auto scn = workload::load_scenario(config_path("desk/complex.json"));
            scn.nodes = n;
            scn.seed = 10 + n;
            cluster::RunOptions opt;
            opt.oracle = oracle::parse_oracle_kind(o);
            opt.max_requests = kConvergenceRequests;
            const auto r = run(scn, opt);
            bool same = r.converged && r.requests_completed == kConvergenceRequests;
            for (const auto& h : r.state_hashes) same = same && h && *h == *r.state_hashes[0];
            ok += same;
            ++total;
            if (!same) detail += fmt(" [n=%u %s diverged]", n, o);
        }
    }
    report(2, ok == total,
           fmt("convergence at quiescence: %d/%d runs (n in {3,4,5} x du/sm/hybml, %llu transactions each)%s", ok,
               total, static_cast<unsigned long long>(kConvergenceRequests), detail.c_str()));
}

// ---- 4: checker soundness ------------------------------------------------------

void criterion_checker_soundness() {
    int pass = 0;
    std::size_t events = 0;
    std::string detail;
    for (int i = 0; i < kCheckerRuns; ++i) {
        auto scn = workload::load_scenario(config_path("desk/check.json"));
        scn.seed = 1000 + static_cast<std::uint64_t>(i);
        scn.nodes = (i / 9) % 2 ? 5 : 3;
        cluster::RunOptions opt;
        opt.oracle = oracle::parse_oracle_kind(oracle_names[i % 3]);
        opt.record_history = true;
        std::mt19937_64 rng(scn.seed);
        const int schedule = (i / 3) % 3;  // none, crash, crash then recover
        if (schedule > 0) {
            const auto victims = scn.nodes == 5 ? 2u : 1u;
            for (std::uint32_t v = 0; v < victims; ++v) {
                const double at = 0.1 + 0.1 * static_cast<double>(rng() % 5);
                const std::uint32_t p = scn.nodes - 1 - v;
                opt.faults.push_back({cluster::Fault::Kind::crash, p, sim::SimTime::from_seconds(at)});
                if (schedule == 2) {
                    opt.faults.push_back({cluster::Fault::Kind::recover, p, sim::SimTime::from_seconds(at + 0.25)});
                }
            }
        }
        const auto r = run(scn, opt);
        const auto v = checker::check(*r.history);
        events += r.history->events.size();
        pass += v.pass;
        if (!v.pass && detail.empty()) detail = " first failure: run " + std::to_string(i) + ": " + checker::describe(v);
    }

    auto scn = workload::load_scenario(config_path("desk/check.json"));
    scn.duration = sim::SimTime::from_seconds(30);
    cluster::RunOptions opt;
    opt.oracle = oracle::OracleKind::hybml;
    opt.record_history = true;
    opt.max_requests = kCheckerBigRequests;
    const auto big = run(scn, opt);
    const auto t0 = std::chrono::steady_clock::now();
    const auto v = checker::check(*big.history);
    const double secs = seconds_since(t0);
    const bool ok = pass == kCheckerRuns && v.pass && secs < kCheckerBudgetSeconds &&
                    big.history->meta.size() >= kCheckerBigRequests;
    report(4, ok,
           fmt("opacity checker: %d/%d randomized histories pass (%zu events); %zu-transaction history checked "
               "%s in %.2f s; need all and < %.0f s%s",
               pass, kCheckerRuns, events, big.history->meta.size(), v.pass ? "clean" : "DIRTY", secs,
               kCheckerBudgetSeconds, detail.c_str()));
}

// ---- 5: checker completeness ---------------------------------------------------

void criterion_corpus() {
    auto scn = workload::load_scenario(config_path("desk/check.json"));
    cluster::RunOptions opt;
    opt.record_history = true;
    opt.oracle = oracle::OracleKind::hybml;
    const auto hyb = run(scn, opt);
    opt.oracle = oracle::OracleKind::sm;
    const auto sm = run(scn, opt);

    std::map<checker::Corruption, int> caught;
    int total = 0;
    std::string detail;
    const std::filesystem::path dir = "corpus";
    std::filesystem::create_directories(dir);
    for (auto kind : {checker::Corruption::value_forgery, checker::Corruption::order_forgery,
                      checker::Corruption::double_sm_commit}) {
        const auto& base = kind == checker::Corruption::double_sm_commit ? *sm.history : *hyb.history;
        for (int k = 0; k < kCorpusPerClass; ++k) {
            ++total;
            const auto bad = checker::corrupt(base, kind, static_cast<std::size_t>(k) * 7);
            if (!bad) {
                detail += " [" + checker::to_string(kind) + " #" + std::to_string(k) + " has no site]";
                continue;
            }
            checker::save_history((dir / (checker::to_string(kind) + "-" + std::to_string(k) + ".hist")).string(),
                                  bad->history);
            const auto v = checker::check(bad->history);
            if (!v.pass && !v.violation->witness.empty()) {
                ++caught[kind];
            } else {
                detail += " [" + checker::to_string(kind) + " #" + std::to_string(k) + " missed]";
            }
        }
    }
    int hits = 0;
    for (auto& [k, c] : caught) hits += c;
    report(5, hits == total,
           fmt("corruption corpus: %d/%d rejected with witnesses (value %d, order %d, double-SM %d)%s", hits, total,
               caught[checker::Corruption::value_forgery], caught[checker::Corruption::order_forgery],
               caught[checker::Corruption::double_sm_commit], detail.c_str()));
}

// ---- 6: counterexample -------------------------------------------------------------

void criterion_counterexample() {
    const auto h = checker::load_history(std::string(HTR_SOURCE_DIR) + "/tests/data/counterexample.hist");
    const auto u = checker::check(h, checker::OrderVariant::update_real_time);
    const auto w = checker::check(h, checker::OrderVariant::write_real_time);
    report(6, u.pass && !w.pass,
           fmt("bundled counterexample: update-real-time %s, write-real-time %s; need pass then fail",
               u.pass ? "passes" : "fails", w.pass ? "passes" : "fails"));
}

// ---- 7: exploration calibration ------------------------------------------------------

void criterion_calibration() {
    bool ok = true;
    std::string detail;
    for (Mode prevalent : {Mode::du, Mode::sm}) {
        oracle::HybMLConfig cfg;
        cfg.seed = 2024;
        oracle::HybMLOracle o(cfg);
        const ClassId c = 1;
        const std::uint64_t cheap = 10, dear = 10'000;
        const bool du_wins = prevalent == Mode::du;
        o.feed(oracle::OracleSample{c, Mode::du, oracle::Outcome::committed, du_wins ? cheap : dear, 0, 0});
        o.feed(oracle::OracleSample{c, Mode::sm, oracle::Outcome::committed, du_wins ? dear : cheap, 0, 0});
        Request r;
        r.class_id = c;
        o.query(r, oracle::EnvSnapshot{});  // settles the prevalent mode before counting
        int other = 0;
        for (int i = 0; i < kCalibrationQueries; ++i) other += o.query(r, oracle::EnvSnapshot{}) != prevalent;
        const double eps = du_wins ? cfg.eps_du : cfg.eps_sm;
        const double mean = kCalibrationQueries * eps;
        const double sigma = std::sqrt(kCalibrationQueries * eps * (1 - eps));
        const double z = (other - mean) / sigma;
        ok = ok && std::abs(z) <= kCalibrationSigmas;
        detail += fmt("%s-prevalent %d/%d explore (eps %.2f, z %+.2f) ", du_wins ? "DU" : "SM", other,
                      kCalibrationQueries, eps, z);
    }
    report(7, ok, "exploration calibration: " + detail + fmt("; need |z| <= %.0f", kCalibrationSigmas));
}

// ---- 8: Complex trend ------------------------------------------------------------------

void criterion_complex() {
    const auto scn = workload::load_scenario(config_path("desk/complex.json"));
    std::map<std::string, cluster::RunResult> rs;
    for (const char* o : oracle_names) {
        cluster::RunOptions opt;
        opt.oracle = oracle::parse_oracle_kind(o);
        rs[o] = run(scn, opt);
    }
    const auto& du = rs["du"];
    const auto& hyb = rs["hybml"];
    bool ordered = true;
    std::string aborts;
    for (std::size_t i = 1; i < du.classes.size(); ++i) {
        aborts += fmt("%s%.3f", i == 1 ? "" : "<", du.classes[i].abort_rate());
        if (i > 1 && !(du.classes[i].abort_rate() > du.classes[i - 1].abort_rate())) ordered = false;
    }
    const double hot = hyb.classes.back().post_warmup_sm_ratio();
    const double cold = hyb.classes[1].post_warmup_sm_ratio();
    const double best_fixed = std::max(du.post_warmup_tps, rs["sm"].post_warmup_tps);
    const double factor = hyb.post_warmup_tps / best_fixed;
    const bool ok = ordered && hot >= kHotSmRatioMin && cold <= kColdSmRatioMax && factor >= kHybridThroughputFactor;
    report(8, ok,
           fmt("Complex trend (desk, seed %llu): DU-only aborts T1..T10 %s %s; HybML SM ratio T10 %.3f (>= %.2f), "
               "T1 %.3f (<= %.2f); throughput HybML %.0f vs DU %.0f / SM %.0f = %.2fx best (>= %.2f)",
               static_cast<unsigned long long>(scn.seed), aborts.c_str(), ordered ? "ordered" : "NOT ordered", hot,
               kHotSmRatioMin, cold, kColdSmRatioMax, hyb.post_warmup_tps, du.post_warmup_tps,
               rs["sm"].post_warmup_tps, factor, kHybridThroughputFactor));
}

// ---- 9: Complex-Live adaptation ---------------------------------------------------------

void criterion_live() {
    const auto scn = workload::load_scenario(config_path("desk/complex_live.json"));
    cluster::RunOptions opt;
    opt.oracle = oracle::OracleKind::hybml;
    const auto r = run(scn, opt);
    const auto modes = r.dominant_modes();
    bool ok = !scn.phases.empty();
    std::string detail;
    for (const auto& ph : scn.phases) {
        const double b = ph.start.seconds();
        if (b <= 0.0) continue;
        double settled = -1.0;
        for (std::size_t j = 0; j + kStableRows <= r.rows.size(); ++j) {
            if (r.rows[j].time_s <= b) continue;
            bool flat = true;
            for (int k = 1; k < kStableRows && flat; ++k) flat = modes[j + k] == modes[j];
            if (flat) {
                settled = r.rows[j + kStableRows - 1].time_s - b;
                break;
            }
        }
        const bool in_time = settled >= 0.0 && settled <= kRestabilizeSeconds;
        ok = ok && in_time;
        detail += settled < 0 ? fmt(" %gs: never", b) : fmt(" %gs: +%.0fs", b, settled);
    }
    report(9, ok,
           fmt("Complex-Live adaptation: %d-row stable stretch completes after each boundary at%s; need <= %.0f s",
               kStableRows, detail.c_str(), kRestabilizeSeconds));
}

// ---- 10: determinism ----------------------------------------------------------------------

std::string file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void criterion_determinism() {
    struct Case {
        const char* config;
        const char* oracle;
        std::vector<cluster::Fault> faults;
        double duration;
    };
    const std::vector<Case> cases{
        {"desk/check.json", "hybml", {{cluster::Fault::Kind::crash, 1, sim::SimTime::from_seconds(0.3)},
                                      {cluster::Fault::Kind::recover, 1, sim::SimTime::from_seconds(0.6)}}, 1},
        {"desk/check.json", "du", {}, 1},
        {"desk/complex.json", "hybml", {}, 2},
    };
    int same = 0;
    std::string detail;
    const std::filesystem::path dir = "determinism";
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& c = cases[i];
        auto scn = workload::load_scenario(config_path(c.config));
        scn.duration = sim::SimTime::from_seconds(c.duration);
        cluster::RunOptions opt;
        opt.oracle = oracle::parse_oracle_kind(c.oracle);
        opt.faults = c.faults;
        opt.record_history = true;
        std::string csv[2], hist[2];
        for (int rep = 0; rep < 2; ++rep) {
            const auto r = run(scn, opt);
            const auto base = dir / fmt("case%zu-%d", i, rep);
            std::ofstream(base.string() + ".csv", std::ios::binary) << cluster::metrics_csv(r);
            checker::save_history(base.string() + ".hist", *r.history);
            csv[rep] = file_bytes(base.string() + ".csv");
            hist[rep] = file_bytes(base.string() + ".hist");
        }
        const bool eq = csv[0] == csv[1] && hist[0] == hist[1] && !hist[0].empty();
        for (int rep = 0; rep < 2; ++rep) {
            const auto base = dir / fmt("case%zu-%d", i, rep);
            std::filesystem::remove(base.string() + ".hist");  // histories get large; keep only the CSVs
        }
        same += eq;
        detail += fmt(" [%s/%s: %zu B csv, %zu B history %s]", c.config, c.oracle, csv[0].size(), hist[0].size(),
                      eq ? "identical" : "DIFFER");
    }
    report(10, same == static_cast<int>(cases.size()),
           fmt("determinism: %d/%zu repeated runs byte-identical%s", same, cases.size(), detail.c_str()));
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> want;
    for (int i = 1; i < argc; ++i) want.insert(std::atoi(argv[i]));
    auto on = [&](int id) { return want.empty() || want.count(id); };
    const std::vector<std::pair<int, std::function<void()>>> steps{
        {1, criterion_tob},        {2, criterion_convergence}, {4, criterion_checker_soundness},
        {5, criterion_corpus},     {6, criterion_counterexample}, {7, criterion_calibration},
        {8, criterion_complex},    {9, criterion_live},        {10, criterion_determinism},
    };
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& [id, fn] : steps) {
        if (!on(id)) continue;
        const auto t = std::chrono::steady_clock::now();
        try {
            fn();
        } catch (const std::exception& e) {
            report(id, false, std::string("threw: ") + e.what());
        }
        std::cerr << "  (C" << id << " took " << fmt("%.1f", seconds_since(t)) << " s)\n";
    }
    if (on(3)) {
        report(3, g_runs_seen > 0 && g_sm_conflict_aborts == 0,
               fmt("SM abort-freedom: %llu SM conflict aborts across %llu simulated runs; need exactly 0",
                   static_cast<unsigned long long>(g_sm_conflict_aborts),
                   static_cast<unsigned long long>(g_runs_seen)));
    }
    int failed = 0;
    for (const auto& [id, line] : g_lines) {
        std::cout << (line.pass ? "PASS" : "FAIL") << "  criterion " << id << ": " << line.text << '\n';
        failed += !line.pass;
    }
    std::cout << fmt("%d/%zu criteria passed in %.1f s\n", static_cast<int>(g_lines.size()) - failed, g_lines.size(),
                     seconds_since(t0));
    return failed ? 1 : 0;
}
