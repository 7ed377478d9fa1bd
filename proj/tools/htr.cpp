#include "htr/checker/checker.hpp"
#include "htr/checker/corrupt.hpp"
#include "htr/cluster/cluster.hpp"
#include "htr/core/replica.hpp"
#include "htr/workload/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kConfigError = 2;
constexpr int kInvariantTrip = 3;

struct RunArgs {
    std::string scenario;
    std::string oracle = "hybml";
    std::optional<std::uint32_t> nodes;
    std::optional<std::uint64_t> seed;
    std::optional<double> duration;
    std::optional<std::uint32_t> clients;
    std::string out_metrics;
    std::string out_history;
    std::vector<std::string> crashes;
    std::vector<std::string> recoveries;
    std::vector<std::string> overrides;
    bool check = false;
};

int do_run(const RunArgs& a) {
    using namespace htr;
    workload::ScenarioConfig scn;
    cluster::RunOptions opt;
    try {
        scn = workload::load_scenario(a.scenario, a.overrides);
        if (a.nodes) scn.nodes = *a.nodes;
        if (a.seed) scn.seed = *a.seed;
        if (a.duration) scn.duration = sim::SimTime::from_seconds(*a.duration);
        if (a.clients) scn.clients_per_replica = *a.clients;
        scn.validate();
        opt.oracle = oracle::parse_oracle_kind(a.oracle);
        for (const auto& c : a.crashes) opt.faults.push_back(cluster::parse_fault(cluster::Fault::Kind::crash, c));
        for (const auto& r : a.recoveries) {
            opt.faults.push_back(cluster::parse_fault(cluster::Fault::Kind::recover, r));
        }
        opt.record_history = !a.out_history.empty() || a.check;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }

    cluster::RunResult result;
    try {
        result = cluster::run_scenario(scn, opt);
    } catch (const sim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const workload::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const InvariantError& e) {
        std::cerr << "invariant violated: " << e.what() << '\n';
        return kInvariantTrip;
    } catch (const RequestError& e) {
        std::cerr << "invariant violated: " << e.what() << '\n';
        return kInvariantTrip;
    }

    if (!a.out_metrics.empty()) {
        std::ofstream out(a.out_metrics, std::ios::binary);
        if (!out) {
            std::cerr << "cannot write " << a.out_metrics << '\n';
            return kConfigError;
        }
        out << cluster::metrics_csv(result);
    }
    if (!a.out_history.empty() && result.history) checker::save_history(a.out_history, *result.history);
    std::cout << cluster::summary(result);
    if (a.check && result.history) {
        const auto v = checker::check(*result.history);
        std::cout << checker::describe(v) << '\n';
        if (!v.pass) return 1;
    }
    return 0;
}

int do_check(const std::string& path, bool write_variant) {
    using namespace htr::checker;
    try {
        const auto h = load_history(path);
        const auto v = check(h, write_variant ? OrderVariant::write_real_time : OrderVariant::update_real_time);
        std::cout << describe(v) << '\n';
        return v.pass ? 0 : 1;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    }
}

int do_corrupt(const std::string& in, const std::string& kind, std::size_t index, const std::string& out) {
    using namespace htr::checker;
    try {
        const auto h = load_history(in);
        Corruption c;
        if (kind == "value") {
            c = Corruption::value_forgery;
        } else if (kind == "order") {
            c = Corruption::order_forgery;
        } else if (kind == "double-sm") {
            c = Corruption::double_sm_commit;
        } else {
            std::cerr << "unknown corruption '" << kind << "'\n";
            return 2;
        }
        const auto bad = corrupt(h, c, index);
        if (!bad) {
            std::cerr << "history has no site for " << to_string(c) << " #" << index << '\n';
            return 1;
        }
        save_history(out, bad->history);
        return 0;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid transactional replication simulator"};
    app.require_subcommand(1);

    RunArgs ra;
    auto* run = app.add_subcommand("run", "Run a seeded scenario simulation");
    run->add_option("--scenario", ra.scenario, "Scenario JSON file")->required();
    run->add_option("--oracle", ra.oracle, "du, sm or hybml")->check(CLI::IsMember({"du", "sm", "hybml"}));
    run->add_option("--nodes", ra.nodes, "Replica count");
    run->add_option("--seed", ra.seed, "Run seed");
    run->add_option("--duration", ra.duration, "Simulated seconds");
    run->add_option("--clients", ra.clients, "Closed-loop clients per replica");
    run->add_option("--out-metrics", ra.out_metrics, "Per-second metrics CSV");
    run->add_option("--out-history", ra.out_history, "Recorded history file");
    run->add_option("--crash", ra.crashes, "Crash replica p at t seconds (p@t); repeatable");
    run->add_option("--recover", ra.recoveries, "Recover replica p at t seconds (p@t); repeatable");
    run->add_option("--config-override", ra.overrides, "Dotted key=value override; repeatable");
    run->add_flag("--check", ra.check, "Check the recorded history after the run");

    std::string history_path;
    bool write_variant = false;
    auto* chk = app.add_subcommand("check", "Check a history for update-real-time opacity");
    chk->add_option("history", history_path, "History file")->required();
    chk->add_flag("--write-real-time", write_variant, "Use the stricter write-real-time order");

    std::string corrupt_in, corrupt_kind, corrupt_out;
    std::size_t corrupt_index = 0;
    auto* cor = app.add_subcommand("corrupt", "Inject a corruption into a history");
    cor->add_option("history", corrupt_in, "Input history")->required();
    cor->add_option("--kind", corrupt_kind, "value, order or double-sm")->required();
    cor->add_option("--index", corrupt_index, "Which candidate site to corrupt");
    cor->add_option("--out", corrupt_out, "Output history")->required();

    std::string cex_out;
    auto* cex = app.add_subcommand("counterexample", "Write the update-vs-write real-time counterexample history");
    cex->add_option("--out", cex_out, "Output history")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    if (*run) return do_run(ra);
    if (*chk) return do_check(history_path, write_variant);
    if (*cor) return do_corrupt(corrupt_in, corrupt_kind, corrupt_index, corrupt_out);
    if (*cex) {
        htr::checker::save_history(cex_out, htr::checker::write_real_time_counterexample());
        return 0;
    }
    return kConfigError;
}
