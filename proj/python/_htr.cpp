#include "htr/checker/checker.hpp"
#include "htr/checker/corrupt.hpp"
#include "htr/cluster/cluster.hpp"
#include "htr/workload/scenario.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>

namespace py = pybind11;
using namespace htr;

namespace {

py::object ratio(double x) { return std::isnan(x) ? py::object(py::none()) : py::object(py::float_(x)); }

py::dict to_dict(const cluster::RunResult& r) {
    py::dict d;
    d["scenario"] = r.scenario;
    d["oracle"] = r.oracle;
    d["nodes"] = r.nodes;
    d["seed"] = r.seed;
    d["requests_issued"] = r.requests_issued;
    d["requests_completed"] = r.requests_completed;
    d["commits"] = r.commits;
    d["conflict_aborts"] = r.conflict_aborts;
    d["sm_conflict_aborts"] = r.sm_conflict_aborts;
    d["post_warmup_tps"] = r.post_warmup_tps;
    d["converged"] = r.converged;
    py::list hashes;
    for (const auto& h : r.state_hashes) hashes.append(h ? py::object(py::int_(*h)) : py::object(py::none()));
    d["state_hashes"] = hashes;

    py::list classes;
    for (const auto& c : r.classes) {
        py::dict x;
        x["id"] = c.class_id;
        x["attempts"] = c.attempts;
        x["aborts"] = c.aborts;
        x["commits"] = c.commits;
        x["abort_rate"] = c.abort_rate();
        x["sm_ratio"] = c.post_warmup_sm_ratio();
        classes.append(x);
    }
    d["classes"] = classes;

    py::list rows;
    for (const auto& row : r.rows) {
        py::dict x;
        x["time_s"] = row.time_s;
        x["committed_tps"] = row.committed_tps;
        x["abort_rate"] = row.abort_rate;
        py::list du, sm;
        for (double v : row.du_ratio) du.append(ratio(v));
        for (double v : row.sm_ratio) sm.append(ratio(v));
        x["du_ratio"] = du;
        x["sm_ratio"] = sm;
        x["mean_msg_bytes"] = row.mean_msg_bytes;
        x["network_utilization"] = row.network_utilization;
        rows.append(x);
    }
    d["rows"] = rows;
    d["metrics_csv"] = cluster::metrics_csv(r);
    d["summary"] = cluster::summary(r);
    return d;
}

py::dict run(const std::string& scenario, const std::string& oracle_name, std::optional<std::uint64_t> seed,
             std::optional<std::uint32_t> nodes, std::optional<double> duration,
             const std::vector<std::string>& overrides, const std::vector<std::string>& crash,
             const std::vector<std::string>& recover, const std::string& history_out, std::uint64_t max_requests) {
    auto scn = workload::load_scenario(scenario, overrides);
    if (seed) scn.seed = *seed;
    if (nodes) scn.nodes = *nodes;
    if (duration) scn.duration = sim::SimTime::from_seconds(*duration);
    scn.validate();
    cluster::RunOptions opt;
    opt.oracle = oracle::parse_oracle_kind(oracle_name);
    opt.max_requests = max_requests;
    for (const auto& c : crash) opt.faults.push_back(cluster::parse_fault(cluster::Fault::Kind::crash, c));
    for (const auto& c : recover) opt.faults.push_back(cluster::parse_fault(cluster::Fault::Kind::recover, c));
    opt.record_history = !history_out.empty();
    cluster::RunResult r;
    {
        py::gil_scoped_release nogil;
        r = cluster::run_scenario(scn, opt);
    }
    if (r.history) checker::save_history(history_out, *r.history);
    return to_dict(r);
}

py::dict verdict(const checker::Verdict& v) {
    py::dict d;
    d["pass"] = v.pass;
    d["crash_truncated"] = v.crash_truncated;
    d["description"] = checker::describe(v);
    if (v.violation) {
        d["kind"] = checker::to_string(v.violation->kind);
        d["message"] = v.violation->message;
        d["witness"] = v.violation->witness;
        d["transactions"] = v.violation->transactions;
    }
    return d;
}

}  // namespace

PYBIND11_MODULE(_htr, m) {
    m.doc() = "Deterministic simulator of hybrid DU/SM transactional replication";

    py::register_exception<workload::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<checker::InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<sim::ConfigError>(m, "FaultBoundError", PyExc_ValueError);

    m.def("run", &run, py::arg("scenario"), py::arg("oracle") = "hybml", py::arg("seed") = py::none(),
          py::arg("nodes") = py::none(), py::arg("duration") = py::none(),
          py::arg("overrides") = std::vector<std::string>{}, py::arg("crash") = std::vector<std::string>{},
          py::arg("recover") = std::vector<std::string>{}, py::arg("history_out") = "",
          py::arg("max_requests") = 0,
          "Run one seeded scenario; faults are 'p@seconds' strings. Returns a dict of results.");

    m.def(
        "check",
        [](const std::string& path, bool write_real_time) {
            const auto h = checker::load_history(path);
            return verdict(checker::check(h, write_real_time ? checker::OrderVariant::write_real_time
                                                             : checker::OrderVariant::update_real_time));
        },
        py::arg("path"), py::arg("write_real_time") = false, "Check a history file for opacity.");

    m.def(
        "corrupt",
        [](const std::string& in, const std::string& kind, std::size_t index, const std::string& out) {
            checker::Corruption c;
            if (kind == "value") {
                c = checker::Corruption::value_forgery;
            } else if (kind == "order") {
                c = checker::Corruption::order_forgery;
            } else if (kind == "double-sm") {
                c = checker::Corruption::double_sm_commit;
            } else {
                throw py::value_error("unknown corruption '" + kind + "'");
            }
            const auto bad = checker::corrupt(checker::load_history(in), c, index);
            if (!bad) return false;
            checker::save_history(out, bad->history);
            return true;
        },
        py::arg("path"), py::arg("kind"), py::arg("index") = 0, py::arg("out"),
        "Write a corrupted copy of a history; False when no such site exists.");

    m.def(
        "counterexample", [](const std::string& out) {
            checker::save_history(out, checker::write_real_time_counterexample());
        },
        py::arg("out"), "Write the update- vs write-real-time counterexample history.");
}
