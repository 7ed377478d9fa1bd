#include "htr/cluster/cluster.hpp"

#include "htr/core/state.hpp"
#include "htr/workload/hashtable.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <random>
#include <sstream>

namespace htr::cluster {

using oracle::Outcome;
using sim::SimTime;

Fault parse_fault(Fault::Kind kind, const std::string& text) {
    const auto at = text.find('@');
    if (at == std::string::npos || at == 0 || at + 1 == text.size()) {
        throw workload::ConfigError("fault '" + text + "' must look like p@seconds");
    }
    Fault f;
    f.kind = kind;
    try {
        std::size_t used = 0;
        const auto p = std::stoul(text.substr(0, at), &used);
        if (used != at) throw std::invalid_argument("process");
        const auto rest = text.substr(at + 1);
        const double t = std::stod(rest, &used);
        if (used != rest.size() || t < 0) throw std::invalid_argument("time");
        f.process = static_cast<std::uint32_t>(p);
        f.at = SimTime::from_seconds(t);
    } catch (const std::logic_error&) {
        throw workload::ConfigError("fault '" + text + "' must look like p@seconds");
    }
    return f;
}

double ClassSummary::post_warmup_sm_ratio() const {
    const auto n = post_warmup_du + post_warmup_sm;
    return n ? static_cast<double>(post_warmup_sm) / static_cast<double>(n) : 0.0;
}

std::vector<std::vector<Mode>> RunResult::dominant_modes() const {
    std::vector<std::vector<Mode>> out;
    std::vector<Mode> prev(class_ids.size(), Mode::du);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < class_ids.size(); ++c) {
            if (!std::isnan(row.sm_ratio[c])) prev[c] = row.sm_ratio[c] > 0.5 ? Mode::sm : Mode::du;
        }
        out.push_back(prev);
    }
    return out;
}

namespace {

struct Window {
    std::vector<std::uint64_t> du;
    std::vector<std::uint64_t> sm;
    std::uint64_t updating_attempts = 0;
    std::uint64_t conflict_aborts = 0;
    std::uint64_t commits = 0;

    explicit Window(std::size_t classes) : du(classes, 0), sm(classes, 0) {}
    void reset() {
        std::fill(du.begin(), du.end(), 0);
        std::fill(sm.begin(), sm.end(), 0);
        updating_attempts = conflict_aborts = commits = 0;
    }
};

struct Client {
    std::uint32_t replica = 0;
    std::mt19937_64 rng;
    std::uint64_t clock = 0;
    bool in_flight = false;
};

class Runner {
public:
    Runner(const workload::ScenarioConfig& scn, const RunOptions& opt)
        : scn_(scn),
          opt_(opt),
          scheduler_(scn.nodes),
          network_(scheduler_, net_config(scn)),
          window_(scn.classes.size()) {
        scn_.validate();
        for (std::size_t i = 0; i < scn_.classes.size(); ++i) {
            class_index_[scn_.classes[i].class_id] = i;
            result_.class_ids.push_back(scn_.classes[i].class_id);
            ClassSummary s;
            s.class_id = scn_.classes[i].class_id;
            result_.classes.push_back(s);
        }
        phase_classes_.push_back(scn_.classes);
        for (const auto& ph : scn_.phases) phase_classes_.push_back(workload::apply_phase(scn_.classes, ph));

        program_ = workload::register_hashtable(programs_);
        if (opt_.record_history) history_ = std::make_unique<HistoryRecorder>(scn_.nodes);

        std::vector<std::pair<ObjectId, Value>> initial;
        if (scn_.prepopulate) initial = workload::prepopulate(scn_.hashtable_size, digest_mix(scn_.seed, 0x9e11));

        auto rcfg = scn_.replica;
        rcfg.dense_capacity = scn_.hashtable_size;
        for (std::uint32_t p = 0; p < scn_.nodes; ++p) {
            auto hcfg = scn_.hybml;
            hcfg.seed = digest_mix(digest_mix(scn_.seed, 0x0ac1e), p);
            oracles_.push_back(oracle::make_oracle(opt_.oracle, hcfg));
            replicas_.push_back(std::make_unique<Replica>(sim::process(p), scheduler_, network_, programs_,
                                                          *oracles_.back(), rcfg, history_.get()));
            auto& rep = *replicas_.back();
            for (const auto& [oid, v] : initial) rep.preload(oid, v);
            rep.on_attempt = [this](const AttemptRecord& a) { on_attempt(a); };
            rep.on_conflict = [this](ClassId a, ClassId b) {
                ++(a == b ? result_.same_class_conflicts : result_.cross_class_conflicts);
            };
            network_.attach(sim::process(p), &rep);
        }
        if (history_) history_->set_initial(std::move(initial));

        network_.on_crash_hook = [this](sim::ProcessId p) {
            for (auto& c : clients_) {
                if (c.replica == sim::index(p)) c.in_flight = false;
            }
        };
        network_.on_recover_hook = [this](sim::ProcessId p) {
            for (std::size_t i = 0; i < clients_.size(); ++i) {
                if (clients_[i].replica == sim::index(p)) schedule_issue(i);
            }
        };

        std::uint64_t k = 0;
        for (std::uint32_t p = 0; p < scn_.nodes; ++p) {
            for (std::uint32_t j = 0; j < scn_.clients_per_replica; ++j, ++k) {
                Client c;
                c.replica = p;
                c.rng.seed(digest_mix(digest_mix(scn_.seed, 0xc11e47), k));
                clients_.push_back(std::move(c));
            }
        }
        request_counter_.assign(scn_.nodes, 0);
    }

    RunResult run() {
        for (const auto& f : opt_.faults) {
            if (f.process >= scn_.nodes) throw sim::ConfigError("fault names process " + std::to_string(f.process));
            if (f.kind == Fault::Kind::crash) {
                network_.crash(sim::process(f.process), f.at);
            } else {
                network_.recover(sim::process(f.process), f.at);
            }
        }
        for (std::size_t i = 0; i < clients_.size(); ++i) schedule_issue(i);
        if (opt_.metrics_interval.ticks > 0) {
            for (auto t = opt_.metrics_interval; t <= scn_.duration; t += opt_.metrics_interval) {
                scheduler_.schedule(t, sim::kEnvironment, [this] { sample(); });
            }
        }
        scheduler_.run();
        finish();
        return std::move(result_);
    }

private:
    static sim::NetConfig net_config(const workload::ScenarioConfig& scn) {
        auto n = scn.net;
        n.jitter_seed = digest_mix(digest_mix(scn.seed, 0x7177e4), n.jitter_seed);
        return n;
    }

    const std::vector<workload::TxClassParams>& classes_now() const {
        return phase_classes_[static_cast<std::size_t>(scn_.phase_index(scheduler_.now()) + 1)];
    }

    bool issuing() const {
        if (scheduler_.now() >= scn_.duration) return false;
        return opt_.max_requests == 0 || result_.requests_issued < opt_.max_requests;
    }

    void schedule_issue(std::size_t client) {
        scheduler_.schedule_after(SimTime{0}, sim::process(clients_[client].replica), [this, client] { issue(client); });
    }

    void issue(std::size_t i) {
        auto& c = clients_[i];
        if (c.in_flight || !issuing()) return;
        auto& rep = *replicas_[c.replica];
        if (!network_.up(rep.id())) return;
        const auto id = ids::request(c.replica, ++request_counter_[c.replica]);
        auto r = workload::generate_request(c.rng, classes_now(), program_, id, c.clock);
        c.in_flight = true;
        ++result_.requests_issued;
        const auto class_id = r.class_id;
        rep.submit(std::move(r), [this, i, class_id](const Response& resp) { on_response(i, class_id, resp); });
    }

    void on_response(std::size_t i, ClassId class_id, const Response& resp) {
        auto& c = clients_[i];
        c.in_flight = false;
        c.clock = std::max(c.clock, resp.lc);
        ++result_.requests_completed;
        if (resp.rolled_back) {
            ++result_.rollbacks;
        } else {
            ++result_.commits;
            ++result_.classes[class_index_.at(class_id)].commits;
            const auto now = scheduler_.now();
            if (now < scn_.duration) {
                ++window_.commits;
                if (now >= SimTime::from_seconds(scn_.warmup_s)) ++result_.post_warmup_commits;
            }
        }
        schedule_issue(i);
    }

    void on_attempt(const AttemptRecord& a) {
        const auto ci = class_index_.at(a.class_id);
        auto& s = result_.classes[ci];
        ++s.attempts;
        const bool sm = a.mode == Mode::sm;
        ++(sm ? s.sm_attempts : s.du_attempts);
        const bool conflict = a.outcome == Outcome::aborted_local || a.outcome == Outcome::aborted_global;
        if (conflict) {
            ++s.aborts;
            ++result_.conflict_aborts;
        }
        const auto now = scheduler_.now();
        if (now >= SimTime::from_seconds(scn_.warmup_s) && now < scn_.duration) {
            ++(sm ? s.post_warmup_sm : s.post_warmup_du);
        }
        if (now >= scn_.duration) return;
        ++(sm ? window_.sm[ci] : window_.du[ci]);
        if (a.updating_request) {
            ++window_.updating_attempts;
            if (conflict) ++window_.conflict_aborts;
        }
    }

    void sample() {
        MetricsRow row;
        const double span = opt_.metrics_interval.seconds();
        row.time_s = scheduler_.now().seconds();
        row.committed_tps = static_cast<double>(window_.commits) / span;
        row.abort_rate = window_.updating_attempts
                             ? static_cast<double>(window_.conflict_aborts) / static_cast<double>(window_.updating_attempts)
                             : 0.0;
        for (std::size_t c = 0; c < window_.du.size(); ++c) {
            const auto n = window_.du[c] + window_.sm[c];
            if (n == 0) {
                row.du_ratio.push_back(std::nan(""));
                row.sm_ratio.push_back(std::nan(""));
            } else {
                row.du_ratio.push_back(static_cast<double>(window_.du[c]) / static_cast<double>(n));
                row.sm_ratio.push_back(static_cast<double>(window_.sm[c]) / static_cast<double>(n));
            }
        }
        const auto msgs = network_.ordered_count() - last_msgs_;
        const auto bytes = network_.bytes_broadcast() - last_bytes_;
        row.mean_msg_bytes = msgs ? static_cast<double>(bytes) / static_cast<double>(msgs) : 0.0;
        row.network_utilization = network_.utilization();
        last_msgs_ = network_.ordered_count();
        last_bytes_ = network_.bytes_broadcast();
        result_.rows.push_back(std::move(row));
        window_.reset();
    }

    void finish() {
        result_.scenario = scn_.name;
        result_.oracle = std::string(oracles_.front()->name());
        result_.nodes = scn_.nodes;
        result_.seed = scn_.seed;
        result_.duration = scn_.duration;
        result_.end_time = scheduler_.now();
        const auto measured = scn_.duration.seconds() - scn_.warmup_s;
        result_.post_warmup_tps = measured > 0 ? static_cast<double>(result_.post_warmup_commits) / measured : 0.0;

        std::optional<std::uint64_t> hash;
        std::optional<std::uint64_t> digest;
        bool same = true;
        for (const auto& rp : replicas_) {
            const auto& rep = *rp;
            const auto& k = rep.counters();
            auto& t = result_.totals;
            t.oracle_queries += k.oracle_queries;
            t.du_attempts += k.du_attempts;
            t.du_commits += k.du_commits;
            t.du_read_aborts += k.du_read_aborts;
            t.du_local_cert_aborts += k.du_local_cert_aborts;
            t.du_global_aborts += k.du_global_aborts;
            t.sm_attempts += k.sm_attempts;
            t.sm_executions += k.sm_executions;
            t.sm_commits += k.sm_commits;
            t.sm_conflict_aborts += k.sm_conflict_aborts;
            t.retries += k.retries;
            t.rollbacks += k.rollbacks;
            t.descriptors_delivered += k.descriptors_delivered;
            t.descriptors_committed += k.descriptors_committed;
            t.broadcasts += k.broadcasts;
            t.certification_checks += k.certification_checks;
            t.max_main_depth = std::max(t.max_main_depth, k.max_main_depth);
            t.main_busy_ticks = std::max(t.main_busy_ticks, k.main_busy_ticks);
            t.max_main_queue = std::max(t.max_main_queue, k.max_main_queue);
            result_.lcs.push_back(rep.state().lc());
            if (!network_.up(rep.id())) {
                result_.state_hashes.push_back(std::nullopt);
                continue;
            }
            if (!rep.quiescent()) same = false;
            const auto h = rep.state().state_hash();
            result_.state_hashes.push_back(h);
            if (hash && (*hash != h || *digest != rep.state().log_digest())) same = false;
            hash = h;
            digest = rep.state().log_digest();
        }
        result_.converged = same && hash.has_value();
        result_.sm_conflict_aborts = result_.totals.sm_conflict_aborts;
        result_.max_main_depth = result_.totals.max_main_depth;
        if (history_) result_.history = history_->take();
        if (const auto* h = dynamic_cast<const oracle::HybMLOracle*>(oracles_.front().get())) {
            for (auto& c : result_.classes) {
                const auto* st = h->find(c.class_id);
                if (!st) continue;
                if (!st->du_exec.empty()) c.du_cost_median = st->du_exec.value() + st->du_commit.value();
                if (!st->sm_exec.empty()) c.sm_cost_median = st->sm_exec.value();
                c.learned_abort_rate = st->abort_rate();
            }
        }

        if (result_.sm_conflict_aborts != 0) {
            throw InvariantError(std::to_string(result_.sm_conflict_aborts) + " SM executions aborted on conflict");
        }
        if (result_.max_main_depth > 1) throw InvariantError("main thread served two items at once");
        if (!result_.converged) throw InvariantError("replicas diverged at quiescence");
    }

    workload::ScenarioConfig scn_;
    RunOptions opt_;
    sim::Scheduler scheduler_;
    sim::Network network_;
    ProgramTable programs_;
    ProgramId program_ = 0;
    std::unique_ptr<HistoryRecorder> history_;
    std::vector<std::unique_ptr<oracle::TransactionOracle>> oracles_;
    std::vector<std::unique_ptr<Replica>> replicas_;
    std::vector<Client> clients_;
    std::vector<std::uint64_t> request_counter_;
    std::vector<std::vector<workload::TxClassParams>> phase_classes_;
    std::map<ClassId, std::size_t> class_index_;
    Window window_;
    std::uint64_t last_msgs_ = 0;
    std::uint64_t last_bytes_ = 0;
    RunResult result_;
};

void put(std::string& out, double v) {
    if (std::isnan(v)) {
        out += "nan";
        return;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    out += buf;
}

}  // namespace

RunResult run_scenario(const workload::ScenarioConfig& scenario, const RunOptions& options) {
    Runner runner(scenario, options);
    return runner.run();
}

std::string metrics_csv(const RunResult& r) {
    std::string out = "time_s,committed_tps,abort_rate";
    for (auto c : r.class_ids) out += ",du_ratio_" + std::to_string(c);
    for (auto c : r.class_ids) out += ",sm_ratio_" + std::to_string(c);
    out += ",mean_msg_bytes,network_utilization\n";
    for (const auto& row : r.rows) {
        put(out, row.time_s);
        out += ',';
        put(out, row.committed_tps);
        out += ',';
        put(out, row.abort_rate);
        for (auto v : row.du_ratio) {
            out += ',';
            put(out, v);
        }
        for (auto v : row.sm_ratio) {
            out += ',';
            put(out, v);
        }
        out += ',';
        put(out, row.mean_msg_bytes);
        out += ',';
        put(out, row.network_utilization);
        out += '\n';
    }
    return out;
}

std::string summary(const RunResult& r) {
    std::ostringstream o;
    char buf[256];
    o << "scenario " << r.scenario << " oracle " << r.oracle << " nodes " << r.nodes << " seed " << r.seed << '\n';
    std::snprintf(buf, sizeof buf, "simulated %.3f s (drained at %.3f s)\n", r.duration.seconds(), r.end_time.seconds());
    o << buf;
    o << "requests " << r.requests_issued << " completed " << r.requests_completed << " commits " << r.commits
      << " rollbacks " << r.rollbacks << " conflict aborts " << r.conflict_aborts << '\n';
    std::snprintf(buf, sizeof buf, "post-warmup throughput %.1f tps\n", r.post_warmup_tps);
    o << buf;
    o << "du attempts " << r.totals.du_attempts << " sm attempts " << r.totals.sm_attempts << " sm conflict aborts "
      << r.sm_conflict_aborts << " cross-class conflicts " << r.cross_class_conflicts << '\n';
    std::snprintf(buf, sizeof buf, "busiest main thread %.1f%% (longest queue %llu)\n",
                  r.end_time.ticks ? 100.0 * static_cast<double>(r.totals.main_busy_ticks) /
                                         static_cast<double>(r.end_time.ticks)
                                   : 0.0,
                  static_cast<unsigned long long>(r.totals.max_main_queue));
    o << buf;
    o << "converged " << (r.converged ? "yes" : "no") << '\n';
    o << "class  attempts  abort_rate  sm_ratio  dominant";
    const bool learned = std::any_of(r.classes.begin(), r.classes.end(),
                                     [](const ClassSummary& c) { return c.learned_abort_rate.has_value(); });
    if (learned) o << "  du_cost  sm_cost  learned_abort";
    o << '\n';
    auto opt = [](std::optional<double> v) { return v ? *v : std::nan(""); };
    for (const auto& c : r.classes) {
        std::snprintf(buf, sizeof buf, "T%-4u  %8llu  %10.4f  %8.4f  %-8s", c.class_id,
                      static_cast<unsigned long long>(c.attempts), c.abort_rate(), c.post_warmup_sm_ratio(),
                      std::string(to_string(c.dominant())).c_str());
        o << buf;
        if (learned) {
            std::snprintf(buf, sizeof buf, "  %7.1f  %7.1f  %13.4f", opt(c.du_cost_median), opt(c.sm_cost_median),
                          opt(c.learned_abort_rate));
            o << buf;
        }
        o << '\n';
    }
    return o.str();
}

}  // namespace htr::cluster
