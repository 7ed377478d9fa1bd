#include "htr/workload/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace htr::workload {

using nlohmann::json;

namespace {

std::uint64_t scaled(std::uint64_t v, double s) {
    return static_cast<std::uint64_t>(std::llround(static_cast<double>(v) * s));
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void read_time(const json& j, const char* key, sim::SimTime& out) {
    if (j.contains(key)) out = sim::SimTime{j.at(key).get<std::uint64_t>()};
}

AccessPattern parse_pattern(const std::string& s) {
    if (s == "random") return AccessPattern::random;
    if (s == "contiguous") return AccessPattern::contiguous;
    throw ConfigError("unknown access_pattern '" + s + "'");
}

std::vector<ClassId> parse_class_list(const json& j) {
    std::vector<ClassId> out;
    for (const auto& e : j) {
        if (e.is_string()) {
            // "a-b" inclusive range
            const auto s = e.get<std::string>();
            const auto dash = s.find('-');
            if (dash == std::string::npos) throw ConfigError("bad class range '" + s + "'");
            const auto a = std::stoul(s.substr(0, dash));
            const auto b = std::stoul(s.substr(dash + 1));
            for (auto c = a; c <= b; ++c) out.push_back(static_cast<ClassId>(c));
        } else {
            out.push_back(e.get<ClassId>());
        }
    }
    return out;
}

json apply_overrides(json doc, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not key=value");
        std::string pointer;
        std::stringstream path(o.substr(0, eq));
        std::string part;
        while (std::getline(path, part, '.')) pointer += "/" + part;
        const auto text = o.substr(eq + 1);
        json value;
        try {
            value = json::parse(text);
        } catch (const json::parse_error&) {
            value = text;
        }
        try {
            doc[json::json_pointer(pointer)] = value;
        } catch (const json::exception& e) {
            throw ConfigError("override '" + o + "': " + e.what());
        }
    }
    return doc;
}

ScenarioConfig from_json(const json& j) {
    ScenarioConfig c;
    read_field(j, "name", c.name);
    read_field(j, "hashtable_size", c.hashtable_size);
    read_field(j, "prepopulate", c.prepopulate);
    read_field(j, "nodes", c.nodes);
    if (j.contains("duration_s")) c.duration = sim::SimTime::from_seconds(j.at("duration_s").get<double>());
    read_field(j, "clients_per_replica", c.clients_per_replica);
    read_field(j, "seed", c.seed);
    read_field(j, "warmup_s", c.warmup_s);
    read_field(j, "distinct_ranges", c.distinct_ranges);

    if (j.contains("net")) {
        const auto& n = j.at("net");
        read_time(n, "base_latency", c.net.base_latency);
        read_field(n, "per_byte_latency", c.net.per_byte_latency);
        read_field(n, "bandwidth_bytes_per_tick", c.net.bandwidth_bytes_per_tick);
        read_field(n, "jitter_seed", c.net.jitter_seed);
        read_time(n, "jitter", c.net.jitter);
        read_time(n, "utilization_window", c.net.utilization_window);
        read_time(n, "snapshot_latency", c.net.snapshot_latency);
    }
    if (j.contains("costs")) {
        const auto& k = j.at("costs");
        read_field(k, "op_cost", c.replica.costs.op_cost);
        read_field(k, "cert_cost", c.replica.costs.cert_cost);
        read_field(k, "apply_cost", c.replica.costs.apply_cost);
        read_field(k, "deliver_overhead", c.replica.costs.deliver_overhead);
    }
    if (j.contains("replica")) {
        const auto& r = j.at("replica");
        read_field(r, "worker_cores", c.replica.worker_cores);
        read_field(r, "du_yield_quantum", c.replica.du_yield_quantum);
        read_field(r, "verify_certification", c.replica.verify_certification);
    }
    if (j.contains("oracle")) {
        const auto& o = j.at("oracle");
        read_field(o, "eps_du", c.hybml.eps_du);
        read_field(o, "eps_sm", c.hybml.eps_sm);
        read_field(o, "median_window", c.hybml.median_window);
        read_field(o, "average_window", c.hybml.average_window);
        read_field(o, "decay", c.hybml.decay);
        read_field(o, "decay_every", c.hybml.decay_every);
        read_field(o, "net_threshold", c.hybml.net_threshold);
        read_field(o, "eps_floor", c.hybml.eps_floor);
        read_field(o, "feed_local_aborts", c.hybml.feed_local_aborts);
    }

    std::uint64_t next_offset = 0;
    for (const auto& e : j.at("classes")) {
        TxClassParams p;
        p.class_id = e.at("id").get<ClassId>();
        read_field(e, "probability", p.probability);
        read_field(e, "reads", p.reads);
        read_field(e, "updates", p.updates);
        read_field(e, "range", p.range);
        read_field(e, "sleep", p.sleep);
        if (e.contains("access_pattern")) p.access_pattern = parse_pattern(e.at("access_pattern").get<std::string>());
        if (e.contains("offset")) {
            p.offset = e.at("offset").get<std::uint64_t>();
        } else if (p.updates > 0) {
            // Updating classes without an explicit offset are packed into distinct ranges.
            p.offset = next_offset;
            next_offset += p.range;
        }
        c.classes.push_back(p);
    }

    if (j.contains("phases")) {
        for (const auto& e : j.at("phases")) {
            Phase ph;
            read_field(e, "label", ph.label);
            ph.start = sim::SimTime::from_seconds(e.at("start_s").get<double>());
            if (e.contains("overrides")) {
                for (const auto& o : e.at("overrides")) {
                    ClassOverride ov;
                    if (o.contains("classes")) ov.classes = parse_class_list(o.at("classes"));
                    if (o.contains("reads")) ov.reads = o.at("reads").get<std::uint32_t>();
                    if (o.contains("updates")) ov.updates = o.at("updates").get<std::uint32_t>();
                    if (o.contains("range")) ov.range = o.at("range").get<std::uint64_t>();
                    if (o.contains("sleep")) ov.sleep = o.at("sleep").get<std::uint64_t>();
                    if (o.contains("reads_scale")) ov.reads_scale = o.at("reads_scale").get<double>();
                    if (o.contains("updates_scale")) ov.updates_scale = o.at("updates_scale").get<double>();
                    if (o.contains("range_scale")) ov.range_scale = o.at("range_scale").get<double>();
                    ph.overrides.push_back(std::move(ov));
                }
            }
            c.phases.push_back(std::move(ph));
        }
    }
    c.replica.dense_capacity = c.hashtable_size;
    return c;
}

}  // namespace

std::vector<TxClassParams> apply_phase(const std::vector<TxClassParams>& base, const Phase& phase) {
    auto out = base;
    for (const auto& ov : phase.overrides) {
        for (auto& p : out) {
            if (!ov.classes.empty() && std::find(ov.classes.begin(), ov.classes.end(), p.class_id) == ov.classes.end()) {
                continue;
            }
            if (ov.reads) p.reads = *ov.reads;
            if (ov.updates) p.updates = *ov.updates;
            if (ov.range) p.range = *ov.range;
            if (ov.sleep) p.sleep = *ov.sleep;
            if (ov.reads_scale) p.reads = static_cast<std::uint32_t>(scaled(p.reads, *ov.reads_scale));
            if (ov.updates_scale) p.updates = static_cast<std::uint32_t>(scaled(p.updates, *ov.updates_scale));
            if (ov.range_scale) p.range = std::max<std::uint64_t>(1, scaled(p.range, *ov.range_scale));
        }
    }
    return out;
}

int ScenarioConfig::phase_index(sim::SimTime t) const {
    int idx = -1;
    for (std::size_t i = 0; i < phases.size(); ++i) {
        if (phases[i].start <= t) idx = static_cast<int>(i);
    }
    return idx;
}

std::vector<TxClassParams> ScenarioConfig::classes_at(sim::SimTime t) const {
    const int idx = phase_index(t);
    if (idx < 0) return classes;
    return apply_phase(classes, phases[static_cast<std::size_t>(idx)]);
}

void ScenarioConfig::validate() const {
    if (nodes == 0) throw ConfigError("nodes must be at least 1");
    if (classes.empty()) throw ConfigError("no transaction classes");
    if (hashtable_size == 0) throw ConfigError("hashtable_size must be positive");
    std::uint32_t total = 0;
    for (const auto& p : classes) total += p.probability;
    if (total != 1000) throw ConfigError("class probabilities sum to " + std::to_string(total) + ", expected 1000");
    for (std::size_t i = 1; i < phases.size(); ++i) {
        if (!(phases[i - 1].start < phases[i].start)) throw ConfigError("phase start times must strictly increase");
    }
    std::vector<TxClassParams> all = classes;
    for (const auto& ph : phases) {
        auto v = apply_phase(classes, ph);
        all.insert(all.end(), v.begin(), v.end());
    }
    for (const auto& p : all) {
        if (p.range == 0) throw ConfigError("class " + std::to_string(p.class_id) + " has an empty range");
        if (p.offset + p.range > hashtable_size) {
            throw ConfigError("class " + std::to_string(p.class_id) + " range exceeds the hashtable");
        }
    }
    for (std::size_t a = 0; distinct_ranges && a < classes.size(); ++a) {
        for (std::size_t b = a + 1; b < classes.size(); ++b) {
            const auto& x = classes[a];
            const auto& y = classes[b];
            if (x.updates == 0 || y.updates == 0) continue;
            if (x.offset < y.offset + y.range && y.offset < x.offset + x.range) {
                throw ConfigError("updating classes " + std::to_string(x.class_id) + " and " +
                                  std::to_string(y.class_id) + " overlap");
            }
        }
    }
}

ScenarioConfig parse_scenario(const std::string& json_text, const std::vector<std::string>& overrides) {
    try {
        auto doc = apply_overrides(json::parse(json_text), overrides);
        auto c = from_json(doc);
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
}

ScenarioConfig load_scenario(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), overrides);
}

}  // namespace htr::workload
