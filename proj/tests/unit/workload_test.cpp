#include "harness.hpp"

#include "htr/workload/hashtable.hpp"
#include "htr/workload/scenario.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

using namespace htr;
using namespace htr::workload;

namespace {

std::string config(const char* rel) { return std::string(HTR_SOURCE_DIR) + "/configs/" + rel; }

}  // namespace

TEST_CASE("simple class mix is 90:10") {
    const auto scn = load_scenario(config("simple.json"));
    std::mt19937_64 rng(123);
    constexpr int kDraws = 100'000;
    int t0 = 0;
    for (int i = 0; i < kDraws; ++i) t0 += pick_class(rng, scn.classes).class_id == 0;
    CHECK(std::abs(t0 / double(kDraws) - 0.90) <= 0.01);
}

TEST_CASE("uniform key draws pass a chi-square test") {
    std::mt19937_64 rng(9);
    constexpr int kBins = 50;
    constexpr int kDraws = 200'000;
    std::vector<int> hist(kBins, 0);
    for (int i = 0; i < kDraws; ++i) ++hist[below(rng, kBins)];
    double chi2 = 0;
    const double expect = double(kDraws) / kBins;
    for (int h : hist) chi2 += (h - expect) * (h - expect) / expect;
    // 49 degrees of freedom: the 99.9th percentile is about 85.4.
    CHECK(chi2 < 85.4);
}

TEST_CASE("T0 requests are read-only with the full read count") {
    const auto scn = load_scenario(config("simple.json"));
    std::mt19937_64 rng(4);
    bool saw_t0 = false, saw_t1 = false;
    for (int i = 0; i < 200; ++i) {
        const auto r = generate_request(rng, scn.classes, 0, ids::request(0, i + 1), 0);
        const auto a = HashtableArgs::decode(r.args);
        if (r.class_id == 0) {
            saw_t0 = true;
            CHECK(r.read_only);
            CHECK(a.read_keys.size() == 2500);
            CHECK(a.toggles.empty());
        } else {
            saw_t1 = true;
            CHECK_FALSE(r.read_only);
            CHECK(a.read_keys.size() == 300);
            CHECK(a.toggles.size() == 5);
        }
        for (auto k : a.read_keys) CHECK(k < scn.hashtable_size);
    }
    CHECK(saw_t0);
    CHECK(saw_t1);
}

TEST_CASE("zero-update class never broadcasts") {
    auto c = testing::MiniCluster::fixed(3, Mode::sm);
    const ProgramId ht = register_hashtable(c->programs);
    std::vector<TxClassParams> cls{TxClassParams{0, 1000, 20, 0, 100, 0, 0, AccessPattern::random}};
    std::mt19937_64 rng(1);
    for (int i = 0; i < 20; ++i) c->submit(0, generate_request(rng, cls, ht, ids::request(0, i + 1), 0));
    c->scheduler.run();
    CHECK(c->responses.size() == 20);
    CHECK(c->network.ordered_count() == 0);
}

TEST_CASE("toggle inserts into an empty slot and empties an occupied one") {
    auto c = testing::MiniCluster::fixed(3, Mode::du);
    const ProgramId ht = register_hashtable(c->programs);
    HashtableArgs a;
    a.toggles.emplace_back(12, 777);
    Request r;
    r.program = ht;
    r.args = a.encode();
    r.id = 1;
    c->submit(0, r);
    c->scheduler.run();
    for (auto& rep : c->replicas) CHECK(rep->state().store().get(12).value == Value{777});
    r.id = 2;
    c->submit(1, r);
    c->scheduler.run();
    for (auto& rep : c->replicas) CHECK(rep->state().store().get(12).value.is_empty());
}

TEST_CASE("prepopulation fills exactly half the table") {
    const auto slots = prepopulate(600'000, 31);
    CHECK(slots.size() == 300'000);
    std::set<ObjectId> unique;
    for (const auto& [k, v] : slots) {
        CHECK(k < 600'000);
        CHECK_FALSE(v.is_empty());
        unique.insert(k);
    }
    CHECK(unique.size() == 300'000);
    // Uniform placement: each tenth of the table holds about a tenth of the items.
    std::vector<int> tenth(10, 0);
    for (auto k : unique) ++tenth[k / 60'000];
    for (int t : tenth) CHECK(std::abs(t - 30'000) < 1'000);
    CHECK(prepopulate(7, 1).size() == 3);
}

TEST_CASE("Complex-Live phases rewrite class parameters relative to the base") {
    const auto scn = load_scenario(config("complex_live.json"));
    const auto base = scn.classes;
    auto at = [&](double s) { return scn.classes_at(sim::SimTime::from_seconds(s)); };
    const auto b = at(250), c = at(450), d = at(650), e = at(850);
    for (std::size_t i = 0; i < base.size(); ++i) {
        const bool updating = base[i].class_id >= 1;
        CHECK(b[i].reads == (updating ? base[i].reads * 2 : base[i].reads));
        CHECK(b[i].updates == (updating ? base[i].updates * 2 : base[i].updates));
        CHECK(c[i].sleep == (updating ? 100u : 0u));  // 0.1 ms in microsecond ticks
        CHECK(d[i].range == (updating ? base[i].range / 2 : base[i].range));
        CHECK(e[i] == base[i]);
    }
    auto gen = [&](double s) {
        std::mt19937_64 rng(2);
        for (;;) {
            auto r = generate_request(rng, at(s), 0, 1, 0);
            if (!r.read_only) return HashtableArgs::decode(r.args);
        }
    };
    CHECK(gen(450).sleep == 100);
    CHECK(gen(50).sleep == 0);
}

TEST_CASE("same seed gives the same request stream") {
    const auto scn = load_scenario(config("complex.json"));
    std::mt19937_64 a(5), b(5);
    for (int i = 0; i < 500; ++i) {
        const auto x = generate_request(a, scn.classes, 0, i, 0);
        const auto y = generate_request(b, scn.classes, 0, i, 0);
        REQUIRE(x.class_id == y.class_id);
        REQUIRE(x.args == y.args);
    }
}

TEST_CASE("scenario validation rejects bad configurations") {
    const std::string ok = R"({"hashtable_size": 100, "classes": [
        {"id": 0, "probability": 900, "reads": 3, "range": 100, "offset": 0},
        {"id": 1, "probability": 100, "reads": 1, "updates": 1, "range": 50}]})";
    CHECK_NOTHROW(parse_scenario(ok));
    CHECK_THROWS_AS(parse_scenario(ok, {"classes.0.probability=800"}), ConfigError);
    CHECK_THROWS_AS(parse_scenario(ok, {"classes.1.range=500"}), ConfigError);
    CHECK_THROWS_AS(parse_scenario("{not json"), ConfigError);
    const auto o = parse_scenario(ok, {"nodes=5", "net.base_latency=999"});
    CHECK(o.nodes == 5);
    CHECK(o.net.base_latency == sim::SimTime{999});
    const std::string overlap = R"({"hashtable_size": 100, "classes": [
        {"id": 1, "probability": 500, "reads": 1, "updates": 1, "range": 60, "offset": 0},
        {"id": 2, "probability": 500, "reads": 1, "updates": 1, "range": 60, "offset": 30}]})";
    CHECK_THROWS_AS(parse_scenario(overlap), ConfigError);
}

TEST_CASE("complex configuration packs the ten updating ranges without overlap") {
    const auto scn = load_scenario(config("complex.json"));
    REQUIRE(scn.classes.size() == 11);
    std::uint64_t prev_range = ~0ull;
    for (std::size_t i = 1; i < scn.classes.size(); ++i) {
        const auto& p = scn.classes[i];
        CHECK(p.range < prev_range);  // T1 widest, T10 narrowest
        prev_range = p.range;
        CHECK(p.offset + p.range <= scn.hashtable_size);
    }
}
