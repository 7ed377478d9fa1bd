#pragma once

#include "htr/core/replica.hpp"
#include "htr/oracle/oracle.hpp"
#include "htr/sim/network.hpp"
#include "htr/sim/scheduler.hpp"

#include <deque>
#include <memory>
#include <vector>

namespace htr::testing {

/// Plays back a fixed list of modes, then repeats the last one.
class ScriptedOracle final : public oracle::TransactionOracle {
public:
    explicit ScriptedOracle(std::deque<Mode> script) : script_(std::move(script)) {}
    Mode query(const Request&, const oracle::EnvSnapshot&) override {
        ++queries;
        if (script_.size() > 1) {
            const auto m = script_.front();
            script_.pop_front();
            return m;
        }
        return script_.front();
    }
    void feed(const oracle::OracleSample& s) override { samples.push_back(s); }
    std::string_view name() const override { return "scripted"; }

    std::size_t queries = 0;
    std::vector<oracle::OracleSample> samples;

private:
    std::deque<Mode> script_;
};

inline Value or_zero(Value v) { return v.is_empty() ? Value{0} : v; }

/// args: [oid]; adds one to the object.
inline TxTask increment_program(TxContext& ctx, const Request& r) {
    const auto oid = static_cast<ObjectId>(r.args.at(0));
    const Value v = co_await ctx.read(oid);
    ctx.write(oid, Value{or_zero(v).raw() + 1});
}

/// args: [read oid, pause ticks, write oid, value]; reads, computes for a while, writes.
inline TxTask read_pause_write_program(TxContext& ctx, const Request& r) {
    co_await ctx.read(static_cast<ObjectId>(r.args.at(0)));
    co_await ctx.sleep(static_cast<std::uint64_t>(r.args.at(1)));
    ctx.write(static_cast<ObjectId>(r.args.at(2)), Value{r.args.at(3)});
}

/// args: [oid...]; reads each object.
inline TxTask read_program(TxContext& ctx, const Request& r) {
    for (auto oid : r.args) co_await ctx.read(static_cast<ObjectId>(oid));
}

/// args: [oid]; writes then rolls back.
inline TxTask rollback_program(TxContext& ctx, const Request& r) {
    ctx.write(static_cast<ObjectId>(r.args.at(0)), Value{99});
    ctx.rollback();
    co_return;
}

/// A handful of replicas wired to one scheduler and network, one oracle each.
struct MiniCluster {
    static constexpr ProgramId kIncrement = 0;
    static constexpr ProgramId kReadPauseWrite = 1;
    static constexpr ProgramId kRead = 2;
    static constexpr ProgramId kRollback = 3;

    explicit MiniCluster(std::uint32_t n, std::vector<std::unique_ptr<oracle::TransactionOracle>> oracles,
                         sim::NetConfig net = {}, ReplicaConfig cfg = {})
        : scheduler(n), network(scheduler, net), recorder(n), oracles_(std::move(oracles)) {
        programs.add(increment_program);
        programs.add(read_pause_write_program);
        programs.add(read_program);
        programs.add(rollback_program);
        for (std::uint32_t p = 0; p < n; ++p) {
            replicas.push_back(std::make_unique<Replica>(sim::process(p), scheduler, network, programs,
                                                         *oracles_.at(p), cfg, &recorder));
        }
    }

    MiniCluster(const MiniCluster&) = delete;
    MiniCluster& operator=(const MiniCluster&) = delete;

    static std::unique_ptr<MiniCluster> fixed(std::uint32_t n, Mode m, sim::NetConfig net = {},
                                              ReplicaConfig cfg = {}) {
        std::vector<std::unique_ptr<oracle::TransactionOracle>> os;
        for (std::uint32_t p = 0; p < n; ++p) os.push_back(std::make_unique<oracle::FixedOracle>(m));
        return std::make_unique<MiniCluster>(n, std::move(os), net, cfg);
    }

    Replica& at(std::uint32_t p) { return *replicas.at(p); }

    void submit(std::uint32_t p, Request r) {
        at(p).submit(std::move(r), [this](const Response& resp) { responses.push_back(resp); });
    }

    static Request request(RequestId id, ProgramId program, std::vector<std::int64_t> args, bool read_only = false) {
        Request r;
        r.id = id;
        r.program = program;
        r.args = std::move(args);
        r.read_only = read_only;
        return r;
    }

    sim::Scheduler scheduler;
    sim::Network network;
    ProgramTable programs;
    HistoryRecorder recorder;
    std::vector<std::unique_ptr<Replica>> replicas;
    std::vector<Response> responses;

private:
    std::vector<std::unique_ptr<oracle::TransactionOracle>> oracles_;
};

}  // namespace htr::testing
