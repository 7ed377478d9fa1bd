#pragma once

#include "htr/core/descriptor.hpp"
#include "htr/core/types.hpp"

#include <coroutine>
#include <cstdint>
#include <exception>
#include <functional>
#include <utility>
#include <vector>

namespace htr {

/// Thrown through a program to end the run; caught by the executing context.
struct RetrySignal {};
struct RollbackSignal {};
/// A DU read failed its per-read certification.
struct ConflictAbort {
    ObjectId oid = 0;
};

/// Coroutine handle of one program execution. Starts suspended.
class TxTask {
public:
    struct promise_type {
        std::exception_ptr error;
        TxTask get_return_object() { return TxTask{std::coroutine_handle<promise_type>::from_promise(*this)}; }
        std::suspend_always initial_suspend() noexcept { return {}; }
        std::suspend_always final_suspend() noexcept { return {}; }
        void return_void() {}
        void unhandled_exception() { error = std::current_exception(); }
    };

    TxTask() = default;
    explicit TxTask(std::coroutine_handle<promise_type> h) : h_(h) {}
    TxTask(TxTask&& o) noexcept : h_(std::exchange(o.h_, {})) {}
    TxTask& operator=(TxTask&& o) noexcept {
        if (this != &o) {
            reset();
            h_ = std::exchange(o.h_, {});
        }
        return *this;
    }
    TxTask(const TxTask&) = delete;
    TxTask& operator=(const TxTask&) = delete;
    ~TxTask() { reset(); }

    bool valid() const { return static_cast<bool>(h_); }
    bool done() const { return h_.done(); }
    void resume() { h_.resume(); }
    std::exception_ptr error() const { return h_.promise().error; }
    void reset() {
        if (h_) h_.destroy();
        h_ = {};
    }

private:
    std::coroutine_handle<promise_type> h_;
};

/// Read/write surface a program runs against. The same program body runs
/// under DU (optimistic, may suspend) and SM (synchronous) contexts.
class TxContext {
public:
    virtual ~TxContext() = default;

    struct ReadAwaiter {
        TxContext& ctx;
        ObjectId oid;
        bool await_ready() { return !ctx.should_yield(); }
        void await_suspend(std::coroutine_handle<> h) { ctx.suspend(h); }
        Value await_resume() { return ctx.do_read(oid); }
    };

    struct SleepAwaiter {
        TxContext& ctx;
        bool await_ready() { return !ctx.should_yield(); }
        void await_suspend(std::coroutine_handle<> h) { ctx.suspend(h); }
        void await_resume() {}
    };

    ReadAwaiter read(ObjectId oid) { return ReadAwaiter{*this, oid}; }
    void write(ObjectId oid, Value v) { do_write(oid, v); }
    /// Simulated computation of `ticks`.
    SleepAwaiter sleep(std::uint64_t ticks) {
        charge(ticks);
        return SleepAwaiter{*this};
    }
    [[noreturn]] void retry() { throw RetrySignal{}; }
    [[noreturn]] void rollback() { throw RollbackSignal{}; }

    virtual Mode mode() const = 0;

protected:
    virtual bool should_yield() const = 0;
    virtual void suspend(std::coroutine_handle<> h) = 0;
    virtual Value do_read(ObjectId oid) = 0;
    virtual void do_write(ObjectId oid, Value v) = 0;
    virtual void charge(std::uint64_t ticks) = 0;
};

using Program = std::function<TxTask(TxContext&, const Request&)>;

/// Programs addressable by `Request::program`.
class ProgramTable {
public:
    ProgramId add(Program p) {
        programs_.push_back(std::move(p));
        return static_cast<ProgramId>(programs_.size() - 1);
    }
    const Program& at(ProgramId id) const { return programs_.at(id); }
    std::size_t size() const { return programs_.size(); }

private:
    std::vector<Program> programs_;
};

}  // namespace htr
