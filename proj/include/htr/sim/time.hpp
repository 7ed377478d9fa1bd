#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>

namespace htr::sim {

/// Virtual time in microsecond ticks.
struct SimTime {
    std::uint64_t ticks = 0;

    constexpr SimTime() = default;
    constexpr explicit SimTime(std::uint64_t t) : ticks(t) {}

    static constexpr SimTime from_seconds(double s) {
        return SimTime{static_cast<std::uint64_t>(s * 1'000'000.0 + 0.5)};
    }
    static constexpr SimTime max() { return SimTime{std::numeric_limits<std::uint64_t>::max()}; }

    constexpr double seconds() const { return static_cast<double>(ticks) / 1'000'000.0; }

    constexpr auto operator<=>(const SimTime&) const = default;

    constexpr SimTime operator+(SimTime o) const { return SimTime{ticks + o.ticks}; }
    constexpr SimTime operator-(SimTime o) const { return SimTime{ticks - o.ticks}; }
    constexpr SimTime& operator+=(SimTime o) {
        ticks += o.ticks;
        return *this;
    }
};

constexpr SimTime ticks(std::uint64_t t) { return SimTime{t}; }

/// Index of a process in [0, n). `kEnvironment` addresses simulator-owned control events.
enum class ProcessId : std::uint32_t {};

constexpr ProcessId kEnvironment{std::numeric_limits<std::uint32_t>::max()};

constexpr std::uint32_t index(ProcessId p) { return static_cast<std::uint32_t>(p); }
constexpr ProcessId process(std::uint32_t i) { return ProcessId{i}; }

}  // namespace htr::sim
