#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

namespace htr {

using ObjectId = std::uint64_t;
using TxId = std::uint64_t;
using RequestId = std::uint64_t;
using ClassId = std::uint32_t;

/// Register value. `empty()` is what a never-written object reads as.
class Value {
public:
    constexpr Value() = default;
    constexpr explicit Value(std::int64_t v) : v_(v) {}

    static constexpr Value empty() { return Value{}; }
    constexpr bool is_empty() const { return v_ == kEmpty; }
    constexpr std::int64_t raw() const { return v_; }

    constexpr auto operator<=>(const Value&) const = default;

private:
    static constexpr std::int64_t kEmpty = std::numeric_limits<std::int64_t>::min();
    std::int64_t v_ = kEmpty;
};

enum class Mode : std::uint8_t { du, sm };

constexpr std::string_view to_string(Mode m) { return m == Mode::du ? "DU" : "SM"; }

/// Transaction id layout. DU ids carry the executing replica and a local
/// counter. SM ids are derived from the request id and its broadcast attempt,
/// so every replica computes the same descriptor id for the same delivery.
namespace ids {

constexpr TxId kSmBit = TxId{1} << 63;

constexpr TxId du_tx(std::uint32_t replica, std::uint64_t counter) {
    return (TxId{replica} << 40) | (counter & ((TxId{1} << 40) - 1));
}
constexpr TxId sm_tx(RequestId request, std::uint32_t attempt) {
    return kSmBit | (request << 12) | (attempt & 0xfffu);
}
constexpr bool is_sm(TxId id) { return (id & kSmBit) != 0; }
constexpr RequestId sm_request(TxId id) { return (id & ((TxId{1} << 53) - 1)) >> 12; }

/// History-level id of one replica's execution of an SM descriptor.
constexpr TxId sm_execution(TxId sm_descriptor, std::uint32_t replica) {
    return sm_descriptor | (TxId{replica + 1} << 53);
}

constexpr RequestId request(std::uint32_t replica, std::uint64_t counter) {
    return (RequestId{replica} << 32) | (counter & 0xffffffffu);
}

}  // namespace ids

}  // namespace htr
