#pragma once

#include <cstdint>

namespace scauction {

/// Index of a party in the scenario's fixed party list (2 bytes on the wire).
using PartyIndex = std::uint16_t;

/// Wire sentinel for "no party" (p_r = ⊥).
inline constexpr PartyIndex kNoParty = 0xFFFF;

/// Synchronous round counter.
using Round = std::int64_t;

using Version = std::uint32_t;

} // namespace scauction
