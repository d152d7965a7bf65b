#pragma once

// All-on-chain baseline: the contract itself is the auctioneer. Every party
// posts one bid transaction per iteration; once an iteration's bids are in
// (or its deadline passes) the contract computes the next state.
//
// Call payloads: 0x10 deposit | 0x11 bid: iteration (4) || bid (8) | 0x12 refund

#include "scauction/netsim.hpp"

namespace scauction {

enum class StrawmanOp : std::uint8_t
{
  deposit = 0x10,
  bid = 0x11,
  refund = 0x12,
};

struct StrawmanContractState
{
  std::map<PartyIndex, Amount> deposits;
  Amount forfeiture_pool;
  std::vector<PartyIndex> active;
  std::set<PartyIndex> aborted;
  Version iteration = 0;
  Round deadline = 0;
  std::map<PartyIndex, BidProfile> bids;
  ChannelState current;
  bool started = false;
  bool finished = false;
  bool converged = false;
};

Bytes encode_strawman_deposit();
Bytes encode_strawman_bid(Version iteration, const BidProfile& bid);
Bytes encode_strawman_refund();

/// Runs the baseline for the scenario's economy. Crash-type behaviors stop
/// the party's bids from their iteration on; the rest are ignored.
RunResult run_strawman(const ScenarioConfig& cfg);

} // namespace scauction
