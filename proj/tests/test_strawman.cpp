#include "scauction/harness.hpp"
#include "scauction/strawman.hpp"

#include <gtest/gtest.h>

using namespace scauction;

namespace {

ScenarioConfig pair_economy()
{
  ScenarioConfig c;
  c.name = "pair";
  c.mode = Mode::strawman;
  c.parties = {PartyEcon::buyer(10, 1.0, 10), PartyEcon::seller(1.0, 10)};
  c.max_iterations = 1;
  c.seed = 2;
  return c;
}

ScenarioConfig four_economy()
{
  ScenarioConfig c;
  c.name = "four";
  c.mode = Mode::strawman;
  c.parties = {PartyEcon::buyer(10, 1.0, 10), PartyEcon::seller(1.0, 10), PartyEcon::buyer(12, 1.5, 10),
               PartyEcon::seller(1.5, 10)};
  c.gamma = 0.02;
  c.eps = 1e-4;
  c.seed = 4;
  return c;
}

} // namespace

TEST(StrawmanCalls, Encodings)
{
  EXPECT_EQ(encode_strawman_deposit(), Bytes{0x10});
  EXPECT_EQ(encode_strawman_refund(), Bytes{0x12});
  const Bytes bid = encode_strawman_bid(7, BidProfile{Fixed::from_double(1), Fixed::from_double(2)});
  ASSERT_EQ(bid.size(), 1u + 4 + BidProfile::kEncodedSize);
  EXPECT_EQ(bid[0], 0x11);
  EXPECT_EQ(bid[1], 7);
}

TEST(Strawman, TwoPartiesOneIteration)
{
  const ScenarioConfig c = pair_economy();
  const RunResult r = run_strawman(c);
  const MetricsRecord& m = r.metrics;
  EXPECT_EQ(m.mode, Mode::strawman);
  EXPECT_EQ(m.tx_by_kind.at("bid"), 2u);
  EXPECT_EQ(m.tx_by_kind.at("deposit"), 2u);
  EXPECT_EQ(m.tx_by_kind.at("refund"), 2u);
  EXPECT_EQ(m.on_chain_tx, 6u);
  // Deposits, bids and refunds each land in a single block.
  EXPECT_EQ(m.blocks_used, 3u);
  EXPECT_EQ(m.gas_total, 2 * (c.gas.create_tx + c.gas.strawman_bid_tx + c.gas.close_tx));
  EXPECT_EQ(m.off_chain_messages, 0u);
  EXPECT_EQ(m.iterations_run, 1u);
}

TEST(Strawman, OneBidPerPartyPerIteration)
{
  ScenarioConfig c = four_economy();
  c.max_iterations = 12;
  const RunResult r = run_strawman(c);
  EXPECT_EQ(r.metrics.tx_by_kind.at("bid"), 4u * 12);
  EXPECT_EQ(r.metrics.on_chain_tx, 4u * 12 + 8);
  // Each iteration spans Δ+1 rounds.
  for (Version k = 2; k <= 12; ++k)
    EXPECT_EQ(r.finalized_round.at(k) - r.finalized_round.at(k - 1), c.delta + 1);
}

TEST(Strawman, AgreesWithChannelMode)
{
  ScenarioConfig st = four_economy();
  ScenarioConfig ch = st;
  ch.mode = Mode::channel;
  const RunResult a = run_strawman(st);
  const RunResult b = run_channel(ch);
  ASSERT_TRUE(a.metrics.converged);
  ASSERT_TRUE(b.metrics.converged);
  const ComparisonReport rep = compare_runs(a.metrics, b.metrics);
  EXPECT_FALSE(rep.allocation_mismatch);
  EXPECT_LE(rep.price_diff, 1e-3);
  EXPECT_EQ(a.metrics.iterations_run, b.metrics.iterations_run);
  const Equilibrium eq = equilibrium_oracle(st.parties);
  EXPECT_NEAR(a.metrics.final_price, eq.price, 1e-3);
}

TEST(Strawman, SilentPartyForfeitsDeposit)
{
  ScenarioConfig c = four_economy();
  c.max_iterations = 10;
  c.adversaries.push_back(AdversarySpec{3, Behavior::silent, 4, MessageKind::commit, 0});
  const RunResult r = run_strawman(c);
  EXPECT_EQ(r.metrics.eliminated, (std::vector<PartyIndex>{3}));
  const Amount initial = Amount::from_double(c.initial_balance);
  EXPECT_EQ(r.final_ledger.balances.at(3), initial - Amount::from_double(c.deposit));
  Amount total;
  for (const auto& [p, a] : r.final_ledger.balances)
    total += a;
  EXPECT_EQ(total, r.initial_total);
  for (const Amount& a : r.conservation)
    EXPECT_EQ(a, r.initial_total);
  ASSERT_TRUE(r.final_state);
  EXPECT_EQ(r.final_state->active_parties, (std::vector<PartyIndex>{0, 1, 2}));
}

TEST(Strawman, Deterministic)
{
  ScenarioConfig c = four_economy();
  c.max_iterations = 5;
  EXPECT_EQ(run_strawman(c).metrics, run_strawman(c).metrics);
}
