#include "scauction/netsim.hpp"

#include <gtest/gtest.h>

using namespace scauction;

namespace {

ScenarioConfig small(std::size_t n = 5)
{
  const EconTable pool = {
      PartyEcon::buyer(10, 1.0, 10), PartyEcon::seller(1.0, 10), PartyEcon::buyer(12, 1.5, 10),
      PartyEcon::seller(1.5, 10),    PartyEcon::buyer(9, 2.0, 10), PartyEcon::seller(2.0, 10),
      PartyEcon::buyer(11, 1.2, 10),
  };
  ScenarioConfig c;
  c.name = "small";
  c.parties.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
  c.gamma = 0.02;
  c.max_iterations = 25;
  c.seed = 3;
  return c;
}

Round max_finalize_gap(const RunResult& r)
{
  Round gap = 0;
  Round prev = -1;
  for (const auto& [v, round] : r.finalized_round) {
    if (prev >= 0)
      gap = std::max(gap, round - prev);
    prev = round;
  }
  return gap;
}

void expect_conserved(const RunResult& r)
{
  ASSERT_FALSE(r.conservation.empty());
  for (std::size_t i = 0; i < r.conservation.size(); ++i)
    ASSERT_EQ(r.conservation[i], r.initial_total) << "round " << i;
  Amount final_total;
  for (const auto& [p, a] : r.final_ledger.balances)
    final_total += a;
  EXPECT_EQ(final_total, r.initial_total);
}

void expect_monotone(const RunResult& r)
{
  for (std::size_t i = 1; i < r.accepted_versions.size(); ++i)
    EXPECT_GT(r.accepted_versions[i], r.accepted_versions[i - 1]);
}

} // namespace

TEST(Netsim, SameSeedGivesIdenticalTraceBytes)
{
  const ScenarioConfig c = small();
  const RunResult a = run_channel(c);
  const RunResult b = run_channel(c);
  EXPECT_EQ(trace_to_json_lines(a.trace), trace_to_json_lines(b.trace));
  EXPECT_EQ(a.metrics, b.metrics);
}

TEST(Netsim, HonestRunFollowsMessageLaw)
{
  const ScenarioConfig c = small(5);
  const RunResult r = run_channel(c);
  const std::uint64_t n = 5;
  ASSERT_EQ(r.messages_by_iteration.size(), 25u);
  for (const auto& [k, count] : r.messages_by_iteration)
    EXPECT_EQ(count, 3 * n * (n - 1)) << "iteration " << k;
  EXPECT_EQ(r.metrics.off_chain_messages, 25 * 3 * n * (n - 1));
  EXPECT_EQ(r.metrics.on_chain_tx, 2 * n);
  EXPECT_EQ(r.metrics.tx_by_kind.at("create"), n);
  EXPECT_EQ(r.metrics.tx_by_kind.at("close"), n);
  EXPECT_EQ(r.metrics.iterations_run, 25u);
  EXPECT_EQ(max_finalize_gap(r), 6);
  expect_conserved(r);
}

TEST(Netsim, HonestRunSettlesBalancesExactly)
{
  const ScenarioConfig c = small(4);
  const RunResult r = run_channel(c);
  for (const auto& [p, a] : r.final_ledger.balances)
    EXPECT_EQ(a, Amount::from_double(c.initial_balance)) << "party " << p;
  EXPECT_EQ(r.final_judge.channel, ChannelStatus::none);
}

TEST(Netsim, SynchronyOneRoundMessagesAndDeltaConfirmations)
{
  const ScenarioConfig c = small(3);
  const RunResult r = run_channel(c);
  std::map<std::pair<Round, PartyIndex>, std::size_t> sent_by;
  for (const auto& t : r.trace)
    for (const auto& s : t.sent)
      sent_by[{t.round, s.sender}] += s.recipients;
  std::map<std::pair<Round, PartyIndex>, std::size_t> delivered_from;
  for (const auto& t : r.trace)
    for (const auto& d : t.delivered)
      delivered_from[{t.round - 1, d.from}] += 1;
  EXPECT_EQ(sent_by, delivered_from);
  for (const auto& t : r.trace)
    for (const auto& tx : t.confirmed)
      EXPECT_EQ(t.round - tx.submit_round, c.delta);
}

TEST(Netsim, NoRevealBeforeOwnCommitInTrace)
{
  const RunResult r = run_channel(small(5));
  std::map<std::pair<PartyIndex, std::uint32_t>, Round> commit_round;
  for (const auto& t : r.trace)
    for (const auto& s : t.sent)
      if (s.kind == MessageKind::commit)
        commit_round.emplace(std::make_pair(s.sender, s.iteration), t.round);
  std::size_t reveals = 0;
  for (const auto& t : r.trace) {
    for (const auto& s : t.sent) {
      if (s.kind != MessageKind::reveal)
        continue;
      ++reveals;
      const auto it = commit_round.find({s.sender, s.iteration});
      ASSERT_NE(it, commit_round.end());
      EXPECT_LT(it->second, t.round);
    }
  }
  EXPECT_EQ(reveals, 25u * 5);
}

TEST(Netsim, InitiatorOpenModeCreatesChannel)
{
  ScenarioConfig c = small(4);
  c.open = OpenMode::initiator;
  const RunResult r = run_channel(c);
  EXPECT_EQ(r.metrics.tx_by_kind.at("create"), 4u);
  EXPECT_EQ(r.metrics.iterations_run, 25u);
}

TEST(Netsim, RoundCapRaisesStall)
{
  ScenarioConfig c = small(3);
  c.round_cap = 40;
  EXPECT_THROW(run_channel(c), StallError);
}

TEST(Netsim, IterationCapRaisesNonConvergence)
{
  ScenarioConfig c = small(3);
  c.max_iterations.reset();
  c.iteration_cap = 3;
  c.gamma = 0.0001;
  EXPECT_THROW(run_channel(c), NonConvergenceError);
}

struct AdversaryCase
{
  const char* name;
  Behavior behavior;
  MessageKind phase;
  bool eliminated;
  bool revoked;
};

class NetsimAdversary : public ::testing::TestWithParam<AdversaryCase>
{
};

TEST_P(NetsimAdversary, ResolvesWithinBoundAndConserves)
{
  const AdversaryCase& ac = GetParam();
  ScenarioConfig c = small(5);
  AdversarySpec spec;
  spec.party = 2;
  spec.behavior = ac.behavior;
  spec.iteration = 8;
  spec.phase = ac.phase;
  spec.version = 3;
  c.adversaries.push_back(spec);
  const RunResult r = run_channel(c);

  expect_conserved(r);
  expect_monotone(r);
  EXPECT_LE(max_finalize_gap(r), 4 * c.delta);
  EXPECT_EQ(r.metrics.iterations_run, 25u);
  const bool elim = std::find(r.metrics.eliminated.begin(), r.metrics.eliminated.end(), 2) != r.metrics.eliminated.end();
  const bool rev = std::find(r.metrics.revoked.begin(), r.metrics.revoked.end(), 2) != r.metrics.revoked.end();
  EXPECT_EQ(elim, ac.eliminated);
  EXPECT_EQ(rev, ac.revoked);
  if (ac.eliminated) {
    EXPECT_EQ(r.metrics.tx_by_kind.at("eliminate"), 4u);
    EXPECT_EQ(r.final_ledger.balances.at(2), Amount::from_double(c.initial_balance - c.deposit));
  }
  if (ac.revoked) {
    EXPECT_EQ(r.metrics.tx_by_kind.at("revoke"), 1u);
    EXPECT_EQ(r.final_ledger.balances.at(2), Amount::from_double(c.initial_balance));
  }
  if (ac.eliminated || ac.revoked) {
    ASSERT_TRUE(r.final_state);
    EXPECT_EQ(r.final_state->active_parties, (std::vector<PartyIndex>{0, 1, 3, 4}));
  }
  if (ac.behavior == Behavior::stale_submit) {
    EXPECT_EQ(r.metrics.tx_by_kind.at("state_submit"), 2u);
    EXPECT_GT(r.metrics.best_version, 3);
  }
}

INSTANTIATE_TEST_SUITE_P(
    Behaviors, NetsimAdversary,
    ::testing::Values(AdversaryCase{"silent_commit", Behavior::silent, MessageKind::commit, true, false},
                      AdversaryCase{"silent_reveal", Behavior::silent, MessageKind::reveal, true, false},
                      AdversaryCase{"silent_verified", Behavior::silent, MessageKind::best_response, true, false},
                      AdversaryCase{"invalid_reveal", Behavior::invalid_reveal, MessageKind::commit, true, false},
                      AdversaryCase{"wrong_state", Behavior::wrong_state, MessageKind::commit, true, false},
                      AdversaryCase{"abort_at", Behavior::abort_at, MessageKind::commit, true, false},
                      AdversaryCase{"stale_submit", Behavior::stale_submit, MessageKind::commit, false, false},
                      AdversaryCase{"revoke_at", Behavior::revoke_at, MessageKind::commit, false, true}),
    [](const ::testing::TestParamInfo<AdversaryCase>& info) { return std::string(info.param.name); });

TEST(Netsim, WrongStateByComputerIsEliminated)
{
  ScenarioConfig c = small(5);
  // Round-robin computer of iteration 7 among five parties is party 2.
  ASSERT_EQ(designated_computer(ComputerPolicy::round_robin, c.seed, 7, {0, 1, 2, 3, 4}), 2);
  c.adversaries.push_back(AdversarySpec{2, Behavior::wrong_state, 7, MessageKind::commit, 0});
  const RunResult r = run_channel(c);
  EXPECT_EQ(r.metrics.eliminated, (std::vector<PartyIndex>{2}));
  EXPECT_EQ(r.metrics.tx_by_kind.at("eliminate"), 4u);
  expect_conserved(r);
}

TEST(Netsim, SeededComputerPolicyRuns)
{
  ScenarioConfig c = small(5);
  c.computer_policy = ComputerPolicy::seeded_random;
  const RunResult r = run_channel(c);
  EXPECT_EQ(r.metrics.iterations_run, 25u);
  for (const auto& [k, count] : r.messages_by_iteration)
    EXPECT_EQ(count, 3u * 5 * 4);
}

TEST(Netsim, ConvergesToOracleWithoutIterationBudget)
{
  ScenarioConfig c = small(4);
  c.max_iterations.reset();
  c.eps = 1e-4;
  const RunResult r = run_channel(c);
  ASSERT_TRUE(r.metrics.converged);
  const Equilibrium eq = equilibrium_oracle(c.parties);
  EXPECT_NEAR(r.metrics.final_price, eq.price, 1e-3);
  for (std::size_t i = 0; i < c.parties.size(); ++i)
    EXPECT_NEAR(r.metrics.final_allocations.at(static_cast<PartyIndex>(i)), eq.allocations[i], 1e-3);
}
