#include "scauction/party.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <numeric>

using namespace scauction;

namespace {

// Drives a handful of nodes through off-chain rounds without a ledger. The
// chain view is fixed at "channel created" so only the message layer moves.
class MiniNet
{
public:
  explicit MiniNet(std::size_t n)
  {
    auto econ = std::make_shared<EconTable>();
    auto pubs = std::make_shared<std::vector<PublicKey>>();
    auto parties = std::make_shared<std::vector<PartyIndex>>(n);
    std::iota(parties->begin(), parties->end(), PartyIndex{0});
    std::vector<KeyPair> keys;
    for (std::size_t i = 0; i < n; ++i) {
      econ->push_back(i % 2 == 0 ? PartyEcon::buyer(10.0 + static_cast<double>(i), 1.0, 10)
                                 : PartyEcon::seller(1.0 + 0.1 * static_cast<double>(i), 10));
      keys.push_back(keygen(900 + i));
      pubs->push_back(keys.back().public_key);
    }
    auto ctx = std::make_shared<PartyContext>();
    ctx->econ = econ;
    ctx->pubkeys = pubs;
    ctx->parties = parties;
    ctx->genesis = std::make_shared<const ChannelState>(initial_state(*parties));
    ctx->genesis_bytes = canonical_bytes(*ctx->genesis);
    ctx->verifier = std::make_shared<SignatureVerifier>();
    ctx->mechanism.gamma = Fixed::from_double(0.05);
    ctx_ = ctx;
    for (std::size_t i = 0; i < n; ++i)
      nodes.emplace_back(static_cast<PartyIndex>(i), keys[i], ctx_, 77 + i);
    keys_ = keys;

    auto js = std::make_shared<JudgeState>();
    js->channel = ChannelStatus::created;
    js->parties = *parties;
    quiet_ = std::make_shared<ChainView>(ChainView{0, js, {}, {}});
    auto created = std::make_shared<ChainView>(*quiet_);
    created->events.push_back(JudgeEvent{JudgeEventKind::channel_created, 0, kNoParty, 0, RemovalReason::none, {}});
    first_ = created;
    inbox_.resize(n);
  }

  // One synchronous round; returns messages sent.
  std::size_t step()
  {
    std::vector<std::vector<std::shared_ptr<const OffChainMessage>>> next(nodes.size());
    std::size_t sent = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      PartyNode& node = nodes[i];
      Actions acts = node.observe_chain(round == 1 ? first_ : quiet_, round);
      for (const auto& m : inbox_[i])
        acts.append(node.handle_message(*m, round));
      acts.append(node.on_round(round));
      for (const EnvOutput& o : std::vector<EnvOutput>(acts.outputs)) {
        if (o.kind == EnvOutputKind::ready && o.party == i)
          acts.append(node.handle_env(EnvInput{EnvInputKind::best_response, o.version}, round));
        outputs.push_back({static_cast<PartyIndex>(i), o, round});
      }
      for (auto& tx : acts.txs)
        txs.push_back({static_cast<PartyIndex>(i), std::move(tx)});
      for (auto& ob : acts.messages) {
        auto msg = ob.msg;
        if (tamper)
          msg = tamper(msg, keys_[i]);
        log.push_back({round, msg->sender, msg->kind, msg->iteration, ob.recipients.size()});
        for (PartyIndex to : ob.recipients) {
          next[to].push_back(msg);
          ++sent;
        }
      }
    }
    inbox_ = std::move(next);
    ++round;
    return sent;
  }

  struct Output
  {
    PartyIndex node;
    EnvOutput out;
    Round round;
  };
  struct Sent
  {
    Round round;
    PartyIndex sender;
    MessageKind kind;
    std::uint32_t iteration;
    std::size_t recipients;
  };

  std::vector<PartyNode> nodes;
  std::vector<Output> outputs;
  std::vector<std::pair<PartyIndex, Bytes>> txs;
  std::vector<Sent> log;
  Round round = 1;
  std::function<std::shared_ptr<const OffChainMessage>(std::shared_ptr<const OffChainMessage>, const KeyPair&)> tamper;

private:
  std::shared_ptr<const PartyContext> ctx_;
  std::vector<KeyPair> keys_;
  std::shared_ptr<const ChainView> quiet_;
  std::shared_ptr<const ChainView> first_;
  std::vector<std::vector<std::shared_ptr<const OffChainMessage>>> inbox_;
};

Round finalized_round(const MiniNet& net, Version v, PartyIndex node)
{
  for (const auto& o : net.outputs)
    if (o.node == node && o.out.kind == EnvOutputKind::iteration_complete && o.out.version == v)
      return o.round;
  return -1;
}

} // namespace

TEST(PartyNode, RejectsInputsOutOfPhase)
{
  MiniNet net(3);
  PartyNode& a = net.nodes[0];
  EXPECT_THROW(a.handle_env(EnvInput{EnvInputKind::best_response, 1}, 0), PhaseError);
  EXPECT_THROW(a.handle_env(EnvInput{EnvInputKind::revoke, 0}, 0), PhaseError);
  EXPECT_THROW(a.handle_env(EnvInput{EnvInputKind::close, 0}, 0), PhaseError);
  const Actions created = a.handle_env(EnvInput{EnvInputKind::create, 0}, 0);
  EXPECT_EQ(created.txs.size(), 1u);
  EXPECT_EQ(a.phase(), Phase::creating);
  EXPECT_THROW(a.handle_env(EnvInput{EnvInputKind::create, 0}, 0), PhaseError);
  EXPECT_THROW(a.submit(kNoParty, 3), PhaseError);
}

TEST(PartyNode, HonestIterationTakesSixRounds)
{
  for (std::size_t n : {2u, 4u, 7u}) {
    MiniNet net(n);
    for (int r = 0; r < 30; ++r)
      net.step();
    for (PartyIndex p = 0; p < n; ++p) {
      const Round f1 = finalized_round(net, 1, p);
      ASSERT_GT(f1, 0) << "node " << p;
      for (Version k = 2; k <= 4; ++k)
        EXPECT_EQ(finalized_round(net, k, p) - finalized_round(net, k - 1, p), 6) << "n=" << n << " k=" << k;
    }
  }
}

TEST(PartyNode, MessagesPerIterationAreThreeNTimesNMinusOne)
{
  for (std::size_t n : {2u, 5u, 10u}) {
    MiniNet net(n);
    for (int r = 0; r < 40; ++r)
      net.step();
    std::map<std::uint32_t, std::size_t> broadcasts;
    std::map<std::uint32_t, std::size_t> deliveries;
    for (const auto& s : net.log) {
      broadcasts[s.iteration] += 1;
      deliveries[s.iteration] += s.recipients;
    }
    for (std::uint32_t k = 1; k <= 5; ++k) {
      EXPECT_EQ(broadcasts[k], 3 * n) << "n=" << n << " k=" << k;
      EXPECT_EQ(deliveries[k], 3 * n * (n - 1)) << "n=" << n << " k=" << k;
    }
  }
}

TEST(PartyNode, NoRevealBeforeOwnCommit)
{
  MiniNet net(6);
  for (int r = 0; r < 60; ++r)
    net.step();
  std::map<std::pair<PartyIndex, std::uint32_t>, Round> commit_at;
  for (const auto& s : net.log)
    if (s.kind == MessageKind::commit)
      commit_at.emplace(std::make_pair(s.sender, s.iteration), s.round);
  std::size_t reveals = 0;
  for (const auto& s : net.log) {
    if (s.kind != MessageKind::reveal)
      continue;
    ++reveals;
    const auto it = commit_at.find({s.sender, s.iteration});
    ASSERT_NE(it, commit_at.end());
    EXPECT_LT(it->second, s.round);
  }
  EXPECT_GT(reveals, 0u);
}

TEST(PartyNode, AllNodesAgreeOnSignedStates)
{
  MiniNet net(4);
  for (int r = 0; r < 62; ++r)
    net.step();
  const auto& h0 = net.nodes[0].history();
  ASSERT_GE(h0.size(), 10u);
  SignatureVerifier v;
  std::vector<PublicKey> pubs;
  for (const auto& node : net.nodes)
    pubs.push_back(node.keys().public_key);
  for (const auto& node : net.nodes) {
    for (const auto& [ver, entry] : node.history()) {
      EXPECT_TRUE(entry.state->same_content(*h0.at(ver).state));
      if (ver > 0)
        EXPECT_TRUE(signatures_valid(*entry.state, entry.state->active_parties, pubs, v));
    }
  }
}

TEST(PartyNode, SubmitReturnsFinalizedStateWithProof)
{
  MiniNet net(3);
  for (int r = 0; r < 20; ++r)
    net.step();
  const auto call = net.nodes[1].submit(kNoParty, 2);
  ASSERT_TRUE(call);
  const JudgeCall decoded = decode_judge_call(*call);
  ASSERT_TRUE(decoded.submission);
  EXPECT_EQ(decoded.submission->version, 2u);
  ASSERT_TRUE(decoded.submission->proof.prev_state);
  EXPECT_EQ(decoded.submission->proof.prev_state->version, 1u);
  EXPECT_EQ(decoded.submission->proof.reveals.size(), 3u);
}

TEST(PartyNode, InvalidRevealTriggersDispute)
{
  MiniNet net(4);
  net.tamper = [](std::shared_ptr<const OffChainMessage> m, const KeyPair& key) {
    if (m->kind != MessageKind::reveal || m->sender != 2 || m->iteration != 2)
      return m;
    auto bad = std::make_shared<OffChainMessage>(*m);
    bad->body[0] ^= 1;
    resign(*bad, key);
    return std::shared_ptr<const OffChainMessage>(bad);
  };
  for (int r = 0; r < 20; ++r)
    net.step();
  std::set<PartyIndex> disputers;
  for (const auto& o : net.outputs)
    if (o.out.kind == EnvOutputKind::dispute && o.out.party == 2)
      disputers.insert(o.node);
  EXPECT_EQ(disputers, (std::set<PartyIndex>{0, 1, 3}));
  std::size_t elim_calls = 0;
  for (const auto& [sender, tx] : net.txs) {
    const CallSummary s = peek_judge_call(tx);
    if (s.op == JudgeOp::state_submit && s.target == 2) {
      ++elim_calls;
      EXPECT_EQ(s.version, 1u);
    }
  }
  EXPECT_EQ(elim_calls, 3u);
  for (PartyIndex p : {0, 1, 3})
    EXPECT_EQ(net.nodes[p].phase(), Phase::disputing);
}

TEST(DesignatedComputer, RoundRobinAndSeeded)
{
  const std::vector<PartyIndex> active{0, 2, 5};
  EXPECT_EQ(designated_computer(ComputerPolicy::round_robin, 0, 1, active), 2);
  EXPECT_EQ(designated_computer(ComputerPolicy::round_robin, 0, 3, active), 0);
  for (Version k = 1; k < 20; ++k) {
    const PartyIndex p = designated_computer(ComputerPolicy::seeded_random, 42, k, active);
    EXPECT_TRUE(std::find(active.begin(), active.end(), p) != active.end());
    EXPECT_EQ(p, designated_computer(ComputerPolicy::seeded_random, 42, k, active));
  }
}
