#include "scauction/judge.hpp"
#include "scauction/message.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace scauction;

namespace {

constexpr Round kDelta = 15;
constexpr Round kT = 20;

class JudgeTest : public ::testing::Test
{
protected:
  void SetUp() override { build(4); }

  void build(std::size_t n, double balance = 10.0)
  {
    n_ = n;
    parties_.resize(n);
    std::iota(parties_.begin(), parties_.end(), PartyIndex{0});
    auto econ = std::make_shared<EconTable>();
    auto pubs = std::make_shared<std::vector<PublicKey>>();
    keys_.clear();
    for (std::size_t i = 0; i < n; ++i) {
      econ->push_back(i % 2 == 0 ? PartyEcon::buyer(10 + i, 1.0, 10) : PartyEcon::seller(1.0 + 0.1 * i, 10));
      keys_.push_back(keygen(500 + i));
      pubs->push_back(keys_.back().public_key);
    }
    econ_ = econ;
    JudgeConfig cfg;
    cfg.parties = parties_;
    cfg.econ = econ;
    cfg.pubkeys = pubs;
    cfg.mechanism.gamma = Fixed::from_double(0.05);
    cfg.delta = kDelta;
    cfg.dispute_window = kT;
    judge_ = std::make_unique<Judge>(cfg, std::make_shared<SignatureVerifier>());
    std::map<PartyIndex, Amount> bal;
    for (PartyIndex p : parties_)
      bal[p] = Amount::from_double(balance);
    ledger_ = std::make_unique<Ledger>(kDelta, GasTable{}, bal);
    chain_.clear();
  }

  Signature genesis_sig(PartyIndex p) const { return sign(keys_[p], judge_->genesis_bytes()); }

  void create_all(Round now = 15)
  {
    for (PartyIndex p : parties_)
      judge_->on_create(p, genesis_sig(p), now, *ledger_);
    ASSERT_EQ(judge_->state().channel, ChannelStatus::created);
    judge_->take_events();
  }

  void sign_all(ChannelState& s, const std::vector<PartyIndex>& signers) const
  {
    const Bytes body = canonical_bytes(s);
    s.signatures.clear();
    for (PartyIndex p : signers)
      s.signatures[p] = sign(keys_[p], body);
  }

  // Honest states 1..k over the given members, each with its proof.
  void extend_chain(Version k, const std::vector<PartyIndex>& members)
  {
    std::mt19937_64 rng(99);
    if (chain_.empty()) {
      ChannelState g = judge_->genesis();
      chain_.push_back({g, {}});
    }
    const MechanismParams params{Fixed::from_double(0.05)};
    while (chain_.size() <= k) {
      const ChannelState& prev = chain_.back().first;
      Proof proof;
      proof.prev_state = prev;
      std::vector<PartyBid> bids;
      for (PartyIndex p : members) {
        const BidProfile b = respond((*econ_)[p], prev.clearing_price);
        const Nonce nonce = draw_nonce(rng);
        RevealRecord rv{p, Opening{b.encode(), Bytes(nonce.begin(), nonce.end())}, {}};
        Bytes body = rv.opening.message;
        body.insert(body.end(), rv.opening.nonce.begin(), rv.opening.nonce.end());
        rv.message_sig = sign(keys_[p], message_signing_bytes(MessageKind::reveal, prev.version + 1, p, body));
        proof.reveals.push_back(rv);
        bids.push_back(PartyBid{p, b});
      }
      ChannelState next = best_response(prev, bids, *econ_, params);
      sign_all(next, members);
      chain_.push_back({next, proof});
    }
  }

  StateSubmission submission(Version v, PartyIndex target = kNoParty) const
  {
    StateSubmission s;
    s.target = target;
    s.version = v;
    s.state = chain_.at(v).first;
    if (v > 0)
      s.proof = chain_.at(v).second;
    return s;
  }

  std::size_t n_ = 0;
  std::vector<PartyIndex> parties_;
  std::vector<KeyPair> keys_;
  std::shared_ptr<const EconTable> econ_;
  std::unique_ptr<Judge> judge_;
  std::unique_ptr<Ledger> ledger_;
  std::vector<std::pair<ChannelState, Proof>> chain_;
};

bool has_event(const std::vector<JudgeEvent>& evs, JudgeEventKind k)
{
  return std::any_of(evs.begin(), evs.end(), [&](const JudgeEvent& e) { return e.kind == k; });
}

} // namespace

TEST(JudgeCalls, EncodingRoundTripsAndGas)
{
  GasTable g;
  const Bytes create = encode_create_call(Signature{});
  EXPECT_EQ(create.size(), 1u + kSignatureSize);
  EXPECT_EQ(decode_judge_call(create).op, JudgeOp::create);
  EXPECT_EQ(judge_call_gas(create, g), g.create_tx);
  EXPECT_EQ(judge_call_gas(encode_close_call(), g), g.close_tx);
  EXPECT_EQ(judge_call_gas(encode_revoke_call(), g), g.revoke_tx);
  EXPECT_THROW(decode_judge_call(Bytes{0x09}), DecodeError);
  EXPECT_THROW(decode_judge_call(Bytes{}), DecodeError);
}

TEST_F(JudgeTest, SubmitCallGasDependsOnTarget)
{
  extend_chain(1, parties_);
  GasTable g;
  const Bytes plain = encode_state_submit_call(submission(1));
  const Bytes elim = encode_state_submit_call(submission(1, 2));
  EXPECT_EQ(judge_call_gas(plain, g), g.state_submit_tx);
  EXPECT_EQ(judge_call_gas(elim, g), g.state_submit_eliminate_tx);
  const CallSummary s = peek_judge_call(elim);
  EXPECT_EQ(s.target, 2);
  EXPECT_EQ(s.version, 1u);
  const JudgeCall back = decode_judge_call(plain);
  ASSERT_TRUE(back.submission);
  EXPECT_TRUE(back.submission->state.same_content(chain_[1].first));
  EXPECT_EQ(back.submission->state.signatures, chain_[1].first.signatures);
}

TEST_F(JudgeTest, CreateLocksDepositsWhenAllJoin)
{
  const Amount before = ledger_->total_balance();
  for (std::size_t i = 0; i + 1 < n_; ++i)
    judge_->on_create(parties_[i], genesis_sig(parties_[i]), 15, *ledger_);
  EXPECT_EQ(judge_->state().channel, ChannelStatus::none);
  judge_->on_create(parties_.back(), genesis_sig(parties_.back()), 16, *ledger_);
  EXPECT_EQ(judge_->state().channel, ChannelStatus::created);
  EXPECT_EQ(ledger_->balance(0), Amount::from_double(9));
  EXPECT_EQ(ledger_->total_balance() + judge_->state().escrow(), before);
  EXPECT_TRUE(has_event(judge_->take_events(), JudgeEventKind::channel_created));
}

TEST_F(JudgeTest, CreateWindowExpires)
{
  judge_->on_create(0, genesis_sig(0), 15, *ledger_);
  const Round deadline = 15 + 1 + static_cast<Round>(n_ - 1) * kDelta;
  EXPECT_FALSE(has_event(judge_->tick(deadline - 1), JudgeEventKind::window_expired));
  EXPECT_TRUE(has_event(judge_->tick(deadline), JudgeEventKind::window_expired));
  EXPECT_FALSE(judge_->state().create_waiting);
  EXPECT_EQ(ledger_->balance(0), Amount::from_double(10));
}

TEST_F(JudgeTest, CreateRejectsBadSignatureAndInsufficientBalance)
{
  judge_->on_create(1, genesis_sig(0), 15, *ledger_);
  EXPECT_TRUE(has_event(judge_->take_events(), JudgeEventKind::call_rejected));

  build(3, 0.5);
  for (PartyIndex p : parties_)
    judge_->on_create(p, genesis_sig(p), 15, *ledger_);
  EXPECT_EQ(judge_->state().channel, ChannelStatus::none);
  EXPECT_TRUE(has_event(judge_->take_events(), JudgeEventKind::call_rejected));
  EXPECT_EQ(ledger_->balance(0), Amount::from_double(0.5));
}

TEST_F(JudgeTest, GenesisSubmissionOpensDispute)
{
  create_all();
  extend_chain(0, parties_);
  judge_->on_state_submit(1, submission(0), 40, 25, *ledger_);
  EXPECT_EQ(judge_->state().best_version, 0);
  EXPECT_EQ(judge_->state().flag, DisputeFlag::dispute);
  EXPECT_EQ(judge_->state().dispute_deadline, 40 + kT);
  EXPECT_TRUE(has_event(judge_->tick(40 + kT), JudgeEventKind::dispute_closed));
  EXPECT_EQ(judge_->state().flag, DisputeFlag::none);
}

TEST_F(JudgeTest, HigherVersionOverridesAndStaleIsIgnored)
{
  create_all();
  extend_chain(200, parties_);
  judge_->on_state_submit(0, submission(150), 40, 25, *ledger_);
  EXPECT_EQ(judge_->state().best_version, 150);
  judge_->on_state_submit(1, submission(200), 45, 30, *ledger_);
  EXPECT_EQ(judge_->state().best_version, 200);
  EXPECT_EQ(judge_->state().state_submitter, 1);
  EXPECT_EQ(judge_->state().dispute_deadline, 45 + kT);
  judge_->take_events();
  judge_->on_state_submit(2, submission(150), 50, 35, *ledger_);
  EXPECT_EQ(judge_->state().best_version, 200);
  EXPECT_FALSE(has_event(judge_->take_events(), JudgeEventKind::dispute_opened));
  EXPECT_EQ(judge_->accepted_versions(), (std::vector<std::int64_t>{150, 200}));
}

TEST_F(JudgeTest, UnsignedOrTamperedStateIsRejected)
{
  create_all();
  extend_chain(3, parties_);
  StateSubmission s = submission(3);
  s.state.signatures.erase(2);
  judge_->on_state_submit(0, s, 40, 25, *ledger_);
  EXPECT_EQ(judge_->state().best_version, -1);
  s = submission(3);
  s.state.clearing_price = Fixed::from_wide(s.state.clearing_price.wide() + 1);
  sign_all(s.state, parties_);
  judge_->on_state_submit(0, s, 40, 25, *ledger_);
  EXPECT_EQ(judge_->state().best_version, -1);
  EXPECT_TRUE(has_event(judge_->take_events(), JudgeEventKind::call_rejected));
}

TEST_F(JudgeTest, EliminationNeedsEveryOtherParty)
{
  create_all();
  extend_chain(5, parties_);
  const PartyIndex target = 3;
  judge_->on_state_submit(0, submission(5, target), 40, 25, *ledger_);
  judge_->on_state_submit(1, submission(5, target), 41, 26, *ledger_);
  EXPECT_TRUE(judge_->state().has_party(target));
  judge_->on_state_submit(2, submission(5, target), 42, 27, *ledger_);
  EXPECT_FALSE(judge_->state().has_party(target));
  EXPECT_TRUE(judge_->state().removed.count(target));
  EXPECT_EQ(judge_->state().forfeiture_pool, Amount::from_double(1));
  EXPECT_EQ(ledger_->balance(target), Amount::from_double(9));
  EXPECT_EQ(judge_->state().best_version, 5);
}

TEST_F(JudgeTest, EliminationVotesMustMatchVersion)
{
  create_all();
  extend_chain(6, parties_);
  judge_->on_state_submit(0, submission(5, 3), 40, 25, *ledger_);
  judge_->on_state_submit(1, submission(6, 3), 41, 26, *ledger_);
  judge_->on_state_submit(2, submission(5, 3), 42, 27, *ledger_);
  EXPECT_TRUE(judge_->state().has_party(3));
}

TEST_F(JudgeTest, EliminationWindowExpires)
{
  create_all();
  extend_chain(5, parties_);
  judge_->on_state_submit(0, submission(5, 3), 40, 25, *ledger_);
  const Round deadline = 40 + static_cast<Round>(n_ - 2) * kDelta;
  const auto evs = judge_->tick(deadline);
  EXPECT_TRUE(has_event(evs, JudgeEventKind::window_expired));
  EXPECT_TRUE(judge_->state().elimination_votes.empty());
}

TEST_F(JudgeTest, RevokeRefundsDeposit)
{
  create_all();
  judge_->on_revoke(2, 40, *ledger_);
  EXPECT_FALSE(judge_->state().has_party(2));
  EXPECT_EQ(ledger_->balance(2), Amount::from_double(10));
  EXPECT_EQ(judge_->state().forfeiture_pool, Amount{});
  judge_->on_revoke(2, 41, *ledger_);
  EXPECT_TRUE(has_event(judge_->take_events(), JudgeEventKind::call_rejected));
}

TEST_F(JudgeTest, CloseSettlesAndSplitsPool)
{
  create_all();
  extend_chain(5, parties_);
  for (PartyIndex p : {0, 1, 2})
    judge_->on_state_submit(p, submission(5, 3), 40, 25, *ledger_);
  judge_->tick(40 + kT);
  ASSERT_EQ(judge_->state().flag, DisputeFlag::none);
  for (PartyIndex p : {0, 1, 2})
    judge_->on_close(p, 70, *ledger_);
  EXPECT_EQ(judge_->state().channel, ChannelStatus::none);
  // One forfeited deposit split three ways; the indivisible unit goes to party 0.
  const std::int64_t third = Amount::from_double(1).units / 3;
  EXPECT_EQ(ledger_->balance(0).units, Amount::from_double(10).units + third + 1);
  EXPECT_EQ(ledger_->balance(1).units, Amount::from_double(10).units + third);
  EXPECT_EQ(ledger_->total_balance(), Amount::from_double(40));
  EXPECT_EQ(judge_->state().escrow(), Amount{});
}

TEST_F(JudgeTest, CloseRejectedDuringDispute)
{
  create_all();
  extend_chain(1, parties_);
  judge_->on_state_submit(0, submission(1), 40, 25, *ledger_);
  judge_->take_events();
  judge_->on_close(1, 41, *ledger_);
  EXPECT_TRUE(has_event(judge_->take_events(), JudgeEventKind::call_rejected));
  EXPECT_FALSE(judge_->state().close_waiting);
}

TEST_F(JudgeTest, CloseWindowExpires)
{
  create_all();
  judge_->on_close(0, 40, *ledger_);
  const Round deadline = 40 + 1 + static_cast<Round>(n_ - 1) * kDelta;
  EXPECT_TRUE(has_event(judge_->tick(deadline), JudgeEventKind::window_expired));
  EXPECT_EQ(judge_->state().channel, ChannelStatus::created);
}

TEST_F(JudgeTest, MalformedCallRejectedThroughApply)
{
  create_all();
  ConfirmedTx tx{40, 1, PendingTx{0, Bytes{0x01, 0x02}, 25, 0}};
  judge_->apply(tx, *ledger_);
  EXPECT_TRUE(has_event(judge_->take_events(), JudgeEventKind::call_rejected));
}

TEST_F(JudgeTest, ConservationHoldsAcrossLifecycle)
{
  const Amount total = ledger_->total_balance();
  create_all();
  extend_chain(2, parties_);
  judge_->on_state_submit(0, submission(2, 1), 40, 25, *ledger_);
  judge_->on_state_submit(2, submission(2, 1), 40, 25, *ledger_);
  judge_->on_state_submit(3, submission(2, 1), 40, 25, *ledger_);
  EXPECT_EQ(ledger_->total_balance() + judge_->state().escrow(), total);
  judge_->on_revoke(3, 41, *ledger_);
  EXPECT_EQ(ledger_->total_balance() + judge_->state().escrow(), total);
  judge_->tick(60 + kT);
  judge_->on_close(0, 100, *ledger_);
  judge_->on_close(2, 100, *ledger_);
  EXPECT_EQ(judge_->state().channel, ChannelStatus::none);
  EXPECT_EQ(ledger_->total_balance(), total);
}
