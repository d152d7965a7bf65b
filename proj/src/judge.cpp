#include "scauction/judge.hpp"

#include <algorithm>
#include <cmath>

namespace scauction {

const char* to_string(JudgeOp op)
{
  switch (op) {
    case JudgeOp::create: return "create";
    case JudgeOp::state_submit: return "state_submit";
    case JudgeOp::revoke: return "revoke";
    case JudgeOp::close: return "close";
  }
  return "?";
}

const char* to_string(JudgeEventKind kind)
{
  switch (kind) {
    case JudgeEventKind::channel_created: return "ChannelCreated";
    case JudgeEventKind::dispute_opened: return "DisputeOpened";
    case JudgeEventKind::dispute_closed: return "DisputeClosed";
    case JudgeEventKind::party_removed: return "PartyRemoved";
    case JudgeEventKind::channel_closed: return "ChannelClosed";
    case JudgeEventKind::call_rejected: return "CallRejected";
    case JudgeEventKind::window_expired: return "WindowExpired";
  }
  return "?";
}

Bytes encode_create_call(const Signature& genesis_sig)
{
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(JudgeOp::create));
  w.raw(genesis_sig);
  return w.take();
}

Bytes encode_state_submit_call(const StateSubmission& sub)
{
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(JudgeOp::state_submit));
  w.u16(sub.target);
  w.u32(sub.version);
  w.raw(canonical_bytes(sub.state));
  encode_proof(w, sub.proof);
  encode_signatures(w, sub.state.signatures);
  return w.take();
}

Bytes encode_revoke_call() { return Bytes{static_cast<std::uint8_t>(JudgeOp::revoke)}; }

Bytes encode_close_call() { return Bytes{static_cast<std::uint8_t>(JudgeOp::close)}; }

JudgeCall decode_judge_call(ByteView call)
{
  ByteReader r(call);
  JudgeCall out;
  const std::uint8_t op = r.u8();
  if (op > static_cast<std::uint8_t>(JudgeOp::close))
    throw DecodeError("unknown judge opcode " + std::to_string(op));
  out.op = static_cast<JudgeOp>(op);
  if (out.op == JudgeOp::create) {
    const ByteView sig = r.raw(kSignatureSize);
    std::copy(sig.begin(), sig.end(), out.genesis_sig.begin());
  } else if (out.op == JudgeOp::state_submit) {
    StateSubmission sub;
    sub.target = r.u16();
    sub.version = r.u32();
    sub.state = decode_state(r);
    sub.proof = decode_proof(r);
    sub.state.signatures = decode_signatures(r);
    out.submission = std::move(sub);
  }
  r.expect_done();
  return out;
}

CallSummary peek_judge_call(ByteView call)
{
  ByteReader r(call);
  CallSummary s;
  const std::uint8_t op = r.u8();
  if (op > static_cast<std::uint8_t>(JudgeOp::close))
    throw DecodeError("unknown judge opcode " + std::to_string(op));
  s.op = static_cast<JudgeOp>(op);
  if (s.op == JudgeOp::state_submit) {
    s.target = r.u16();
    s.version = r.u32();
  }
  return s;
}

std::uint64_t judge_call_gas(ByteView call, const GasTable& gas)
{
  const CallSummary s = peek_judge_call(call);
  switch (s.op) {
    case JudgeOp::create: return gas.create_tx;
    case JudgeOp::state_submit: return s.target == kNoParty ? gas.state_submit_tx : gas.state_submit_eliminate_tx;
    case JudgeOp::revoke: return gas.revoke_tx;
    case JudgeOp::close: return gas.close_tx;
  }
  return 0;
}

bool JudgeState::has_party(PartyIndex p) const { return std::binary_search(parties.begin(), parties.end(), p); }

Amount JudgeState::escrow() const
{
  Amount sum = forfeiture_pool;
  for (const auto& [p, d] : deposits)
    sum += d;
  return sum;
}

Judge::Judge(JudgeConfig config, std::shared_ptr<SignatureVerifier> verifier)
  : config_(std::move(config)), verifier_(std::move(verifier))
{
  if (!config_.econ || !config_.pubkeys || !verifier_)
    throw std::invalid_argument("judge requires econ, keys and a verifier");
  if (config_.parties.empty())
    throw std::invalid_argument("judge requires at least one configured party");
  if (config_.delta < 1 || config_.dispute_window < 1)
    throw std::invalid_argument("delta and dispute window must be positive");
  if (!(config_.refund_fraction >= 0.0 && config_.refund_fraction <= 1.0))
    throw std::invalid_argument("refund_fraction must lie in [0, 1]");
  for (PartyIndex p : config_.parties)
    if (p >= config_.pubkeys->size() || p >= config_.econ->size())
      throw std::invalid_argument("party " + std::to_string(p) + " has no key or economy entry");
  genesis_ = initial_state(config_.parties);
  genesis_bytes_ = canonical_bytes(genesis_);
}

void Judge::emit(JudgeEvent ev)
{
  log_.push_back(ev);
  pending_events_.push_back(std::move(ev));
}

void Judge::reject(PartyIndex sender, Round now, std::string why)
{
  emit(JudgeEvent{JudgeEventKind::call_rejected, now, sender, -1, RemovalReason::none, std::move(why)});
}

std::vector<JudgeEvent> Judge::take_events()
{
  std::vector<JudgeEvent> out;
  out.swap(pending_events_);
  return out;
}

void Judge::apply(const ConfirmedTx& confirmed, Ledger& ledger)
{
  const Round now = confirmed.confirm_round;
  const PartyIndex sender = confirmed.tx.sender;
  JudgeCall call;
  try {
    call = decode_judge_call(confirmed.tx.call);
  } catch (const DecodeError& e) {
    reject(sender, now, std::string("malformed call: ") + e.what());
    return;
  }
  switch (call.op) {
    case JudgeOp::create: on_create(sender, call.genesis_sig, now, ledger); break;
    case JudgeOp::state_submit:
      on_state_submit(sender, *call.submission, now, confirmed.tx.submit_round, ledger);
      break;
    case JudgeOp::revoke: on_revoke(sender, now, ledger); break;
    case JudgeOp::close: on_close(sender, now, ledger); break;
  }
}

void Judge::on_create(PartyIndex sender, const Signature& genesis_sig, Round now, Ledger& ledger)
{
  if (state_.channel == ChannelStatus::created)
    return reject(sender, now, "channel already created");
  if (!std::binary_search(config_.parties.begin(), config_.parties.end(), sender))
    return reject(sender, now, "create from unconfigured party");
  if (!verifier_->verify((*config_.pubkeys)[sender], genesis_bytes_, genesis_sig))
    return reject(sender, now, "invalid genesis signature");

  if (!state_.create_waiting) {
    const Round window = 1 + static_cast<Round>(config_.parties.size() - 1) * config_.delta;
    state_.create_waiting = QuorumWindow{{}, now + window};
  }
  state_.create_waiting->members.insert(sender);
  state_.genesis_signatures[sender] = genesis_sig;
  if (state_.create_waiting->members.size() != config_.parties.size())
    return;

  for (PartyIndex p : config_.parties) {
    if (ledger.balance(p) < config_.deposit) {
      state_.create_waiting.reset();
      state_.genesis_signatures.clear();
      return reject(p, now, "insufficient balance for deposit");
    }
  }
  for (PartyIndex p : config_.parties) {
    ledger.update_balance(p, -config_.deposit);
    state_.deposits[p] = config_.deposit;
  }
  state_.parties = config_.parties;
  state_.channel = ChannelStatus::created;
  state_.create_waiting.reset();
  emit(JudgeEvent{JudgeEventKind::channel_created, now, kNoParty, 0, RemovalReason::none, {}});
}

bool Judge::verify_submission(const StateSubmission& sub)
{
  const ChannelState& g = sub.state;
  if (g.version == 0)
    return g.same_content(genesis_) && sub.proof.reveals.empty() && !sub.proof.prev_state;
  // The state must carry a signature from every party still in the channel.
  if (!std::includes(g.active_parties.begin(), g.active_parties.end(), state_.parties.begin(), state_.parties.end()))
    return false;
  if (!signatures_valid(g, state_.parties, *config_.pubkeys, *verifier_))
    return false;
  Proof proof = sub.proof;
  if (proof.prev_state && proof.prev_state->version == 0) {
    // Genesis signatures were posted with the create calls.
    if (!proof.prev_state->same_content(genesis_))
      return false;
    proof.prev_state->signatures = state_.genesis_signatures;
  }
  return verify_state(g, proof, *config_.econ, *config_.pubkeys, config_.mechanism, *verifier_);
}

void Judge::on_state_submit(PartyIndex sender, const StateSubmission& sub, Round now, Round submit_round,
                            Ledger& ledger)
{
  if (state_.channel != ChannelStatus::created)
    return reject(sender, now, "no open channel");
  if (!state_.has_party(sender))
    return reject(sender, now, "submitter is not a channel party");
  if (sub.version != sub.state.version)
    return reject(sender, now, "version field does not match state");

  if (sub.target != kNoParty && sub.target != sender && state_.has_party(sub.target)) {
    auto it = state_.elimination_votes.find(sub.target);
    if (it == state_.elimination_votes.end()) {
      const Round window = static_cast<Round>(state_.parties.size() - 2) * config_.delta;
      it = state_.elimination_votes.emplace(sub.target, VoteWindow{sub.version, {}, now + window}).first;
    }
    if (it->second.version == sub.version)
      it->second.voters.insert(sender);
    eliminate_if_unanimous(sub.target, now, ledger);
  }

  if (static_cast<std::int64_t>(sub.version) <= state_.best_version)
    return;
  if (!verify_submission(sub))
    return reject(sender, now, "state failed verification");

  state_.best_version = sub.version;
  state_.state = sub.state;
  state_.state_submitter = sender;
  state_.state_submit_round = submit_round;
  state_.flag = DisputeFlag::dispute;
  state_.dispute_deadline = now + config_.dispute_window;
  accepted_.push_back(sub.version);
  emit(JudgeEvent{JudgeEventKind::dispute_opened, now, sender, sub.version, RemovalReason::none, {}});
}

void Judge::eliminate_if_unanimous(PartyIndex target, Round now, Ledger& ledger)
{
  const auto it = state_.elimination_votes.find(target);
  if (it == state_.elimination_votes.end() || !state_.has_party(target))
    return;
  for (PartyIndex p : state_.parties)
    if (p != target && !it->second.voters.count(p))
      return;
  remove_party(target, RemovalReason::eliminated, now, ledger);
}

void Judge::remove_party(PartyIndex party, RemovalReason reason, Round now, Ledger& ledger)
{
  state_.parties.erase(std::find(state_.parties.begin(), state_.parties.end(), party));
  state_.removed.insert(party);
  const Amount deposit = state_.deposits[party];
  state_.deposits.erase(party);
  if (reason == RemovalReason::revoked) {
    ledger.update_balance(party, deposit);
  } else {
    const Amount refund{static_cast<std::int64_t>(std::floor(config_.refund_fraction * static_cast<double>(deposit.units)))};
    ledger.update_balance(party, refund);
    state_.forfeiture_pool += deposit - refund;
  }
  state_.elimination_votes.erase(party);
  for (auto& [target, window] : state_.elimination_votes)
    window.voters.erase(party);
  if (state_.close_waiting)
    state_.close_waiting->members.erase(party);
  emit(JudgeEvent{JudgeEventKind::party_removed, now, party, state_.best_version, reason, {}});

  // A smaller party set may complete a pending quorum.
  std::vector<PartyIndex> targets;
  for (const auto& [target, window] : state_.elimination_votes)
    targets.push_back(target);
  for (PartyIndex t : targets)
    eliminate_if_unanimous(t, now, ledger);
  settle_if_complete(now, ledger);
}

void Judge::on_revoke(PartyIndex sender, Round now, Ledger& ledger)
{
  if (state_.channel != ChannelStatus::created)
    return reject(sender, now, "no open channel");
  if (!state_.has_party(sender))
    return reject(sender, now, "revoke from non-party");
  remove_party(sender, RemovalReason::revoked, now, ledger);
}

void Judge::on_close(PartyIndex sender, Round now, Ledger& ledger)
{
  if (state_.channel != ChannelStatus::created)
    return reject(sender, now, "no open channel");
  if (!state_.has_party(sender))
    return reject(sender, now, "close from non-party");
  if (state_.flag == DisputeFlag::dispute)
    return reject(sender, now, "close during dispute");
  if (!state_.close_waiting) {
    const Round window = 1 + static_cast<Round>(state_.parties.size() - 1) * config_.delta;
    state_.close_waiting = QuorumWindow{{}, now + window};
  }
  state_.close_waiting->members.insert(sender);
  settle_if_complete(now, ledger);
}

void Judge::settle_if_complete(Round now, Ledger& ledger)
{
  if (state_.channel != ChannelStatus::created || !state_.close_waiting)
    return;
  for (PartyIndex p : state_.parties)
    if (!state_.close_waiting->members.count(p))
      return;

  const std::int64_t n = static_cast<std::int64_t>(state_.parties.size());
  const std::int64_t pool = state_.forfeiture_pool.units;
  const std::int64_t share = n > 0 ? pool / n : 0;
  std::int64_t remainder = n > 0 ? pool - share * n : 0;
  for (PartyIndex p : state_.parties) {
    Amount payout = state_.deposits[p] + Amount{share};
    if (remainder > 0) {
      payout += Amount{1};
      --remainder;
    }
    ledger.update_balance(p, payout);
  }
  state_.deposits.clear();
  if (n > 0)
    state_.forfeiture_pool = Amount{};
  state_.channel = ChannelStatus::none;
  state_.close_waiting.reset();
  state_.elimination_votes.clear();
  state_.flag = DisputeFlag::none;
  state_.dispute_deadline.reset();
  emit(JudgeEvent{JudgeEventKind::channel_closed, now, kNoParty, state_.best_version, RemovalReason::none, {}});
}

std::vector<JudgeEvent> Judge::tick(Round now)
{
  if (state_.create_waiting && now >= state_.create_waiting->deadline) {
    state_.create_waiting.reset();
    state_.genesis_signatures.clear();
    emit(JudgeEvent{JudgeEventKind::window_expired, now, kNoParty, -1, RemovalReason::none, "create"});
  }
  if (state_.close_waiting && now >= state_.close_waiting->deadline) {
    state_.close_waiting.reset();
    emit(JudgeEvent{JudgeEventKind::window_expired, now, kNoParty, -1, RemovalReason::none, "close"});
  }
  for (auto it = state_.elimination_votes.begin(); it != state_.elimination_votes.end();) {
    if (now >= it->second.deadline) {
      emit(JudgeEvent{JudgeEventKind::window_expired, now, it->first, it->second.version, RemovalReason::none,
                      "elimination"});
      it = state_.elimination_votes.erase(it);
    } else {
      ++it;
    }
  }
  if (state_.flag == DisputeFlag::dispute && state_.dispute_deadline && now >= *state_.dispute_deadline) {
    state_.flag = DisputeFlag::none;
    state_.dispute_deadline.reset();
    emit(JudgeEvent{JudgeEventKind::dispute_closed, now, kNoParty, state_.best_version, RemovalReason::none, {}});
  }
  return take_events();
}

} // namespace scauction
