#include "scauction/party.hpp"

#include <algorithm>

namespace scauction {

namespace {

constexpr std::size_t kRevealBodySize = BidProfile::kEncodedSize + kNonceSize;

Bytes state_body(const ChannelState& state, const Signature& sig)
{
  Bytes body = canonical_bytes(state);
  body.insert(body.end(), sig.begin(), sig.end());
  return body;
}

std::optional<std::pair<ChannelState, Signature>> parse_state_body(ByteView body)
{
  try {
    ByteReader r(body);
    ChannelState s = decode_state(r);
    const ByteView raw = r.raw(kSignatureSize);
    r.expect_done();
    Signature sig{};
    std::copy(raw.begin(), raw.end(), sig.begin());
    return std::make_pair(std::move(s), sig);
  } catch (const DecodeError&) {
    return std::nullopt;
  }
}

} // namespace

PartyIndex designated_computer(ComputerPolicy policy, std::uint64_t seed, Version k,
                               const std::vector<PartyIndex>& active)
{
  if (active.empty())
    throw PhaseError("no active parties");
  if (policy == ComputerPolicy::round_robin)
    return active[k % active.size()];
  std::mt19937_64 rng(seed ^ (static_cast<std::uint64_t>(k) * 0x9E3779B97F4A7C15ULL));
  return active[rng() % active.size()];
}

bool ChainView::pending_from(PartyIndex sender, JudgeOp op) const
{
  return std::any_of(pending.begin(), pending.end(),
                     [&](const PendingCallSummary& p) { return p.sender == sender && p.call.op == op; });
}

const char* to_string(EnvOutputKind kind)
{
  switch (kind) {
    case EnvOutputKind::created: return "created";
    case EnvOutputKind::ready: return "ready";
    case EnvOutputKind::iteration_complete: return "iteration_complete";
    case EnvOutputKind::converged: return "converged";
    case EnvOutputKind::iteration_limit: return "iteration_limit";
    case EnvOutputKind::dispute: return "dispute";
    case EnvOutputKind::closed: return "closed";
    case EnvOutputKind::removed: return "removed";
  }
  return "?";
}

const char* to_string(Phase phase)
{
  switch (phase) {
    case Phase::init: return "init";
    case Phase::creating: return "creating";
    case Phase::idle: return "idle";
    case Phase::committed: return "committed";
    case Phase::revealed: return "revealed";
    case Phase::awaiting_g: return "awaiting_g";
    case Phase::verifying: return "verifying";
    case Phase::disputing: return "disputing";
    case Phase::finished: return "finished";
    case Phase::closing: return "closing";
    case Phase::closed: return "closed";
    case Phase::halted: return "halted";
  }
  return "?";
}

void Actions::append(Actions&& other)
{
  std::move(other.messages.begin(), other.messages.end(), std::back_inserter(messages));
  std::move(other.txs.begin(), other.txs.end(), std::back_inserter(txs));
  std::move(other.outputs.begin(), other.outputs.end(), std::back_inserter(outputs));
}

PartyNode::PartyNode(PartyIndex id, KeyPair keys, std::shared_ptr<const PartyContext> ctx, std::uint64_t nonce_seed)
  : id_(id), keys_(keys), ctx_(std::move(ctx)), rng_(nonce_seed)
{
  if (!ctx_ || !ctx_->econ || !ctx_->pubkeys || !ctx_->parties || !ctx_->genesis || !ctx_->verifier)
    throw std::invalid_argument("incomplete party context");
  latest_ = ctx_->genesis;
}

bool PartyNode::is_member(PartyIndex p) const
{
  return std::binary_search(local_parties_.begin(), local_parties_.end(), p);
}

bool PartyNode::flag_dispute() const { return view_ && view_->judge->flag == DisputeFlag::dispute; }

bool PartyNode::revoking(PartyIndex p) const { return view_ && view_->pending_from(p, JudgeOp::revoke); }

std::vector<PartyIndex> PartyNode::others(const std::vector<PartyIndex>& members) const
{
  std::vector<PartyIndex> out;
  out.reserve(members.size());
  for (PartyIndex p : members)
    if (p != id_)
      out.push_back(p);
  return out;
}

Outbound PartyNode::broadcast(MessageKind kind, Bytes body)
{
  auto msg = std::make_shared<const OffChainMessage>(make_message(kind, iter_->k, id_, std::move(body), keys_));
  return Outbound{std::move(msg), others(iter_->members)};
}

std::int64_t PartyNode::version_at(Round r) const
{
  std::int64_t v = -1;
  for (const auto& [round, version] : finalized_at_) {
    if (round > r)
      break;
    v = version;
  }
  return v;
}

Actions PartyNode::handle_env(const EnvInput& input, Round now)
{
  Actions out;
  switch (input.kind) {
    case EnvInputKind::create: {
      if (phase_ != Phase::init)
        throw PhaseError("create outside init phase");
      out.txs.push_back(encode_create_call(sign(keys_, ctx_->genesis_bytes)));
      phase_ = Phase::creating;
      break;
    }
    case EnvInputKind::best_response: {
      if (flag_dispute())
        throw PhaseError("best_response while a dispute is pending");
      if (phase_ != Phase::idle || !iter_ || iter_->committed)
        throw PhaseError("best_response outside idle phase");
      if (input.iteration != iter_->k || iter_->computer != id_)
        throw PhaseError("best_response for iteration " + std::to_string(input.iteration) +
                         " not initiated by this party");
      send_commit(out);
      break;
    }
    case EnvInputKind::revoke: {
      if (phase_ == Phase::init || phase_ == Phase::creating || phase_ == Phase::closed || phase_ == Phase::halted)
        throw PhaseError("revoke requires an open channel");
      out.txs.push_back(encode_revoke_call());
      iter_.reset();
      phase_ = Phase::halted;
      break;
    }
    case EnvInputKind::close: {
      if (phase_ != Phase::finished && phase_ != Phase::idle)
        throw PhaseError(std::string("close in phase ") + to_string(phase_));
      if (flag_dispute() || close_sent_ || iter_)
        break;
      out.txs.push_back(encode_close_call());
      close_sent_ = true;
      phase_ = Phase::closing;
      break;
    }
  }
  (void)now;
  return out;
}

Actions PartyNode::observe_chain(std::shared_ptr<const ChainView> view, Round now)
{
  Actions out;
  view_ = std::move(view);
  const JudgeState& js = *view_->judge;
  if (phase_ == Phase::closed || phase_ == Phase::halted)
    return out;

  for (const JudgeEvent& ev : view_->events) {
    switch (ev.kind) {
      case JudgeEventKind::channel_created:
        if (phase_ == Phase::init || phase_ == Phase::creating) {
          local_parties_ = js.parties;
          latest_ = ctx_->genesis;
          history_[0] = HistoryEntry{ctx_->genesis, {}, {}};
          finalized_at_.emplace_back(ev.round, 0);
          phase_ = Phase::idle;
          out.outputs.push_back(EnvOutput{EnvOutputKind::created, 0, kNoParty});
        }
        break;
      case JudgeEventKind::party_removed:
        if (ev.party == id_) {
          iter_.reset();
          phase_ = Phase::halted;
          out.outputs.push_back(EnvOutput{EnvOutputKind::removed, latest_->version, id_});
          return out;
        }
        break;
      case JudgeEventKind::channel_closed:
        iter_.reset();
        phase_ = Phase::closed;
        out.outputs.push_back(EnvOutput{EnvOutputKind::closed, latest_->version, kNoParty});
        return out;
      case JudgeEventKind::dispute_opened:
        if (phase_ != Phase::init && phase_ != Phase::creating && js.flag == DisputeFlag::dispute &&
            js.state_submitter != id_ && js.best_version < version_at(js.state_submit_round - 1)) {
          Round rank = 0;
          for (PartyIndex p : js.parties) {
            if (p == id_)
              break;
            if (p != js.state_submitter)
              ++rank;
          }
          counter_due_ = now + 2 * rank;
        }
        break;
      case JudgeEventKind::window_expired:
        if (ev.detail == "elimination") {
          awaited_removal_.erase(ev.party);
        } else if (ev.detail == "close" && phase_ == Phase::closing) {
          close_sent_ = false;
          phase_ = Phase::finished;
        } else if (ev.detail == "create" && phase_ == Phase::creating) {
          phase_ = Phase::init;
        }
        break;
      default:
        break;
    }
  }

  if (phase_ == Phase::init) {
    for (const auto& p : view_->pending) {
      if (p.call.op == JudgeOp::create && p.sender != id_) {
        out.append(handle_env(EnvInput{EnvInputKind::create, 0}, now));
        break;
      }
    }
  }
  if ((phase_ == Phase::finished || (phase_ == Phase::idle && !iter_)) && !close_sent_ && js.flag == DisputeFlag::none) {
    for (const auto& p : view_->pending) {
      if (p.call.op == JudgeOp::close && p.sender != id_) {
        phase_ = Phase::finished;
        out.append(handle_env(EnvInput{EnvInputKind::close, 0}, now));
        break;
      }
    }
  }

  if (iter_) {
    std::set<PartyIndex> gone;
    for (PartyIndex m : iter_->members)
      if (m != id_ && (!js.has_party(m) || revoking(m)))
        gone.insert(m);
    if (!gone.empty())
      abort_iteration(std::move(gone));
  }

  if (counter_due_ && now >= *counter_due_) {
    counter_due_.reset();
    const bool newer_pending =
        std::any_of(view_->pending.begin(), view_->pending.end(), [&](const PendingCallSummary& p) {
          return p.call.op == JudgeOp::state_submit && p.call.target == kNoParty &&
                 static_cast<std::int64_t>(p.call.version) > js.best_version;
        });
    const bool still_stale = js.flag == DisputeFlag::dispute && js.state_submitter != id_ &&
                             js.best_version < version_at(js.state_submit_round - 1);
    if (!newer_pending && still_stale && js.channel == ChannelStatus::created) {
      if (auto tx = submit(kNoParty, latest_->version))
        out.txs.push_back(std::move(*tx));
    }
  }
  return out;
}

Actions PartyNode::handle_message(const OffChainMessage& msg, Round now)
{
  (void)now;
  Actions out;
  if (!iter_ || msg.iteration != iter_->k || msg.sender == id_)
    return out;
  if (!std::binary_search(iter_->members.begin(), iter_->members.end(), msg.sender))
    return out;
  if (!message_signature_valid(msg, (*ctx_->pubkeys)[msg.sender], *ctx_->verifier))
    return out;
  Iteration& it = *iter_;

  switch (msg.kind) {
    case MessageKind::commit: {
      if (msg.body.size() != kDigestSize) {
        it.conflicting.insert(msg.sender);
        break;
      }
      Commitment c;
      std::copy(msg.body.begin(), msg.body.end(), c.digest.begin());
      const auto [pos, inserted] = it.commits.emplace(msg.sender, c);
      if (!inserted && !(pos->second == c))
        it.conflicting.insert(msg.sender);
      if (msg.sender == it.computer && !it.committed)
        send_commit(out);
      break;
    }
    case MessageKind::reveal: {
      // Openings are only accepted against an already received commitment.
      if (!it.commits.count(msg.sender))
        break;
      if (msg.body.size() != kRevealBodySize) {
        it.conflicting.insert(msg.sender);
        break;
      }
      RevealRecord rec;
      rec.party = msg.sender;
      rec.opening.message.assign(msg.body.begin(), msg.body.begin() + BidProfile::kEncodedSize);
      rec.opening.nonce.assign(msg.body.begin() + BidProfile::kEncodedSize, msg.body.end());
      rec.message_sig = msg.sender_sig;
      const auto [pos, inserted] = it.reveals.emplace(msg.sender, rec);
      if (!inserted && !(pos->second.opening == rec.opening))
        it.conflicting.insert(msg.sender);
      break;
    }
    case MessageKind::best_response: {
      if (msg.sender != it.computer)
        break;
      auto parsed = parse_state_body(msg.body);
      if (!parsed)
        break;
      if (it.proposal && !it.proposal->first.same_content(parsed->first))
        it.conflicting.insert(msg.sender);
      else
        it.proposal = std::move(parsed);
      break;
    }
    case MessageKind::verified: {
      auto parsed = parse_state_body(msg.body);
      if (!parsed)
        break;
      const auto [pos, inserted] = it.verified.emplace(msg.sender, *parsed);
      if (!inserted && !pos->second.first.same_content(parsed->first))
        it.conflicting.insert(msg.sender);
      break;
    }
  }
  return out;
}

Actions PartyNode::on_round(Round now)
{
  Actions out;
  if (phase_ == Phase::closed || phase_ == Phase::halted || phase_ == Phase::init || phase_ == Phase::creating)
    return out;

  if (iter_) {
    const Round d = now - iter_->start;
    const bool computer = iter_->computer == id_;
    if (d == 1 && !iter_->committed && !computer)
      send_commit(out);
    if (d == 2) {
      check_commits(now, out);
      if (iter_ && computer)
        send_reveal(out);
    }
    if (d == 3 && !computer)
      send_reveal(out);
    if (d == 4)
      check_reveals(now, out);
    if (d == 5 && !computer)
      check_proposal(now, out);
    if (d == 6)
      check_verified(now, out);
  }

  const JudgeState& js = *view_->judge;
  if (phase_ == Phase::disputing) {
    for (auto it = awaited_removal_.begin(); it != awaited_removal_.end();)
      it = js.has_party(*it) ? std::next(it) : awaited_removal_.erase(it);
    if (awaited_removal_.empty() && !flag_dispute() && js.channel == ChannelStatus::created)
      phase_ = Phase::idle;
  }
  if (phase_ == Phase::idle && !iter_ && !flag_dispute() && js.channel == ChannelStatus::created)
    start_iteration(now, out);
  return out;
}

void PartyNode::start_iteration(Round now, Actions& out)
{
  const JudgeState& js = *view_->judge;
  if (!js.has_party(id_)) {
    phase_ = Phase::halted;
    return;
  }
  local_parties_ = js.parties;
  if ((ctx_->max_iterations && latest_->version >= *ctx_->max_iterations) || local_parties_.size() < 2) {
    phase_ = Phase::finished;
    out.outputs.push_back(EnvOutput{EnvOutputKind::iteration_limit, latest_->version, kNoParty});
    return;
  }
  Iteration it;
  it.k = latest_->version + 1;
  it.start = now;
  it.members = local_parties_;
  it.computer = designated_computer(ctx_->policy, ctx_->seed, it.k, it.members);
  it.nonce = draw_nonce(rng_);
  const auto bid = latest_->response_of(id_);
  if (!bid)
    throw PhaseError("party " + std::to_string(id_) + " has no response in its latest state");
  it.bid_bytes = bid->encode();
  iter_ = std::move(it);
  phase_ = Phase::idle;
  out.outputs.push_back(EnvOutput{EnvOutputKind::ready, iter_->k, iter_->computer});
}

void PartyNode::send_commit(Actions& out)
{
  Iteration& it = *iter_;
  const Commitment c = commit(it.bid_bytes, it.nonce);
  it.commits[id_] = c;
  it.committed = true;
  phase_ = Phase::committed;
  out.messages.push_back(broadcast(MessageKind::commit, Bytes(c.digest.begin(), c.digest.end())));
}

void PartyNode::send_reveal(Actions& out)
{
  Iteration& it = *iter_;
  if (!it.committed || it.revealed)
    return;
  Bytes body = it.bid_bytes;
  body.insert(body.end(), it.nonce.begin(), it.nonce.end());
  Outbound ob = broadcast(MessageKind::reveal, body);
  RevealRecord rec;
  rec.party = id_;
  rec.opening.message = it.bid_bytes;
  rec.opening.nonce.assign(it.nonce.begin(), it.nonce.end());
  rec.message_sig = ob.msg->sender_sig;
  it.reveals[id_] = std::move(rec);
  it.revealed = true;
  phase_ = Phase::revealed;
  out.messages.push_back(std::move(ob));
}

void PartyNode::check_commits(Round now, Actions& out)
{
  std::set<PartyIndex> offenders = iter_->conflicting;
  for (PartyIndex m : iter_->members)
    if (!iter_->commits.count(m))
      offenders.insert(m);
  if (!offenders.empty())
    dispute(offenders, now, out);
}

void PartyNode::check_reveals(Round now, Actions& out)
{
  Iteration& it = *iter_;
  std::set<PartyIndex> offenders = it.conflicting;
  std::vector<PartyBid> bids;
  bids.reserve(it.members.size());
  for (PartyIndex m : it.members) {
    const auto rv = it.reveals.find(m);
    const auto cm = it.commits.find(m);
    if (rv == it.reveals.end() || cm == it.commits.end() || !verify_commitment(cm->second, rv->second.opening)) {
      offenders.insert(m);
      continue;
    }
    const auto bid = decode_bid(rv->second.opening.message, (*ctx_->econ)[m]);
    if (!bid) {
      offenders.insert(m);
      continue;
    }
    bids.push_back(PartyBid{m, *bid});
  }
  if (!offenders.empty())
    return dispute(offenders, now, out);

  it.bids = std::move(bids);
  it.computed = best_response(*latest_, it.bids, *ctx_->econ, ctx_->mechanism);
  if (it.computer == id_) {
    it.own_sig = sign(keys_, canonical_bytes(*it.computed));
    out.messages.push_back(broadcast(MessageKind::best_response, state_body(*it.computed, it.own_sig)));
    phase_ = Phase::verifying;
  } else {
    phase_ = Phase::awaiting_g;
  }
}

void PartyNode::check_proposal(Round now, Actions& out)
{
  Iteration& it = *iter_;
  const Bytes body = canonical_bytes(*it.computed);
  if (!it.proposal || it.conflicting.count(it.computer) || !it.proposal->first.same_content(*it.computed) ||
      !ctx_->verifier->verify((*ctx_->pubkeys)[it.computer], body, it.proposal->second))
    return dispute({it.computer}, now, out);
  it.own_sig = sign(keys_, body);
  out.messages.push_back(broadcast(MessageKind::verified, state_body(*it.computed, it.own_sig)));
  phase_ = Phase::verifying;
}

void PartyNode::check_verified(Round now, Actions& out)
{
  Iteration& it = *iter_;
  const Bytes body = canonical_bytes(*it.computed);
  std::set<PartyIndex> offenders = it.conflicting;
  std::map<PartyIndex, Signature> sigs;
  sigs[id_] = it.own_sig;
  if (it.computer != id_)
    sigs[it.computer] = it.proposal->second;
  for (PartyIndex m : it.members) {
    if (m == id_ || m == it.computer)
      continue;
    const auto v = it.verified.find(m);
    if (v == it.verified.end() || !v->second.first.same_content(*it.computed) ||
        !ctx_->verifier->verify((*ctx_->pubkeys)[m], body, v->second.second)) {
      offenders.insert(m);
      continue;
    }
    sigs[m] = v->second.second;
  }
  if (!offenders.empty())
    return dispute(offenders, now, out);
  it.computed->signatures = std::move(sigs);
  finalize(now, out);
}

void PartyNode::finalize(Round now, Actions& out)
{
  Iteration& it = *iter_;
  auto state = std::make_shared<const ChannelState>(std::move(*it.computed));
  HistoryEntry entry;
  entry.state = state;
  entry.bids = it.bids;
  for (PartyIndex m : it.members)
    entry.reveals.push_back(it.reveals.at(m));
  const bool ne = is_ne(*state, entry.bids, *ctx_->econ, ctx_->eps);
  history_[state->version] = std::move(entry);
  finalized_at_.emplace_back(now, state->version);
  latest_ = state;
  iter_.reset();
  out.outputs.push_back(EnvOutput{EnvOutputKind::iteration_complete, latest_->version, kNoParty});
  if (ne) {
    converged_ = true;
    phase_ = Phase::finished;
    out.outputs.push_back(EnvOutput{EnvOutputKind::converged, latest_->version, kNoParty});
  } else {
    phase_ = Phase::idle;
  }
}

void PartyNode::dispute(const std::set<PartyIndex>& offenders, Round now, Actions& out)
{
  (void)now;
  const JudgeState& js = *view_->judge;
  const Version anchor = iter_->k - 1;
  for (PartyIndex l : offenders) {
    // A leaving party is removed by its own revoke; no vote is needed.
    if (l == id_ || revoking(l) || !js.has_party(l))
      continue;
    if (auto tx = submit(l, anchor)) {
      out.txs.push_back(std::move(*tx));
      out.outputs.push_back(EnvOutput{EnvOutputKind::dispute, anchor, l});
    }
  }
  abort_iteration(offenders);
}

void PartyNode::abort_iteration(std::set<PartyIndex> awaited)
{
  awaited.erase(id_);
  iter_.reset();
  awaited_removal_ = std::move(awaited);
  phase_ = Phase::disputing;
}

std::optional<Bytes> PartyNode::submit(PartyIndex target, Version v) const
{
  if (target == kNoParty && view_ && static_cast<std::int64_t>(v) <= view_->judge->best_version)
    return std::nullopt;
  const auto it = history_.find(v);
  if (it == history_.end())
    throw PhaseError("no finalized state for version " + std::to_string(v));
  StateSubmission sub;
  sub.target = target;
  sub.version = v;
  sub.state = *it->second.state;
  if (v > 0) {
    sub.proof.reveals = it->second.reveals;
    sub.proof.prev_state = *history_.at(v - 1).state;
  }
  return encode_state_submit_call(sub);
}

} // namespace scauction
