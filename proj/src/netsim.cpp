#include "scauction/netsim.hpp"

#include <algorithm>

namespace scauction {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string tx_kind(const CallSummary& s)
{
  if (s.op == JudgeOp::state_submit && s.target != kNoParty)
    return "eliminate";
  return to_string(s.op);
}

const char* reason_name(RemovalReason r)
{
  switch (r) {
    case RemovalReason::eliminated: return "eliminated";
    case RemovalReason::revoked: return "revoked";
    default: return "";
  }
}

json tx_json(const TxRecord& t)
{
  return json{{"sender", t.sender}, {"kind", t.kind},         {"target", t.target}, {"version", t.version},
              {"gas", t.gas},       {"submit", t.submit_round}, {"block", t.block}};
}

struct AdversaryState
{
  std::optional<AdversarySpec> spec;
  bool crashed = false;
  bool stale_done = false;
  bool revoke_done = false;
};

std::shared_ptr<const OffChainMessage> tamper_reveal(const OffChainMessage& m, const KeyPair& key)
{
  OffChainMessage copy = m;
  copy.body[0] ^= 0x01;
  resign(copy, key);
  return std::make_shared<const OffChainMessage>(std::move(copy));
}

std::shared_ptr<const OffChainMessage> tamper_state(const OffChainMessage& m, const KeyPair& key)
{
  ByteReader r(m.body);
  ChannelState s = decode_state(r);
  if (!s.responses.empty())
    s.responses[0].quantity = Fixed::from_raw(s.responses[0].quantity.raw() + 1);
  else
    s.clearing_price = Fixed::from_raw(s.clearing_price.raw() + 1);
  const Bytes canon = canonical_bytes(s);
  const Signature sig = sign(key, canon);
  OffChainMessage copy = m;
  copy.body = canon;
  copy.body.insert(copy.body.end(), sig.begin(), sig.end());
  resign(copy, key);
  return std::make_shared<const OffChainMessage>(std::move(copy));
}

/// Applies the corrupted party's behavior to its outbound actions.
void apply_adversary(AdversaryState& adv, const KeyPair& key, Actions& acts, std::vector<std::string>& notes,
                     PartyIndex id)
{
  if (!adv.spec)
    return;
  const AdversarySpec& spec = *adv.spec;
  auto crash = [&](std::size_t keep) {
    acts.messages.resize(keep);
    acts.txs.clear();
    adv.crashed = true;
    notes.push_back("party " + std::to_string(id) + " crashed (" + to_string(spec.behavior) + ")");
  };
  if (adv.crashed) {
    acts.messages.clear();
    acts.txs.clear();
    return;
  }
  for (std::size_t i = 0; i < acts.messages.size(); ++i) {
    const OffChainMessage& m = *acts.messages[i].msg;
    switch (spec.behavior) {
      case Behavior::silent:
      case Behavior::abort_at: {
        const MessageKind phase = spec.behavior == Behavior::abort_at ? MessageKind::commit : spec.phase;
        if (m.iteration > spec.iteration || (m.iteration == spec.iteration && m.kind >= phase))
          return crash(i);
        break;
      }
      case Behavior::invalid_reveal:
        if (m.iteration > spec.iteration)
          return crash(i);
        if (m.iteration == spec.iteration && m.kind == MessageKind::reveal) {
          acts.messages[i].msg = tamper_reveal(m, key);
          return crash(i + 1);
        }
        break;
      case Behavior::wrong_state:
        if (m.iteration > spec.iteration)
          return crash(i);
        if (m.iteration == spec.iteration &&
            (m.kind == MessageKind::best_response || m.kind == MessageKind::verified)) {
          acts.messages[i].msg = tamper_state(m, key);
          return crash(i + 1);
        }
        break;
      default:
        break;
    }
  }
}

} // namespace

json trace_to_json(const RoundTrace& t)
{
  json delivered = json::array();
  for (const auto& d : t.delivered)
    delivered.push_back({d.from, d.to, static_cast<int>(d.kind), d.iteration, d.body_bytes});
  json sent = json::array();
  for (const auto& s : t.sent)
    sent.push_back({s.sender, to_string(s.kind), s.iteration, s.recipients});
  json submitted = json::array();
  for (const auto& x : t.submitted)
    submitted.push_back(tx_json(x));
  json confirmed = json::array();
  for (const auto& x : t.confirmed)
    confirmed.push_back(tx_json(x));
  json events = json::array();
  for (const auto& e : t.events) {
    json ev = {{"kind", to_string(e.kind)}, {"party", e.party}, {"version", e.version}};
    if (e.reason != RemovalReason::none)
      ev["reason"] = reason_name(e.reason);
    if (!e.detail.empty())
      ev["detail"] = e.detail;
    events.push_back(ev);
  }
  json phases = json::array();
  for (Phase p : t.phases)
    phases.push_back(to_string(p));
  return json{{"round", t.round},         {"delivered", delivered}, {"sent", sent},     {"submitted", submitted},
              {"confirmed", confirmed},   {"events", events},       {"phases", phases}, {"notes", t.notes}};
}

std::string trace_to_json_lines(const std::vector<RoundTrace>& trace)
{
  std::string out;
  for (const auto& t : trace) {
    out += trace_to_json(t).dump();
    out += '\n';
  }
  return out;
}

std::uint64_t party_key_seed(std::uint64_t scenario_seed, PartyIndex i)
{
  return splitmix64(scenario_seed * 0x10001ULL + i);
}

std::uint64_t party_nonce_seed(std::uint64_t scenario_seed, PartyIndex i)
{
  return splitmix64(party_key_seed(scenario_seed, i) ^ 0x6E6F6E6365ULL);
}

RunResult run_channel(const ScenarioConfig& cfg)
{
  cfg.validate();
  const std::size_t n = cfg.parties.size();
  std::vector<PartyIndex> ids(n);
  for (std::size_t i = 0; i < n; ++i)
    ids[i] = static_cast<PartyIndex>(i);

  std::vector<KeyPair> keys;
  keys.reserve(n);
  auto pubkeys = std::make_shared<std::vector<PublicKey>>();
  for (PartyIndex i : ids) {
    keys.push_back(keygen(party_key_seed(cfg.seed, i)));
    pubkeys->push_back(keys.back().public_key);
  }
  auto econ = std::make_shared<const EconTable>(cfg.parties);
  auto verifier = std::make_shared<SignatureVerifier>();
  MechanismParams mech;
  mech.gamma = Fixed::from_double(cfg.gamma);

  auto ctx = std::make_shared<PartyContext>();
  ctx->econ = econ;
  ctx->pubkeys = pubkeys;
  ctx->parties = std::make_shared<const std::vector<PartyIndex>>(ids);
  ctx->genesis = std::make_shared<const ChannelState>(initial_state(ids));
  ctx->genesis_bytes = canonical_bytes(*ctx->genesis);
  ctx->verifier = verifier;
  ctx->mechanism = mech;
  ctx->eps = cfg.eps;
  ctx->delta = cfg.delta;
  ctx->policy = cfg.computer_policy;
  ctx->seed = cfg.seed;
  ctx->max_iterations = cfg.max_iterations;

  std::map<PartyIndex, Amount> balances;
  for (PartyIndex i : ids)
    balances[i] = Amount::from_double(cfg.initial_balance);
  Ledger ledger(cfg.delta, cfg.gas, balances);

  JudgeConfig jc;
  jc.parties = ids;
  jc.econ = econ;
  jc.pubkeys = pubkeys;
  jc.mechanism = mech;
  jc.deposit = Amount::from_double(cfg.deposit);
  jc.delta = cfg.delta;
  jc.dispute_window = cfg.dispute_window;
  jc.refund_fraction = cfg.refund_fraction;
  Judge judge(jc, verifier);

  std::vector<PartyNode> nodes;
  nodes.reserve(n);
  std::vector<AdversaryState> adv(n);
  for (PartyIndex i : ids) {
    nodes.emplace_back(i, keys[i], ctx, party_nonce_seed(cfg.seed, i));
    adv[i].spec = cfg.behavior_of(i);
  }

  RunResult res;
  res.pubkeys = *pubkeys;
  res.initial_total = ledger.total_balance();
  MetricsRecord& m = res.metrics;
  m.scenario = cfg.name;
  m.mode = Mode::channel;
  m.n_parties = n;

  auto view = std::make_shared<const ChainView>(ChainView{-1, std::make_shared<const JudgeState>(), {}, {}});
  std::vector<std::vector<std::shared_ptr<const OffChainMessage>>> inbox(n), next_inbox(n);
  std::vector<bool> wants_close(n, false);
  Round r = 0;

  for (;; ++r) {
    if (r > cfg.round_cap)
      throw StallError("round cap " + std::to_string(cfg.round_cap) + " exceeded in scenario " + cfg.name,
                       std::move(res.trace));
    RoundTrace rt;
    rt.round = r;

    // (1) delivery of last round's messages
    inbox.swap(next_inbox);
    for (auto& q : next_inbox)
      q.clear();

    // (2) ledger confirmations and Judge timers
    if (r > 0) {
      for (const ConfirmedTx& c : ledger.advance_round()) {
        const CallSummary s = peek_judge_call(c.tx.call);
        rt.confirmed.push_back(TxRecord{c.tx.sender, tx_kind(s), s.target,
                                        s.op == JudgeOp::state_submit ? static_cast<std::int64_t>(s.version) : -1,
                                        c.tx.gas, c.tx.submit_round, c.block});
        judge.apply(c, ledger);
      }
    }
    rt.events = judge.tick(r);

    // (3)-(6) party steps, environment, adversary filter, outputs
    for (PartyIndex i : ids) {
      PartyNode& node = nodes[i];
      Actions acts = node.observe_chain(view, r);
      for (const auto& msg : inbox[i]) {
        const std::uint32_t body = static_cast<std::uint32_t>(msg->body.size());
        m.off_chain_messages += 1;
        m.off_chain_bytes += body;
        m.off_chain_wire_bytes += wire_size(*msg);
        res.messages_by_iteration[msg->iteration] += 1;
        res.bytes_by_iteration[msg->iteration] += body;
        if (cfg.record_trace)
          rt.delivered.push_back(DeliveryRecord{msg->sender, i, msg->kind, msg->iteration, body});
        acts.append(node.handle_message(*msg, r));
      }
      inbox[i].clear();
      acts.append(node.on_round(r));

      if (r == 0 && (cfg.open == OpenMode::all || i == 0))
        acts.append(node.handle_env(EnvInput{EnvInputKind::create, 0}, r));

      const std::vector<EnvOutput> outputs = acts.outputs;
      for (const EnvOutput& o : outputs) {
        switch (o.kind) {
          case EnvOutputKind::ready: {
            const auto& spec = adv[i].spec;
            if (spec && spec->behavior == Behavior::revoke_at && spec->iteration == o.version && !adv[i].revoke_done) {
              adv[i].revoke_done = true;
              acts.append(node.handle_env(EnvInput{EnvInputKind::revoke, o.version}, r));
              rt.notes.push_back("party " + std::to_string(i) + " revokes at iteration " + std::to_string(o.version));
              break;
            }
            if (spec && spec->behavior == Behavior::stale_submit && spec->iteration == o.version &&
                !adv[i].stale_done) {
              adv[i].stale_done = true;
              if (auto tx = node.submit(kNoParty, spec->version))
                acts.txs.push_back(std::move(*tx));
              rt.notes.push_back("party " + std::to_string(i) + " submits stale version " +
                                 std::to_string(spec->version));
            }
            if (o.party == i)
              acts.append(node.handle_env(EnvInput{EnvInputKind::best_response, o.version}, r));
            break;
          }
          case EnvOutputKind::iteration_complete:
            res.finalized_round.emplace(o.version, r);
            break;
          case EnvOutputKind::converged:
          case EnvOutputKind::iteration_limit:
            wants_close[i] = true;
            break;
          default:
            break;
        }
      }
      for (const EnvOutput& o : outputs) {
        if (o.kind == EnvOutputKind::iteration_complete && o.version >= cfg.iteration_cap && !node.converged())
          throw NonConvergenceError("no equilibrium after " + std::to_string(o.version) + " iterations in scenario " +
                                    cfg.name);
      }
      if (wants_close[i] && node.phase() == Phase::finished)
        acts.append(node.handle_env(EnvInput{EnvInputKind::close, 0}, r));

      apply_adversary(adv[i], keys[i], acts, rt.notes, i);

      for (auto& ob : acts.messages) {
        if (cfg.record_trace)
          rt.sent.push_back(SendRecord{i, ob.msg->kind, ob.msg->iteration,
                                       static_cast<std::uint32_t>(ob.recipients.size())});
        for (PartyIndex to : ob.recipients) {
          if (to >= n) {
            rt.notes.push_back("dropped message to unknown party " + std::to_string(to));
            continue;
          }
          next_inbox[to].push_back(ob.msg);
        }
      }
      for (auto& call : acts.txs) {
        const CallSummary s = peek_judge_call(call);
        const std::uint64_t gas = judge_call_gas(call, cfg.gas);
        rt.submitted.push_back(TxRecord{i, tx_kind(s), s.target,
                                        s.op == JudgeOp::state_submit ? static_cast<std::int64_t>(s.version) : -1, gas,
                                        r, 0});
        m.tx_by_kind[tx_kind(s)] += 1;
        m.gas_by_kind[tx_kind(s)] += gas;
        ledger.submit_tx(PendingTx{i, std::move(call), r, gas});
      }
    }

    // (7) chain view left for the next round
    auto next_view = std::make_shared<ChainView>();
    next_view->round = r;
    next_view->judge = std::make_shared<const JudgeState>(judge.state());
    for (const PendingTx& p : ledger.read_pending())
      next_view->pending.push_back(PendingCallSummary{p.sender, peek_judge_call(p.call), p.submit_round});
    next_view->events = rt.events;
    view = std::move(next_view);

    res.conservation.push_back(ledger.total_balance() + judge.state().escrow());
    if (cfg.record_trace) {
      rt.phases.reserve(n);
      for (const auto& node : nodes)
        rt.phases.push_back(node.phase());
    }
    res.trace.push_back(std::move(rt));

    const bool done = std::all_of(nodes.begin(), nodes.end(), [](const PartyNode& p) {
      return p.phase() == Phase::closed || p.phase() == Phase::halted;
    });
    if (done)
      break;
  }

  res.final_ledger = ledger.read_state();
  res.final_judge = judge.state();
  res.accepted_versions = judge.accepted_versions();
  res.judge_events = judge.event_log();

  const PartyNode* best = nullptr;
  for (const auto& node : nodes)
    if (node.phase() == Phase::closed && (!best || node.latest_state().version > best->latest_state().version))
      best = &node;
  if (best) {
    res.final_state = best->latest_state();
    m.converged = best->converged();
  }
  for (const auto& ev : res.judge_events) {
    if (ev.kind == JudgeEventKind::party_removed && ev.reason == RemovalReason::eliminated)
      m.eliminated.push_back(ev.party);
    if (ev.kind == JudgeEventKind::party_removed && ev.reason == RemovalReason::revoked)
      m.revoked.push_back(ev.party);
  }
  if (res.final_state) {
    m.final_price = res.final_state->clearing_price.to_double();
    for (std::size_t k = 0; k < res.final_state->active_parties.size(); ++k)
      m.final_allocations[res.final_state->active_parties[k]] = res.final_state->responses[k].quantity.to_double();
  }
  m.iterations_run = res.finalized_round.empty() ? 0 : res.finalized_round.rbegin()->first;
  m.on_chain_tx = ledger.tx_count();
  m.gas_total = ledger.gas_total();
  m.eth_total = static_cast<double>(m.gas_total) * cfg.gas.gas_price_eth;
  m.rounds_elapsed = r;
  m.blocks_used = ledger.blocks_used();
  m.estimated_seconds = static_cast<double>(r) * cfg.round_duration_ms / 1000.0 +
                        static_cast<double>(m.blocks_used) * cfg.block_time_s;
  m.best_version = judge.state().best_version;
  return res;
}

} // namespace scauction
