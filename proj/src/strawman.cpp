#include "scauction/strawman.hpp"

#include <algorithm>

namespace scauction {

namespace {

const char* op_name(StrawmanOp op)
{
  switch (op) {
    case StrawmanOp::deposit: return "deposit";
    case StrawmanOp::bid: return "bid";
    case StrawmanOp::refund: return "refund";
  }
  return "?";
}

std::uint64_t op_gas(StrawmanOp op, const GasTable& gas)
{
  switch (op) {
    case StrawmanOp::deposit: return gas.create_tx;
    case StrawmanOp::bid: return gas.strawman_bid_tx;
    case StrawmanOp::refund: return gas.close_tx;
  }
  return 0;
}

struct PublishedView
{
  bool started = false;
  bool finished = false;
  Version iteration = 0;
  std::vector<PartyIndex> active;
  std::shared_ptr<const ChannelState> current;
};

} // namespace

Bytes encode_strawman_deposit() { return Bytes{static_cast<std::uint8_t>(StrawmanOp::deposit)}; }

Bytes encode_strawman_bid(Version iteration, const BidProfile& bid)
{
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(StrawmanOp::bid));
  w.u32(iteration);
  w.raw(bid.encode());
  return w.take();
}

Bytes encode_strawman_refund() { return Bytes{static_cast<std::uint8_t>(StrawmanOp::refund)}; }

RunResult run_strawman(const ScenarioConfig& cfg)
{
  cfg.validate();
  const std::size_t n = cfg.parties.size();
  std::vector<PartyIndex> ids(n);
  for (std::size_t i = 0; i < n; ++i)
    ids[i] = static_cast<PartyIndex>(i);
  const EconTable& econ = cfg.parties;
  MechanismParams mech;
  mech.gamma = Fixed::from_double(cfg.gamma);
  const Amount deposit = Amount::from_double(cfg.deposit);

  std::map<PartyIndex, Amount> balances;
  for (PartyIndex i : ids)
    balances[i] = Amount::from_double(cfg.initial_balance);
  Ledger ledger(cfg.delta, cfg.gas, balances);

  RunResult res;
  res.initial_total = ledger.total_balance();
  MetricsRecord& m = res.metrics;
  m.scenario = cfg.name;
  m.mode = Mode::strawman;
  m.n_parties = n;

  StrawmanContractState st;
  std::map<PartyIndex, Amount> payout;
  PublishedView view;
  std::vector<std::int64_t> last_bid(n, -1);
  std::vector<bool> deposit_sent(n, false);
  std::vector<bool> refund_sent(n, false);

  // After settlement the contract holds exactly the unclaimed payouts.
  auto escrow = [&] {
    Amount sum;
    if (st.finished) {
      for (const auto& [p, a] : payout)
        sum += a;
      return sum;
    }
    sum = st.forfeiture_pool;
    for (const auto& [p, d] : st.deposits)
      sum += d;
    return sum;
  };

  Round r = 0;
  for (;; ++r) {
    if (r > cfg.round_cap)
      throw StallError("round cap exceeded in baseline run of " + cfg.name, std::move(res.trace));
    RoundTrace rt;
    rt.round = r;

    if (r > 0) {
      for (const ConfirmedTx& c : ledger.advance_round()) {
        ByteReader rd(c.tx.call);
        const auto op = static_cast<StrawmanOp>(rd.u8());
        const PartyIndex p = c.tx.sender;
        rt.confirmed.push_back(TxRecord{p, op_name(op), kNoParty, -1, c.tx.gas, c.tx.submit_round, c.block});
        if (op == StrawmanOp::deposit) {
          if (!st.started && !st.deposits.count(p) && ledger.update_balance(p, -deposit) == BalanceStatus::ok)
            st.deposits[p] = deposit;
        } else if (op == StrawmanOp::bid) {
          const Version k = rd.u32();
          const auto bid = decode_bid(rd.raw(BidProfile::kEncodedSize), econ[p]);
          const bool member = std::binary_search(st.active.begin(), st.active.end(), p);
          if (st.started && !st.finished && k == st.iteration && member && bid && r <= st.deadline)
            st.bids.emplace(p, *bid);
        } else if (op == StrawmanOp::refund) {
          const auto it = payout.find(p);
          if (st.finished && it != payout.end()) {
            ledger.update_balance(p, it->second);
            st.deposits.erase(p);
            payout.erase(it);
          }
        }
      }
    }

    if (!st.started && st.deposits.size() == n) {
      st.started = true;
      st.active = ids;
      st.current = initial_state(ids);
      st.iteration = 1;
      st.deadline = r + 1 + cfg.delta;
    } else if (st.started && !st.finished && (st.bids.size() == st.active.size() || r >= st.deadline)) {
      // Parties without a bid by the deadline are treated as aborted.
      std::vector<PartyIndex> still;
      for (PartyIndex p : st.active) {
        if (st.bids.count(p)) {
          still.push_back(p);
        } else {
          st.aborted.insert(p);
          st.forfeiture_pool += st.deposits[p];
          st.deposits.erase(p);
          rt.notes.push_back("party " + std::to_string(p) + " aborted at iteration " + std::to_string(st.iteration));
        }
      }
      st.active = still;
      bool stop = st.active.size() < 2;
      if (!stop) {
        std::vector<PartyBid> bids;
        for (PartyIndex p : st.active)
          bids.push_back(PartyBid{p, st.bids.at(p)});
        ChannelState next = best_response(st.current, bids, econ, mech);
        next.version = st.iteration;
        st.converged = is_ne(next, bids, econ, cfg.eps);
        st.current = std::move(next);
        res.finalized_round.emplace(st.iteration, r);
        if (st.converged || (cfg.max_iterations && st.iteration >= *cfg.max_iterations)) {
          stop = true;
        } else if (st.iteration >= cfg.iteration_cap) {
          throw NonConvergenceError("baseline found no equilibrium after " + std::to_string(st.iteration) +
                                    " iterations in scenario " + cfg.name);
        } else {
          ++st.iteration;
          st.bids.clear();
          st.deadline = r + 1 + cfg.delta;
        }
      }
      if (stop) {
        st.finished = true;
        const std::int64_t k = static_cast<std::int64_t>(st.deposits.size());
        const std::int64_t share = k > 0 ? st.forfeiture_pool.units / k : 0;
        std::int64_t rem = k > 0 ? st.forfeiture_pool.units - share * k : 0;
        for (const auto& [p, d] : st.deposits) {
          payout[p] = d + Amount{share + (rem > 0 ? 1 : 0)};
          if (rem > 0)
            --rem;
        }
        if (k > 0)
          st.forfeiture_pool = Amount{};
      }
    }

    for (PartyIndex i : ids) {
      const auto spec = cfg.behavior_of(i);
      const bool crash_type = spec && (spec->behavior == Behavior::silent || spec->behavior == Behavior::abort_at ||
                                       spec->behavior == Behavior::revoke_at);
      std::optional<Bytes> call;
      if (r == 0 && !deposit_sent[i]) {
        deposit_sent[i] = true;
        call = encode_strawman_deposit();
      } else if (view.started && !view.finished &&
                 std::binary_search(view.active.begin(), view.active.end(), i) &&
                 last_bid[i] != static_cast<std::int64_t>(view.iteration)) {
        if (crash_type && view.iteration >= spec->iteration)
          continue;
        last_bid[i] = view.iteration;
        call = encode_strawman_bid(view.iteration, *view.current->response_of(i));
      } else if (view.finished && !refund_sent[i] && payout.count(i)) {
        refund_sent[i] = true;
        call = encode_strawman_refund();
      }
      if (!call)
        continue;
      const auto op = static_cast<StrawmanOp>((*call)[0]);
      const std::uint64_t gas = op_gas(op, cfg.gas);
      rt.submitted.push_back(TxRecord{i, op_name(op), kNoParty, -1, gas, r, 0});
      m.tx_by_kind[op_name(op)] += 1;
      m.gas_by_kind[op_name(op)] += gas;
      ledger.submit_tx(PendingTx{i, std::move(*call), r, gas});
    }

    view.started = st.started;
    view.finished = st.finished;
    view.iteration = st.iteration;
    view.active = st.active;
    if (st.started && (!view.current || view.current->version != st.current.version))
      view.current = std::make_shared<const ChannelState>(st.current);

    res.conservation.push_back(ledger.total_balance() + escrow());
    res.trace.push_back(std::move(rt));
    if (st.finished && payout.empty() && ledger.read_pending().empty())
      break;
  }

  res.final_ledger = ledger.read_state();
  res.final_state = st.current;
  m.converged = st.converged;
  m.eliminated.assign(st.aborted.begin(), st.aborted.end());
  m.final_price = st.current.clearing_price.to_double();
  for (std::size_t k = 0; k < st.current.active_parties.size(); ++k)
    m.final_allocations[st.current.active_parties[k]] = st.current.responses[k].quantity.to_double();
  m.iterations_run = res.finalized_round.empty() ? 0 : res.finalized_round.rbegin()->first;
  m.on_chain_tx = ledger.tx_count();
  m.gas_total = ledger.gas_total();
  m.eth_total = static_cast<double>(m.gas_total) * cfg.gas.gas_price_eth;
  m.rounds_elapsed = r;
  m.blocks_used = ledger.blocks_used();
  m.estimated_seconds = static_cast<double>(r) * cfg.round_duration_ms / 1000.0 +
                        static_cast<double>(m.blocks_used) * cfg.block_time_s;
  m.best_version = st.current.version;
  return res;
}

} // namespace scauction
