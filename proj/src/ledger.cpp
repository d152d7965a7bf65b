#include "scauction/ledger.hpp"

#include <stdexcept>

namespace scauction {

void GasTable::validate() const
{
  if (!(gas_price_eth >= 0))
    throw std::invalid_argument("gas_price_eth must be non-negative");
  if (block_capacity < 1)
    throw std::invalid_argument("block_capacity must be at least 1");
}

Ledger::Ledger(Round delta, GasTable gas, std::map<PartyIndex, Amount> balances)
  : delta_(delta), gas_(gas), balances_(std::move(balances))
{
  if (delta_ < 1)
    throw std::invalid_argument("delta must be at least one round");
  gas_.validate();
  for (const auto& [party, amount] : balances_)
    if (amount.units < 0)
      throw std::invalid_argument("initial balance of party " + std::to_string(party) + " is negative");
}

BalanceStatus Ledger::update_balance(PartyIndex party, Amount delta)
{
  auto it = balances_.find(party);
  if (it == balances_.end())
    return BalanceStatus::unknown_party;
  if (delta.units < 0 && it->second.units < -delta.units)
    return BalanceStatus::insufficient_balance;
  it->second += delta;
  return BalanceStatus::ok;
}

void Ledger::submit_tx(PendingTx tx)
{
  tx.submit_round = round_;
  gas_total_ += tx.gas;
  ++tx_count_;
  pending_.push_back(std::move(tx));
}

std::vector<ConfirmedTx> Ledger::advance_round()
{
  ++round_;
  std::vector<ConfirmedTx> confirmed;
  // Pending is ordered by submit round, so the confirmable prefix is contiguous.
  while (!pending_.empty() && round_ - pending_.front().submit_round >= delta_) {
    confirmed.push_back(ConfirmedTx{round_, 0, std::move(pending_.front())});
    pending_.pop_front();
  }
  const std::uint64_t cap = gas_.block_capacity;
  for (std::size_t i = 0; i < confirmed.size(); ++i) {
    if (i % cap == 0)
      ++blocks_used_;
    confirmed[i].block = blocks_used_;
    log_.push_back(confirmed[i]);
  }
  return confirmed;
}

LedgerSnapshot Ledger::read_state() const
{
  LedgerSnapshot snap;
  snap.round = round_;
  snap.balances = balances_;
  snap.pending.assign(pending_.begin(), pending_.end());
  snap.confirmed_count = log_.size();
  snap.blocks_used = blocks_used_;
  snap.gas_total = gas_total_;
  return snap;
}

Amount Ledger::balance(PartyIndex party) const
{
  const auto it = balances_.find(party);
  if (it == balances_.end())
    throw std::out_of_range("unknown party " + std::to_string(party));
  return it->second;
}

Amount Ledger::total_balance() const
{
  Amount sum;
  for (const auto& [party, amount] : balances_)
    sum += amount;
  return sum;
}

} // namespace scauction
