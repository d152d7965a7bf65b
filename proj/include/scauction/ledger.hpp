#pragma once

// Simulated append-only ledger: balances, Δ-delayed confirmation, block
// packing and gas metering. Gas is reported, never debited from balances.

#include "scauction/bytes.hpp"
#include "scauction/fixed.hpp"
#include "scauction/types.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <vector>

namespace scauction {

struct GasTable
{
  std::uint64_t create_tx = 58'618;
  std::uint64_t close_tx = 54'724;
  std::uint64_t state_submit_tx = 52'845;
  std::uint64_t state_submit_eliminate_tx = 67'778;
  std::uint64_t revoke_tx = 55'000;
  std::uint64_t strawman_bid_tx = 40'260;
  std::uint64_t deploy = 3'387'400;
  double gas_price_eth = 2e-8;
  std::uint64_t block_capacity = 380;

  /// Throws std::invalid_argument on a negative price or zero block capacity.
  void validate() const;
};

struct PendingTx
{
  PartyIndex sender = 0;
  Bytes call;
  Round submit_round = 0;
  std::uint64_t gas = 0;
};

struct ConfirmedTx
{
  Round confirm_round = 0;
  std::uint64_t block = 0;
  PendingTx tx;
};

enum class BalanceStatus
{
  ok,
  insufficient_balance,
  unknown_party,
};

struct LedgerSnapshot
{
  Round round = 0;
  std::map<PartyIndex, Amount> balances;
  std::vector<PendingTx> pending;
  std::size_t confirmed_count = 0;
  std::uint64_t blocks_used = 0;
  std::uint64_t gas_total = 0;
};

class Ledger
{
public:
  Ledger(Round delta, GasTable gas, std::map<PartyIndex, Amount> balances);

  /// update(p_i, s): credit, or debit when the balance covers it.
  BalanceStatus update_balance(PartyIndex party, Amount delta);

  /// Queues a contract call stamped with the current round; visible to every
  /// observer immediately through read_pending.
  void submit_tx(PendingTx tx);

  /// Moves the clock forward one round and returns the calls whose age just
  /// reached Δ, in submission order.
  std::vector<ConfirmedTx> advance_round();

  LedgerSnapshot read_state() const;
  const std::deque<PendingTx>& read_pending() const { return pending_; }
  const std::vector<ConfirmedTx>& confirmed_log() const { return log_; }

  Amount balance(PartyIndex party) const;
  Amount total_balance() const;

  Round round() const { return round_; }
  Round delta() const { return delta_; }
  std::uint64_t blocks_used() const { return blocks_used_; }
  std::uint64_t gas_total() const { return gas_total_; }
  std::uint64_t tx_count() const { return tx_count_; }
  const GasTable& gas_table() const { return gas_; }

private:
  Round delta_;
  GasTable gas_;
  std::map<PartyIndex, Amount> balances_;
  Round round_ = 0;
  std::deque<PendingTx> pending_;
  std::vector<ConfirmedTx> log_;
  std::uint64_t blocks_used_ = 0;
  std::uint64_t gas_total_ = 0;
  std::uint64_t tx_count_ = 0;
};

} // namespace scauction
