#pragma once

// Deterministic synchronous scheduler binding parties, ledger and Judge.
// Each round: deliver last round's messages, advance the ledger and tick the
// Judge, step every party (chain view, messages, timers, environment), apply
// adversary behaviors, then queue the outputs for the next round.

#include "scauction/judge.hpp"
#include "scauction/ledger.hpp"
#include "scauction/metrics.hpp"
#include "scauction/party.hpp"
#include "scauction/scenario.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace scauction {

struct DeliveryRecord
{
  PartyIndex from = 0;
  PartyIndex to = 0;
  MessageKind kind = MessageKind::commit;
  std::uint32_t iteration = 0;
  std::uint32_t body_bytes = 0;
};

struct SendRecord
{
  PartyIndex sender = 0;
  MessageKind kind = MessageKind::commit;
  std::uint32_t iteration = 0;
  std::uint32_t recipients = 0;
};

struct TxRecord
{
  PartyIndex sender = 0;
  std::string kind;
  PartyIndex target = kNoParty;
  std::int64_t version = -1;
  std::uint64_t gas = 0;
  Round submit_round = 0;
  std::uint64_t block = 0;
};

struct RoundTrace
{
  Round round = 0;
  std::vector<DeliveryRecord> delivered;
  std::vector<SendRecord> sent;
  std::vector<TxRecord> submitted;
  std::vector<TxRecord> confirmed;
  std::vector<JudgeEvent> events;
  std::vector<Phase> phases;
  std::vector<std::string> notes;
};

nlohmann::json trace_to_json(const RoundTrace& t);

/// One JSON record per round, newline separated.
std::string trace_to_json_lines(const std::vector<RoundTrace>& trace);

struct RunResult
{
  MetricsRecord metrics;
  std::vector<RoundTrace> trace;
  LedgerSnapshot final_ledger;
  JudgeState final_judge;
  std::vector<std::int64_t> accepted_versions;
  std::vector<JudgeEvent> judge_events;
  Amount initial_total;
  /// Round at which each version was first finalized.
  std::map<Version, Round> finalized_round;
  /// Messages delivered per iteration number.
  std::map<Version, std::uint64_t> messages_by_iteration;
  std::map<Version, std::uint64_t> bytes_by_iteration;
  std::optional<ChannelState> final_state;
  std::vector<PublicKey> pubkeys;
  /// Conservation samples: (balances + escrow) at the end of every round.
  std::vector<Amount> conservation;
};

class StallError : public std::runtime_error
{
public:
  StallError(const std::string& what, std::vector<RoundTrace> trace)
    : std::runtime_error(what), trace_(std::move(trace))
  {
  }
  const std::vector<RoundTrace>& trace() const { return trace_; }

private:
  std::vector<RoundTrace> trace_;
};

class NonConvergenceError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Deterministic key and nonce seeds for party i of a scenario.
std::uint64_t party_key_seed(std::uint64_t scenario_seed, PartyIndex i);
std::uint64_t party_nonce_seed(std::uint64_t scenario_seed, PartyIndex i);

/// Runs a channel-mode scenario to close. Throws StallError at the round cap
/// and NonConvergenceError past the iteration cap.
RunResult run_channel(const ScenarioConfig& cfg);

} // namespace scauction
