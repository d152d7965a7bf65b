#pragma once

// The Judge contract: channel lifecycle, versioned state submission with a
// dispute window, unanimous elimination, revocation and deposit settlement.
//
// Contract-call payloads (bit-exact):
//   create        : 0x00 || genesis signature (64)
//   state_submit  : 0x01 || p_r (2, 0xFFFF = none) || v (4) || canonical state
//                   || proof || signature list
//   revoke        : 0x02
//   close         : 0x03

#include "scauction/auction.hpp"
#include "scauction/ledger.hpp"

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace scauction {

enum class JudgeOp : std::uint8_t
{
  create = 0,
  state_submit = 1,
  revoke = 2,
  close = 3,
};

const char* to_string(JudgeOp op);

struct StateSubmission
{
  PartyIndex target = kNoParty;
  Version version = 0;
  ChannelState state; // signatures travel in state.signatures
  Proof proof;
};

struct JudgeCall
{
  JudgeOp op = JudgeOp::create;
  Signature genesis_sig{};
  std::optional<StateSubmission> submission;
};

Bytes encode_create_call(const Signature& genesis_sig);
Bytes encode_state_submit_call(const StateSubmission& submission);
Bytes encode_revoke_call();
Bytes encode_close_call();
JudgeCall decode_judge_call(ByteView call);

/// Header fields of a call, readable without decoding the state or proof.
struct CallSummary
{
  JudgeOp op = JudgeOp::create;
  PartyIndex target = kNoParty;
  Version version = 0;
};
CallSummary peek_judge_call(ByteView call);

std::uint64_t judge_call_gas(ByteView call, const GasTable& gas);

enum class ChannelStatus
{
  none,
  created,
};

enum class DisputeFlag
{
  none,
  dispute,
};

struct QuorumWindow
{
  std::set<PartyIndex> members;
  Round deadline = 0;
};

struct VoteWindow
{
  Version version = 0;
  std::set<PartyIndex> voters;
  Round deadline = 0;
};

struct JudgeState
{
  ChannelStatus channel = ChannelStatus::none;
  std::vector<PartyIndex> parties;
  std::map<PartyIndex, Amount> deposits;
  Amount forfeiture_pool;
  std::int64_t best_version = -1;
  std::optional<ChannelState> state;
  PartyIndex state_submitter = kNoParty;
  Round state_submit_round = -1;
  DisputeFlag flag = DisputeFlag::none;
  std::optional<Round> dispute_deadline;
  std::optional<QuorumWindow> create_waiting;
  std::optional<QuorumWindow> close_waiting;
  std::map<PartyIndex, VoteWindow> elimination_votes;
  std::set<PartyIndex> removed;
  std::map<PartyIndex, Signature> genesis_signatures;

  bool has_party(PartyIndex p) const;
  Amount escrow() const;
};

enum class JudgeEventKind
{
  channel_created,
  dispute_opened,
  dispute_closed,
  party_removed,
  channel_closed,
  call_rejected,
  window_expired,
};

enum class RemovalReason
{
  none,
  eliminated,
  revoked,
};

struct JudgeEvent
{
  JudgeEventKind kind = JudgeEventKind::call_rejected;
  Round round = 0;
  PartyIndex party = kNoParty;
  std::int64_t version = -1;
  RemovalReason reason = RemovalReason::none;
  std::string detail;
};

const char* to_string(JudgeEventKind kind);

struct JudgeConfig
{
  std::vector<PartyIndex> parties;
  std::shared_ptr<const EconTable> econ;
  std::shared_ptr<const std::vector<PublicKey>> pubkeys;
  MechanismParams mechanism;
  Amount deposit = Amount::from_double(1.0);
  Round delta = 15;
  Round dispute_window = 20;
  /// Portion of a forfeited deposit handed back to the eliminated party.
  double refund_fraction = 0.0;
};

class Judge
{
public:
  Judge(JudgeConfig config, std::shared_ptr<SignatureVerifier> verifier);

  /// Decodes and dispatches a confirmed contract call. Malformed payloads
  /// are rejected with a call_rejected event.
  void apply(const ConfirmedTx& confirmed, Ledger& ledger);

  void on_create(PartyIndex sender, const Signature& genesis_sig, Round now, Ledger& ledger);
  void on_state_submit(PartyIndex sender, const StateSubmission& sub, Round now, Round submit_round, Ledger& ledger);
  void on_revoke(PartyIndex sender, Round now, Ledger& ledger);
  void on_close(PartyIndex sender, Round now, Ledger& ledger);

  /// Expires create/close/vote windows and the dispute deadline.
  std::vector<JudgeEvent> tick(Round now);

  const JudgeState& state() const { return state_; }
  const JudgeConfig& config() const { return config_; }
  const ChannelState& genesis() const { return genesis_; }
  const Bytes& genesis_bytes() const { return genesis_bytes_; }

  /// Events emitted since the last call.
  std::vector<JudgeEvent> take_events();
  const std::vector<JudgeEvent>& event_log() const { return log_; }

  /// Every version accepted by state submission, in order.
  const std::vector<std::int64_t>& accepted_versions() const { return accepted_; }

private:
  void emit(JudgeEvent ev);
  void reject(PartyIndex sender, Round now, std::string why);
  void remove_party(PartyIndex party, RemovalReason reason, Round now, Ledger& ledger);
  void settle_if_complete(Round now, Ledger& ledger);
  void eliminate_if_unanimous(PartyIndex target, Round now, Ledger& ledger);
  bool verify_submission(const StateSubmission& sub);

  JudgeConfig config_;
  std::shared_ptr<SignatureVerifier> verifier_;
  ChannelState genesis_;
  Bytes genesis_bytes_;
  JudgeState state_;
  std::vector<JudgeEvent> pending_events_;
  std::vector<JudgeEvent> log_;
  std::vector<std::int64_t> accepted_;
};

} // namespace scauction
