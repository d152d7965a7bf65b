#pragma once

// Off-chain protocol state machine for one channel party. A node is advanced
// only by the scheduler: each round it reads the chain view left by the
// previous round, consumes delivered messages, then runs its timers.
//
// Honest iteration k starting at round s:
//   s    initiator commits (environment input best_response(k))
//   s+1  everyone else commits
//   s+2  all commitments present -> initiator reveals
//   s+3  everyone else reveals
//   s+4  openings verified; designated computer broadcasts G_k
//   s+5  others recompute, sign and broadcast Verified
//   s+6  all signatures present -> G_k is final; iteration k+1 may start

#include "scauction/auction.hpp"
#include "scauction/judge.hpp"
#include "scauction/message.hpp"

#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace scauction {

enum class ComputerPolicy
{
  round_robin,
  seeded_random,
};

/// Designated computer (and commit initiator) of iteration k.
PartyIndex designated_computer(ComputerPolicy policy, std::uint64_t seed, Version k,
                               const std::vector<PartyIndex>& active);

struct PendingCallSummary
{
  PartyIndex sender = 0;
  CallSummary call;
  Round submit_round = 0;
};

/// What a node can learn from one read of the ledger: the Judge storage and
/// the pending queue at the end of a round, plus the events of that round.
struct ChainView
{
  Round round = -1;
  std::shared_ptr<const JudgeState> judge;
  std::vector<PendingCallSummary> pending;
  std::vector<JudgeEvent> events;

  bool pending_from(PartyIndex sender, JudgeOp op) const;
};

enum class EnvInputKind
{
  create,
  best_response,
  revoke,
  close,
};

struct EnvInput
{
  EnvInputKind kind = EnvInputKind::create;
  Version iteration = 0;
};

enum class EnvOutputKind
{
  created,
  ready,              // iteration `version` may start; `party` is its initiator
  iteration_complete, // G_version finalized
  converged,          // G_version is an equilibrium
  iteration_limit,    // configured iteration budget used up without equilibrium
  dispute,            // submitted against `party`
  closed,
  removed,
};

const char* to_string(EnvOutputKind kind);

struct EnvOutput
{
  EnvOutputKind kind = EnvOutputKind::created;
  Version version = 0;
  PartyIndex party = kNoParty;
};

struct Outbound
{
  std::shared_ptr<const OffChainMessage> msg;
  std::vector<PartyIndex> recipients;
};

struct Actions
{
  std::vector<Outbound> messages;
  std::vector<Bytes> txs;
  std::vector<EnvOutput> outputs;

  void append(Actions&& other);
  bool empty() const { return messages.empty() && txs.empty() && outputs.empty(); }
};

class PhaseError : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

enum class Phase
{
  init,
  creating,
  idle,
  committed,
  revealed,
  awaiting_g,
  verifying,
  disputing,
  finished,
  closing,
  closed,
  halted,
};

const char* to_string(Phase phase);

/// Scenario-wide immutable inputs shared by every node.
struct PartyContext
{
  std::shared_ptr<const EconTable> econ;
  std::shared_ptr<const std::vector<PublicKey>> pubkeys;
  std::shared_ptr<const std::vector<PartyIndex>> parties;
  std::shared_ptr<const ChannelState> genesis;
  Bytes genesis_bytes;
  std::shared_ptr<SignatureVerifier> verifier;
  MechanismParams mechanism;
  double eps = 1e-3;
  Round delta = 15;
  ComputerPolicy policy = ComputerPolicy::round_robin;
  std::uint64_t seed = 0;
  std::optional<Version> max_iterations;
};

/// A finalized state together with the openings it was computed from.
struct HistoryEntry
{
  std::shared_ptr<const ChannelState> state;
  std::vector<RevealRecord> reveals;
  std::vector<PartyBid> bids;
};

class PartyNode
{
public:
  PartyNode(PartyIndex id, KeyPair keys, std::shared_ptr<const PartyContext> ctx, std::uint64_t nonce_seed);

  Actions handle_env(const EnvInput& input, Round now);
  Actions observe_chain(std::shared_ptr<const ChainView> view, Round now);
  Actions handle_message(const OffChainMessage& msg, Round now);
  Actions on_round(Round now);

  /// state_submit(p_r, v, history[v], proof). Empty when p_r is none and the
  /// on-chain version is already at least v. Throws PhaseError when the node
  /// never finalized v.
  std::optional<Bytes> submit(PartyIndex target, Version v) const;

  PartyIndex id() const { return id_; }
  const KeyPair& keys() const { return keys_; }
  Phase phase() const { return phase_; }
  const std::vector<PartyIndex>& local_parties() const { return local_parties_; }
  const ChannelState& latest_state() const { return *latest_; }
  const std::map<Version, HistoryEntry>& history() const { return history_; }
  /// Version being run, or latest version when between iterations.
  Version current_iteration() const { return iter_ ? iter_->k : latest_->version; }
  bool in_iteration() const { return iter_.has_value(); }
  bool converged() const { return converged_; }

private:
  struct Iteration
  {
    Version k = 0;
    Round start = 0;
    PartyIndex computer = kNoParty;
    std::vector<PartyIndex> members;
    Nonce nonce{};
    Bytes bid_bytes;
    bool committed = false;
    bool revealed = false;
    std::map<PartyIndex, Commitment> commits;
    std::map<PartyIndex, RevealRecord> reveals;
    std::set<PartyIndex> conflicting;
    std::optional<std::pair<ChannelState, Signature>> proposal;
    std::map<PartyIndex, std::pair<ChannelState, Signature>> verified;
    std::optional<ChannelState> computed;
    std::vector<PartyBid> bids;
    Signature own_sig{};
  };

  bool is_member(PartyIndex p) const;
  bool flag_dispute() const;
  bool revoking(PartyIndex p) const;
  std::vector<PartyIndex> others(const std::vector<PartyIndex>& members) const;
  Outbound broadcast(MessageKind kind, Bytes body);

  void start_iteration(Round now, Actions& out);
  void send_commit(Actions& out);
  void send_reveal(Actions& out);
  void check_commits(Round now, Actions& out);
  void check_reveals(Round now, Actions& out);
  void check_proposal(Round now, Actions& out);
  void check_verified(Round now, Actions& out);
  void finalize(Round now, Actions& out);
  void dispute(const std::set<PartyIndex>& offenders, Round now, Actions& out);
  void abort_iteration(std::set<PartyIndex> awaited);
  std::int64_t version_at(Round r) const;

  PartyIndex id_;
  KeyPair keys_;
  std::shared_ptr<const PartyContext> ctx_;
  std::mt19937_64 rng_;

  Phase phase_ = Phase::init;
  std::vector<PartyIndex> local_parties_;
  std::shared_ptr<const ChannelState> latest_;
  std::map<Version, HistoryEntry> history_;
  std::vector<std::pair<Round, Version>> finalized_at_;
  std::optional<Iteration> iter_;
  std::set<PartyIndex> awaited_removal_;
  std::shared_ptr<const ChainView> view_;
  std::optional<Round> counter_due_;
  bool converged_ = false;
  bool close_sent_ = false;
};

} // namespace scauction
