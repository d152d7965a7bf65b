#pragma once

// Reference iterative double auction: quadratic utilities with price
// tatonnement. Buyers demand x = clamp((a - p) / c, 0, d), sellers supply
// y = clamp(p / w, 0, s), and the clearing price moves by gamma times the
// excess demand of the submitted bids.

#include "scauction/bytes.hpp"
#include "scauction/crypto.hpp"
#include "scauction/fixed.hpp"
#include "scauction/types.hpp"

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace scauction {

class AuctionError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

enum class Role : std::uint8_t
{
  buyer,
  seller,
};

const char* to_string(Role role);

/// (beta, x) for buyers, (alpha, y) for sellers. 8 bytes on the wire.
struct BidProfile
{
  Fixed price;
  Fixed quantity;

  static constexpr std::size_t kEncodedSize = 8;

  Bytes encode() const;
  static BidProfile decode(ByteView bytes);

  friend bool operator==(const BidProfile&, const BidProfile&) = default;
};

struct PartyEcon
{
  Role role = Role::buyer;
  Fixed valuation_slope;     // a, buyers
  Fixed valuation_curvature; // c, buyers
  Fixed cost_curvature;      // w, sellers
  Fixed capacity;            // d_i or s_j

  static PartyEcon buyer(double a, double c, double capacity);
  static PartyEcon seller(double w, double capacity);

  /// Throws AuctionError if a parameter required by the role is not positive.
  void validate() const;
};

/// Economy of the whole scenario, indexed by PartyIndex.
using EconTable = std::vector<PartyEcon>;

struct PartyBid
{
  PartyIndex party = 0;
  BidProfile bid;

  friend bool operator==(const PartyBid&, const PartyBid&) = default;
};

struct MechanismParams
{
  Fixed gamma = Fixed::from_raw(20'000);
};

/// G_k: iteration result plus the signatures collected on its canonical bytes.
struct ChannelState
{
  Version version = 0;
  Fixed clearing_price;
  std::vector<PartyIndex> active_parties;
  std::vector<BidProfile> responses;
  std::map<PartyIndex, Signature> signatures;

  /// Field-for-field equality, ignoring signatures.
  bool same_content(const ChannelState& other) const;

  std::optional<BidProfile> response_of(PartyIndex party) const;
};

/// version (4) || clearing_price (4) || count (2) || per party (index (2) || bid (8)).
/// Signatures cover exactly these bytes.
Bytes canonical_bytes(const ChannelState& state);
ChannelState decode_state(ByteReader& reader);

inline std::size_t canonical_size(std::size_t parties) { return 10 + 10 * parties; }

void encode_signatures(ByteWriter& w, const std::map<PartyIndex, Signature>& sigs);
std::map<PartyIndex, Signature> decode_signatures(ByteReader& r);

/// One revealed opening plus the sender signature of the reveal message that
/// carried it, so a verifier can check who revealed what.
struct RevealRecord
{
  PartyIndex party = 0;
  Opening opening;
  Signature message_sig{};

  friend bool operator==(const RevealRecord&, const RevealRecord&) = default;
};

/// Everything needed to recompute a state: the bids of its iteration and the
/// fully signed predecessor. Absent prev_state means the state is the genesis.
struct Proof
{
  std::vector<RevealRecord> reveals;
  std::optional<ChannelState> prev_state;
};

void encode_proof(ByteWriter& w, const Proof& proof);
Proof decode_proof(ByteReader& r);

BidProfile respond(const PartyEcon& econ, Fixed price);

/// One tatonnement step. bids must be sorted by party, unique, drawn from
/// prev.active_parties and well formed for each party's role.
ChannelState best_response(const ChannelState& prev, std::span<const PartyBid> bids, const EconTable& econ,
                           const MechanismParams& params);

/// Excess demand D - S of a bid set, in raw fixed-point units.
std::int64_t excess_demand(std::span<const PartyBid> bids, const EconTable& econ);

bool is_ne(const ChannelState& state, std::span<const PartyBid> bids, const EconTable& econ, double eps);

struct Equilibrium
{
  bool trade = false;
  double price = 0.0;
  /// Allocation per input party, same order as the econ span.
  std::vector<double> allocations;
};

/// Closed-form equilibrium of the reference mechanism, by enumeration over the
/// piecewise-linear segments of the aggregate excess demand curve.
Equilibrium equilibrium_oracle(std::span<const PartyEcon> econ);

/// Genesis: version 0, zero price, all-zero responses.
ChannelState initial_state(std::span<const PartyIndex> parties);

bool signatures_valid(const ChannelState& state, std::span<const PartyIndex> signers,
                      std::span<const PublicKey> pubkeys, SignatureVerifier& verifier);

/// Checks that G is exactly what an honest computation derives from proof.
bool verify_state(const ChannelState& state, const Proof& proof, const EconTable& econ,
                  std::span<const PublicKey> pubkeys, const MechanismParams& params, SignatureVerifier& verifier);

/// Opening message decoding shared by parties and the judge. Returns nullopt
/// for malformed or out-of-range bids.
std::optional<BidProfile> decode_bid(ByteView message, const PartyEcon& econ);

} // namespace scauction
