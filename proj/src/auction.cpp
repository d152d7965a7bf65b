#include "scauction/auction.hpp"

#include "scauction/message.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scauction {

__extension__ using Wide = __int128;

const char* to_string(Role role) { return role == Role::buyer ? "buyer" : "seller"; }

Bytes BidProfile::encode() const
{
  ByteWriter w;
  w.i32(price.raw());
  w.i32(quantity.raw());
  return w.take();
}

BidProfile BidProfile::decode(ByteView bytes)
{
  ByteReader r(bytes);
  BidProfile b;
  b.price = Fixed::from_raw(r.i32());
  b.quantity = Fixed::from_raw(r.i32());
  r.expect_done();
  return b;
}

PartyEcon PartyEcon::buyer(double a, double c, double capacity)
{
  PartyEcon e;
  e.role = Role::buyer;
  e.valuation_slope = Fixed::from_double(a);
  e.valuation_curvature = Fixed::from_double(c);
  e.capacity = Fixed::from_double(capacity);
  return e;
}

PartyEcon PartyEcon::seller(double w, double capacity)
{
  PartyEcon e;
  e.role = Role::seller;
  e.cost_curvature = Fixed::from_double(w);
  e.capacity = Fixed::from_double(capacity);
  return e;
}

void PartyEcon::validate() const
{
  const Fixed zero;
  if (capacity <= zero)
    throw AuctionError("capacity must be positive");
  if (role == Role::buyer) {
    if (valuation_slope <= zero)
      throw AuctionError("buyer valuation slope a must be positive");
    if (valuation_curvature <= zero)
      throw AuctionError("buyer curvature c must be positive");
  } else if (cost_curvature <= zero) {
    throw AuctionError("seller cost curvature w must be positive");
  }
}

bool ChannelState::same_content(const ChannelState& other) const
{
  return version == other.version && clearing_price == other.clearing_price &&
         active_parties == other.active_parties && responses == other.responses;
}

std::optional<BidProfile> ChannelState::response_of(PartyIndex party) const
{
  const auto it = std::lower_bound(active_parties.begin(), active_parties.end(), party);
  if (it == active_parties.end() || *it != party)
    return std::nullopt;
  return responses[static_cast<std::size_t>(it - active_parties.begin())];
}

Bytes canonical_bytes(const ChannelState& state)
{
  if (state.active_parties.size() != state.responses.size())
    throw AuctionError("responses length must equal active party count");
  if (state.active_parties.size() > std::numeric_limits<std::uint16_t>::max())
    throw AuctionError("too many parties for canonical encoding");
  ByteWriter w;
  w.u32(state.version);
  w.i32(state.clearing_price.raw());
  w.u16(static_cast<std::uint16_t>(state.active_parties.size()));
  for (std::size_t i = 0; i < state.active_parties.size(); ++i) {
    w.u16(state.active_parties[i]);
    w.i32(state.responses[i].price.raw());
    w.i32(state.responses[i].quantity.raw());
  }
  return w.take();
}

ChannelState decode_state(ByteReader& r)
{
  ChannelState s;
  s.version = r.u32();
  s.clearing_price = Fixed::from_raw(r.i32());
  const std::uint16_t count = r.u16();
  s.active_parties.reserve(count);
  s.responses.reserve(count);
  for (std::uint16_t i = 0; i < count; ++i) {
    s.active_parties.push_back(r.u16());
    BidProfile b;
    b.price = Fixed::from_raw(r.i32());
    b.quantity = Fixed::from_raw(r.i32());
    s.responses.push_back(b);
  }
  return s;
}

void encode_signatures(ByteWriter& w, const std::map<PartyIndex, Signature>& sigs)
{
  w.u16(static_cast<std::uint16_t>(sigs.size()));
  for (const auto& [party, sig] : sigs) {
    w.u16(party);
    w.raw(sig);
  }
}

std::map<PartyIndex, Signature> decode_signatures(ByteReader& r)
{
  std::map<PartyIndex, Signature> sigs;
  const std::uint16_t count = r.u16();
  for (std::uint16_t i = 0; i < count; ++i) {
    const PartyIndex party = r.u16();
    Signature sig;
    const ByteView raw = r.raw(kSignatureSize);
    std::copy(raw.begin(), raw.end(), sig.begin());
    if (!sigs.emplace(party, sig).second)
      throw DecodeError("duplicate signer in signature list");
  }
  return sigs;
}

void encode_proof(ByteWriter& w, const Proof& proof)
{
  w.u16(static_cast<std::uint16_t>(proof.reveals.size()));
  for (const auto& rv : proof.reveals) {
    if (rv.opening.message.size() != BidProfile::kEncodedSize || rv.opening.nonce.size() != kNonceSize)
      throw AuctionError("proof reveal opening has the wrong shape");
    w.u16(rv.party);
    w.raw(rv.opening.message);
    w.raw(rv.opening.nonce);
    w.raw(rv.message_sig);
  }
  w.u8(proof.prev_state ? 1 : 0);
  if (proof.prev_state) {
    w.raw(canonical_bytes(*proof.prev_state));
    encode_signatures(w, proof.prev_state->signatures);
  }
}

Proof decode_proof(ByteReader& r)
{
  Proof proof;
  const std::uint16_t count = r.u16();
  proof.reveals.reserve(count);
  for (std::uint16_t i = 0; i < count; ++i) {
    RevealRecord rv;
    rv.party = r.u16();
    const ByteView msg = r.raw(BidProfile::kEncodedSize);
    rv.opening.message.assign(msg.begin(), msg.end());
    const ByteView nonce = r.raw(kNonceSize);
    rv.opening.nonce.assign(nonce.begin(), nonce.end());
    const ByteView sig = r.raw(kSignatureSize);
    std::copy(sig.begin(), sig.end(), rv.message_sig.begin());
    proof.reveals.push_back(std::move(rv));
  }
  const std::uint8_t has_prev = r.u8();
  if (has_prev > 1)
    throw DecodeError("bad prev_state flag");
  if (has_prev) {
    ChannelState prev = decode_state(r);
    prev.signatures = decode_signatures(r);
    proof.prev_state = std::move(prev);
  }
  return proof;
}

BidProfile respond(const PartyEcon& econ, Fixed price)
{
  const std::int64_t cap = econ.capacity.wide();
  std::int64_t q = 0;
  if (econ.role == Role::buyer) {
    q = div_round((econ.valuation_slope.wide() - price.wide()) * Fixed::kScale, econ.valuation_curvature.wide());
  } else {
    q = div_round(price.wide() * Fixed::kScale, econ.cost_curvature.wide());
  }
  q = std::clamp<std::int64_t>(q, 0, cap);
  return BidProfile{price, Fixed::from_wide(q)};
}

namespace {

const PartyEcon& econ_of(const EconTable& econ, PartyIndex party)
{
  if (party >= econ.size())
    throw AuctionError("no economy entry for party " + std::to_string(party));
  return econ[party];
}

void check_bid_shape(std::span<const PartyBid> bids, const ChannelState& prev, const EconTable& econ)
{
  for (std::size_t i = 0; i < bids.size(); ++i) {
    if (i > 0 && bids[i].party <= bids[i - 1].party)
      throw AuctionError("bids must be sorted by party and unique");
    if (!std::binary_search(prev.active_parties.begin(), prev.active_parties.end(), bids[i].party))
      throw AuctionError("bid from party " + std::to_string(bids[i].party) + " not active in previous state");
    const PartyEcon& e = econ_of(econ, bids[i].party);
    const BidProfile& b = bids[i].bid;
    if (b.price < Fixed() || b.quantity < Fixed() || b.quantity > e.capacity)
      throw AuctionError("bid from party " + std::to_string(bids[i].party) + " out of range");
  }
}

} // namespace

std::int64_t excess_demand(std::span<const PartyBid> bids, const EconTable& econ)
{
  std::int64_t demand = 0;
  std::int64_t supply = 0;
  for (const auto& pb : bids) {
    if (econ_of(econ, pb.party).role == Role::buyer)
      demand += pb.bid.quantity.wide();
    else
      supply += pb.bid.quantity.wide();
  }
  return demand - supply;
}

ChannelState best_response(const ChannelState& prev, std::span<const PartyBid> bids, const EconTable& econ,
                           const MechanismParams& params)
{
  if (bids.empty())
    throw AuctionError("no bids");
  check_bid_shape(bids, prev, econ);

  const Wide step = static_cast<Wide>(params.gamma.wide()) * excess_demand(bids, econ);
  if (step > std::numeric_limits<std::int64_t>::max() / 2 || step < std::numeric_limits<std::int64_t>::min() / 2)
    throw ArithmeticError("price step overflow");
  const std::int64_t delta = div_round(static_cast<std::int64_t>(step), Fixed::kScale);
  const Fixed price = Fixed::from_wide(std::max<std::int64_t>(0, prev.clearing_price.wide() + delta));

  ChannelState next;
  next.version = prev.version + 1;
  next.clearing_price = price;
  next.active_parties.reserve(bids.size());
  next.responses.reserve(bids.size());
  for (const auto& pb : bids) {
    next.active_parties.push_back(pb.party);
    next.responses.push_back(respond(econ[pb.party], price));
  }
  return next;
}

bool is_ne(const ChannelState& state, std::span<const PartyBid> bids, const EconTable& econ, double eps)
{
  if (bids.size() != state.active_parties.size())
    return false;
  const double scale = static_cast<double>(Fixed::kScale);
  if (std::abs(static_cast<double>(excess_demand(bids, econ))) / scale > eps)
    return false;
  for (std::size_t i = 0; i < bids.size(); ++i) {
    if (bids[i].party != state.active_parties[i])
      return false;
    const BidProfile target = respond(econ[bids[i].party], state.clearing_price);
    const double dq = std::abs(static_cast<double>(bids[i].bid.quantity.wide() - target.quantity.wide())) / scale;
    const double dp = std::abs(static_cast<double>(bids[i].bid.price.wide() - target.price.wide())) / scale;
    if (dq > eps || dp > eps)
      return false;
  }
  return true;
}

Equilibrium equilibrium_oracle(std::span<const PartyEcon> econ)
{
  using Real = long double;
  struct Agent
  {
    bool buyer;
    Real a, c, w, cap;
  };
  std::vector<Agent> agents;
  agents.reserve(econ.size());
  bool any_buyer = false;
  bool any_seller = false;
  for (const auto& e : econ) {
    Agent ag{e.role == Role::buyer, e.valuation_slope.to_double(), e.valuation_curvature.to_double(),
             e.cost_curvature.to_double(), e.capacity.to_double()};
    any_buyer |= ag.buyer;
    any_seller |= !ag.buyer;
    agents.push_back(ag);
  }
  if (!any_buyer || !any_seller)
    throw AuctionError("equilibrium needs at least one buyer and one seller");

  auto allocation = [](const Agent& ag, Real p) -> Real {
    const Real q = ag.buyer ? (ag.a - p) / ag.c : p / ag.w;
    return std::clamp<Real>(q, 0, ag.cap);
  };
  auto excess = [&](Real p) {
    Real z = 0;
    for (const auto& ag : agents)
      z += ag.buyer ? allocation(ag, p) : -allocation(ag, p);
    return z;
  };

  Equilibrium eq;
  eq.allocations.assign(agents.size(), 0.0);
  if (excess(0) <= 0) {
    // No buyer wants to trade at any non-negative price.
    eq.trade = false;
    return eq;
  }

  std::vector<Real> breaks{0};
  for (const auto& ag : agents) {
    if (ag.buyer) {
      breaks.push_back(ag.a - ag.c * ag.cap);
      breaks.push_back(ag.a);
    } else {
      breaks.push_back(ag.w * ag.cap);
    }
  }
  std::erase_if(breaks, [](Real b) { return b < 0; });
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  std::optional<Real> root;
  for (std::size_t i = 0; i < breaks.size() && !root; ++i) {
    const Real lo = breaks[i];
    const bool last = i + 1 == breaks.size();
    const Real hi = last ? std::numeric_limits<Real>::infinity() : breaks[i + 1];
    const Real probe = last ? lo + 1 : (lo + hi) / 2;

    // On this segment every agent is either clamped or interior; Z(p) = A - B p.
    Real A = 0;
    Real B = 0;
    for (const auto& ag : agents) {
      const Real raw = ag.buyer ? (ag.a - probe) / ag.c : probe / ag.w;
      const Real sign = ag.buyer ? 1 : -1;
      if (raw <= 0) {
        continue;
      } else if (raw >= ag.cap) {
        A += sign * ag.cap;
      } else if (ag.buyer) {
        A += ag.a / ag.c;
        B += 1 / ag.c;
      } else {
        B += 1 / ag.w;
      }
    }
    if (B == 0) {
      if (std::abs(A) < 1e-15L)
        root = lo;
      continue;
    }
    const Real p = A / B;
    const Real slack = 1e-12L * std::max<Real>(1, std::abs(p));
    if (p >= lo - slack && p <= hi + slack)
      root = std::clamp(p, lo, hi);
  }
  if (!root)
    throw AuctionError("equilibrium oracle found no root");

  eq.price = static_cast<double>(*root);
  Real traded = 0;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const Real q = allocation(agents[i], *root);
    eq.allocations[i] = static_cast<double>(q);
    if (agents[i].buyer)
      traded += q;
  }
  eq.trade = traded > 0;
  return eq;
}

ChannelState initial_state(std::span<const PartyIndex> parties)
{
  ChannelState s;
  s.version = 0;
  s.active_parties.assign(parties.begin(), parties.end());
  if (!std::is_sorted(s.active_parties.begin(), s.active_parties.end()) ||
      std::adjacent_find(s.active_parties.begin(), s.active_parties.end()) != s.active_parties.end())
    throw AuctionError("party list must be sorted and unique");
  s.responses.assign(parties.size(), BidProfile{});
  return s;
}

bool signatures_valid(const ChannelState& state, std::span<const PartyIndex> signers,
                      std::span<const PublicKey> pubkeys, SignatureVerifier& verifier)
{
  const Bytes body = canonical_bytes(state);
  for (PartyIndex p : signers) {
    if (p >= pubkeys.size())
      return false;
    const auto it = state.signatures.find(p);
    if (it == state.signatures.end() || !verifier.verify(pubkeys[p], body, it->second))
      return false;
  }
  return true;
}

std::optional<BidProfile> decode_bid(ByteView message, const PartyEcon& econ)
{
  if (message.size() != BidProfile::kEncodedSize)
    return std::nullopt;
  const BidProfile b = BidProfile::decode(message);
  if (b.price < Fixed() || b.quantity < Fixed() || b.quantity > econ.capacity)
    return std::nullopt;
  return b;
}

bool verify_state(const ChannelState& state, const Proof& proof, const EconTable& econ,
                  std::span<const PublicKey> pubkeys, const MechanismParams& params, SignatureVerifier& verifier)
{
  try {
    if (!proof.prev_state) {
      // Genesis carries no proof; it must be the canonical zero state.
      return state.same_content(initial_state(state.active_parties)) && proof.reveals.empty();
    }
    const ChannelState& prev = *proof.prev_state;
    if (prev.version + 1 != state.version)
      return false;
    if (prev.version == 0 && !prev.same_content(initial_state(prev.active_parties)))
      return false;
    if (!signatures_valid(prev, prev.active_parties, pubkeys, verifier))
      return false;

    if (proof.reveals.size() != state.active_parties.size())
      return false;
    std::vector<PartyBid> bids;
    bids.reserve(proof.reveals.size());
    for (std::size_t i = 0; i < proof.reveals.size(); ++i) {
      const RevealRecord& rv = proof.reveals[i];
      if (rv.party != state.active_parties[i] || rv.party >= pubkeys.size() || rv.party >= econ.size())
        return false;
      if (rv.opening.nonce.size() != kNonceSize)
        return false;
      Bytes body = rv.opening.message;
      body.insert(body.end(), rv.opening.nonce.begin(), rv.opening.nonce.end());
      const Bytes signed_bytes = message_signing_bytes(MessageKind::reveal, state.version, rv.party, body);
      if (!verifier.verify(pubkeys[rv.party], signed_bytes, rv.message_sig))
        return false;
      const auto bid = decode_bid(rv.opening.message, econ[rv.party]);
      if (!bid)
        return false;
      bids.push_back(PartyBid{rv.party, *bid});
    }
    return best_response(prev, bids, econ, params).same_content(state);
  } catch (const std::exception&) {
    return false;
  }
}

} // namespace scauction
