#pragma once

// Commitments (SHA-256 over nonce || message) and Ed25519 signatures.

#include "scauction/bytes.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace scauction {

inline constexpr std::size_t kDigestSize = 32;
inline constexpr std::size_t kNonceSize = 64;
inline constexpr std::size_t kPublicKeySize = 32;
inline constexpr std::size_t kSignatureSize = 64;

using Digest = std::array<std::uint8_t, kDigestSize>;
using Nonce = std::array<std::uint8_t, kNonceSize>;
using PublicKey = std::array<std::uint8_t, kPublicKeySize>;
using Signature = std::array<std::uint8_t, kSignatureSize>;

class PreconditionError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

Digest sha256(ByteView data);

struct Commitment
{
  Digest digest{};

  friend bool operator==(const Commitment&, const Commitment&) = default;
};

/// R = (m, r). The nonce is kept as a byte string so that malformed openings
/// can be represented and rejected by verify_commitment.
struct Opening
{
  Bytes message;
  Bytes nonce;

  friend bool operator==(const Opening&, const Opening&) = default;
};

/// Com(m, r) = SHA-256(r || m). Throws PreconditionError unless r is 64 bytes.
Commitment commit(ByteView message, ByteView nonce);

/// Vrf(c, R): true iff c == Com(R.message, R.nonce). Never throws.
bool verify_commitment(const Commitment& c, const Opening& opening);

struct KeyPair
{
  std::array<std::uint8_t, 64> secret{};
  PublicKey public_key{};
};

/// Deterministic per seed: the Ed25519 seed is SHA-256("scauction-key" || le64(seed)).
KeyPair keygen(std::uint64_t seed);

/// Deterministic Ed25519 signature.
Signature sign(const KeyPair& key, ByteView message);

bool verify_sig(const PublicKey& pub, ByteView message, const Signature& sig);

/// Fills a nonce from a scenario-owned generator.
Nonce draw_nonce(std::mt19937_64& rng);

/// Memoizing front for verify_sig. Verification is a pure function of
/// (pub, message, sig), so the cache only elides repeated work when one
/// broadcast is checked by every recipient.
class SignatureVerifier
{
public:
  explicit SignatureVerifier(std::size_t capacity = 1u << 16) : capacity_(capacity) {}

  bool verify(const PublicKey& pub, ByteView message, const Signature& sig);

  std::uint64_t calls() const { return calls_; }
  std::uint64_t evaluations() const { return evaluations_; }

private:
  struct DigestHash
  {
    std::size_t operator()(const Digest& d) const noexcept;
  };

  std::size_t capacity_;
  std::unordered_map<Digest, bool, DigestHash> memo_;
  std::uint64_t calls_ = 0;
  std::uint64_t evaluations_ = 0;
};

} // namespace scauction
