#include "scauction/crypto.hpp"

#include <sodium.h>

#include <cstring>

namespace scauction {

namespace {

struct SodiumInit
{
  SodiumInit()
  {
    if (sodium_init() < 0)
      throw std::runtime_error("libsodium initialisation failed");
  }
};

void ensure_sodium()
{
  static const SodiumInit init;
  (void)init;
}

} // namespace

Digest sha256(ByteView data)
{
  ensure_sodium();
  Digest out{};
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

Commitment commit(ByteView message, ByteView nonce)
{
  if (nonce.size() != kNonceSize)
    throw PreconditionError("commitment nonce must be 64 bytes, got " + std::to_string(nonce.size()));

  ensure_sodium();
  crypto_hash_sha256_state st;
  crypto_hash_sha256_init(&st);
  crypto_hash_sha256_update(&st, nonce.data(), nonce.size());
  crypto_hash_sha256_update(&st, message.data(), message.size());
  Commitment c;
  crypto_hash_sha256_final(&st, c.digest.data());
  return c;
}

bool verify_commitment(const Commitment& c, const Opening& opening)
{
  if (opening.nonce.size() != kNonceSize)
    return false;
  return commit(opening.message, opening.nonce) == c;
}

KeyPair keygen(std::uint64_t seed)
{
  ensure_sodium();
  ByteWriter w;
  static constexpr char kTag[] = "scauction-key";
  w.raw(ByteView(reinterpret_cast<const std::uint8_t*>(kTag), sizeof(kTag) - 1));
  w.u64(seed);
  const Bytes material = w.take();
  const Digest ed_seed = sha256(material);

  KeyPair kp;
  crypto_sign_ed25519_seed_keypair(kp.public_key.data(), kp.secret.data(), ed_seed.data());
  return kp;
}

Signature sign(const KeyPair& key, ByteView message)
{
  ensure_sodium();
  Signature sig{};
  crypto_sign_ed25519_detached(sig.data(), nullptr, message.data(), message.size(), key.secret.data());
  return sig;
}

bool verify_sig(const PublicKey& pub, ByteView message, const Signature& sig)
{
  ensure_sodium();
  return crypto_sign_ed25519_verify_detached(sig.data(), message.data(), message.size(), pub.data()) == 0;
}

Nonce draw_nonce(std::mt19937_64& rng)
{
  Nonce n{};
  for (std::size_t i = 0; i < n.size(); i += 8) {
    const std::uint64_t word = rng();
    for (std::size_t j = 0; j < 8; ++j)
      n[i + j] = static_cast<std::uint8_t>(word >> (8 * j));
  }
  return n;
}

std::size_t SignatureVerifier::DigestHash::operator()(const Digest& d) const noexcept
{
  std::size_t h;
  std::memcpy(&h, d.data(), sizeof(h));
  return h;
}

bool SignatureVerifier::verify(const PublicKey& pub, ByteView message, const Signature& sig)
{
  ++calls_;
  ensure_sodium();
  crypto_hash_sha256_state st;
  crypto_hash_sha256_init(&st);
  crypto_hash_sha256_update(&st, pub.data(), pub.size());
  crypto_hash_sha256_update(&st, sig.data(), sig.size());
  crypto_hash_sha256_update(&st, message.data(), message.size());
  Digest key;
  crypto_hash_sha256_final(&st, key.data());

  if (auto it = memo_.find(key); it != memo_.end())
    return it->second;

  ++evaluations_;
  const bool ok = verify_sig(pub, message, sig);
  if (memo_.size() >= capacity_)
    memo_.clear();
  memo_.emplace(key, ok);
  return ok;
}

} // namespace scauction
