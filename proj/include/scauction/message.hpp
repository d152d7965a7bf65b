#pragma once

// Off-chain message framing:
//   kind (1) || iteration (4) || sender (2) || body length (2) || body || sender_sig (64)
// The sender signature covers every byte before it.

#include "scauction/bytes.hpp"
#include "scauction/crypto.hpp"
#include "scauction/types.hpp"

#include <cstdint>

namespace scauction {

enum class MessageKind : std::uint8_t
{
  commit = 0,
  reveal = 1,
  best_response = 2,
  verified = 3,
};

const char* to_string(MessageKind kind);

struct OffChainMessage
{
  MessageKind kind = MessageKind::commit;
  std::uint32_t iteration = 0;
  PartyIndex sender = 0;
  Bytes body;
  Signature sender_sig{};

  friend bool operator==(const OffChainMessage&, const OffChainMessage&) = default;
};

inline constexpr std::size_t kMessageHeaderSize = 1 + 4 + 2 + 2;

/// Bytes covered by the sender signature.
Bytes message_signing_bytes(MessageKind kind, std::uint32_t iteration, PartyIndex sender, ByteView body);

OffChainMessage make_message(MessageKind kind, std::uint32_t iteration, PartyIndex sender, Bytes body,
                             const KeyPair& key);

/// Re-signs a message in place (used by adversaries that rewrite payloads).
void resign(OffChainMessage& msg, const KeyPair& key);

Bytes encode_message(const OffChainMessage& msg);
OffChainMessage decode_message(ByteView wire);

inline std::size_t wire_size(const OffChainMessage& msg)
{
  return kMessageHeaderSize + msg.body.size() + kSignatureSize;
}

bool message_signature_valid(const OffChainMessage& msg, const PublicKey& pub, SignatureVerifier& verifier);

} // namespace scauction
