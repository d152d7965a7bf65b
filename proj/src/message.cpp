#include "scauction/message.hpp"

#include <limits>
#include <stdexcept>

namespace scauction {

const char* to_string(MessageKind kind)
{
  switch (kind) {
  case MessageKind::commit:
    return "commit";
  case MessageKind::reveal:
    return "reveal";
  case MessageKind::best_response:
    return "best_response";
  case MessageKind::verified:
    return "verified";
  }
  return "unknown";
}

Bytes message_signing_bytes(MessageKind kind, std::uint32_t iteration, PartyIndex sender, ByteView body)
{
  if (body.size() > std::numeric_limits<std::uint16_t>::max())
    throw std::length_error("message body exceeds 65535 bytes");
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(kind));
  w.u32(iteration);
  w.u16(sender);
  w.u16(static_cast<std::uint16_t>(body.size()));
  w.raw(body);
  return w.take();
}

OffChainMessage make_message(MessageKind kind, std::uint32_t iteration, PartyIndex sender, Bytes body,
                             const KeyPair& key)
{
  OffChainMessage msg{kind, iteration, sender, std::move(body), {}};
  resign(msg, key);
  return msg;
}

void resign(OffChainMessage& msg, const KeyPair& key)
{
  msg.sender_sig = sign(key, message_signing_bytes(msg.kind, msg.iteration, msg.sender, msg.body));
}

Bytes encode_message(const OffChainMessage& msg)
{
  Bytes out = message_signing_bytes(msg.kind, msg.iteration, msg.sender, msg.body);
  out.insert(out.end(), msg.sender_sig.begin(), msg.sender_sig.end());
  return out;
}

OffChainMessage decode_message(ByteView wire)
{
  ByteReader r(wire);
  OffChainMessage msg;
  const std::uint8_t kind = r.u8();
  if (kind > static_cast<std::uint8_t>(MessageKind::verified))
    throw DecodeError("unknown message kind " + std::to_string(kind));
  msg.kind = static_cast<MessageKind>(kind);
  msg.iteration = r.u32();
  msg.sender = r.u16();
  const std::uint16_t len = r.u16();
  const ByteView body = r.raw(len);
  msg.body.assign(body.begin(), body.end());
  const ByteView sig = r.raw(kSignatureSize);
  std::copy(sig.begin(), sig.end(), msg.sender_sig.begin());
  r.expect_done();
  return msg;
}

bool message_signature_valid(const OffChainMessage& msg, const PublicKey& pub, SignatureVerifier& verifier)
{
  if (msg.body.size() > std::numeric_limits<std::uint16_t>::max())
    return false;
  return verifier.verify(pub, message_signing_bytes(msg.kind, msg.iteration, msg.sender, msg.body),
                         msg.sender_sig);
}

} // namespace scauction
