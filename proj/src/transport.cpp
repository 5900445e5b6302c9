#include <v2net/transport.hpp>

#include <algorithm>
#include <cstring>

namespace v2net {

namespace {

constexpr std::array<uint8_t, 4> kMagic{0xf9, 0xbe, 0xb4, 0xd9};
constexpr size_t kCommandLen = 12;

std::array<uint8_t, 4> v1_checksum(ByteSpan body) {
  auto h = sha256(sha256(body));
  return {h[0], h[1], h[2], h[3]};
}

}  // namespace

std::string_view to_string(Protocol p) { return p == Protocol::V1 ? "v1" : "v2"; }

std::string_view to_string(TransportError e) {
  switch (e) {
    case TransportError::TooLarge: return "packet-too-large";
    case TransportError::AuthFailure: return "auth-failure";
    case TransportError::Malformed: return "malformed";
    case TransportError::Oversize: return "oversize";
  }
  return "unknown";
}

std::string_view to_string(HandshakePhase p) {
  switch (p) {
    case HandshakePhase::KeyExchange: return "key_exchange";
    case HandshakePhase::VersionNegotiation: return "version_negotiation";
    case HandshakePhase::Application: return "application";
  }
  return "unknown";
}

Bytes PacketContents::serialize() const {
  Bytes out;
  if (type) {
    if (type->long_form) {
      out.push_back(0);
      out.push_back(static_cast<uint8_t>(type->code));
      out.push_back(static_cast<uint8_t>(type->code >> 8));
    } else {
      out.push_back(static_cast<uint8_t>(type->code));
    }
  }
  append(out, message);
  return out;
}

std::optional<PacketContents> PacketContents::parse(uint8_t flags, ByteSpan contents) {
  PacketContents pc;
  pc.flags = flags;
  if (contents.empty()) return pc;
  if (contents[0] == 0) {
    if (contents.size() < 3) return std::nullopt;
    pc.type = TypeId{read_le16(contents.data() + 1), true};
    pc.message.assign(contents.begin() + 3, contents.end());
  } else {
    pc.type = TypeId{contents[0], false};
    pc.message.assign(contents.begin() + 1, contents.end());
  }
  return pc;
}

PacketContents PacketContents::from_message(const Message& m) {
  PacketContents pc;
  pc.type = v2_type_id(m.type);
  pc.message = m.body;
  return pc;
}

PacketContents PacketContents::decoy(size_t filler_len) {
  PacketContents pc;
  pc.flags = kIgnoreBit;
  pc.message.assign(filler_len, 0);
  return pc;
}

std::optional<Message> PacketContents::to_message() const {
  if (!type) return std::nullopt;
  auto t = from_type_id(*type);
  if (!t) return std::nullopt;
  return Message{*t, message};
}

Bytes WirePacket::bytes() const {
  Bytes out(encrypted_length.begin(), encrypted_length.end());
  append(out, ciphertext);
  return out;
}

TransportSession TransportSession::v1() { return TransportSession(); }

TransportSession TransportSession::v2(const crypto::KeyMaterial& km, Role role) {
  TransportSession s;
  s.m_protocol = Protocol::V2;
  const bool init = role == Role::Initiator;
  s.m_send_len.emplace(init ? km.initiator_length_key : km.responder_length_key);
  s.m_send_content.emplace(init ? km.initiator_content_key : km.responder_content_key);
  s.m_recv_len.emplace(init ? km.responder_length_key : km.initiator_length_key);
  s.m_recv_content.emplace(init ? km.responder_content_key : km.initiator_content_key);
  return s;
}

WirePacket TransportSession::encode_packet(const PacketContents& contents, ByteSpan aad) {
  if (m_protocol != Protocol::V2) throw std::logic_error("encode_packet on a V1 session");
  Bytes body = contents.serialize();
  if (body.size() > crypto::kMaxEncodableLength) throw crypto::EncodingError("packet contents too large");
  WirePacket wp;
  wp.encrypted_length = m_send_len->encrypt_length(static_cast<uint32_t>(body.size()));
  Bytes plain;
  plain.reserve(body.size() + 1);
  plain.push_back(contents.flags);
  append(plain, body);
  wp.ciphertext = m_send_content->seal(aad, plain);
  return wp;
}

Expected<PacketContents, TransportError> TransportSession::fail(TransportError e) {
  m_must_disconnect = true;
  return e;
}

Expected<PacketContents, TransportError> TransportSession::decode_packet(ByteSpan wire, ByteSpan aad) {
  if (m_protocol != Protocol::V2) throw std::logic_error("decode_packet on a V1 session");
  if (m_must_disconnect) return TransportError::AuthFailure;
  if (wire.size() < kPacketOverhead) return fail(TransportError::TooLarge);
  uint32_t len = m_recv_len->decrypt_length(wire.first(crypto::kLengthFieldLen));
  // A garbled length is caught before the tag is checked.
  if (uint64_t{len} + kPacketOverhead != wire.size()) return fail(TransportError::TooLarge);
  auto plain = m_recv_content->open(aad, wire.subspan(crypto::kLengthFieldLen));
  if (!plain) return fail(TransportError::AuthFailure);
  auto pc = PacketContents::parse((*plain)[0], ByteSpan(*plain).subspan(1));
  if (!pc) return fail(TransportError::Malformed);
  return std::move(*pc);
}

Expected<std::optional<PacketContents>, TransportError> TransportSession::read_packet(Bytes& buffer, ByteSpan aad) {
  using R = Expected<std::optional<PacketContents>, TransportError>;
  if (m_protocol != Protocol::V2) throw std::logic_error("read_packet on a V1 session");
  if (m_must_disconnect) return TransportError::AuthFailure;
  if (!m_pending_len) {
    if (buffer.size() < crypto::kLengthFieldLen) return R(std::nullopt);
    m_pending_len = m_recv_len->decrypt_length(ByteSpan(buffer).first(crypto::kLengthFieldLen));
  }
  const size_t total = size_t{*m_pending_len} + kPacketOverhead;
  if (buffer.size() < total) return R(std::nullopt);
  auto plain = m_recv_content->open(aad, ByteSpan(buffer).subspan(crypto::kLengthFieldLen, total - crypto::kLengthFieldLen));
  m_pending_len.reset();
  if (!plain) {
    m_must_disconnect = true;
    return TransportError::AuthFailure;
  }
  buffer.erase(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(total));
  auto pc = PacketContents::parse((*plain)[0], ByteSpan(*plain).subspan(1));
  if (!pc) {
    m_must_disconnect = true;
    return TransportError::Malformed;
  }
  return R(std::move(*pc));
}

Bytes TransportSession::encode_messages(const std::vector<Message>& msgs) {
  Bytes out;
  for (const auto& m : msgs) {
    if (m_protocol == Protocol::V1) {
      append(out, v1_frame(m));
    } else {
      append(out, encode_packet(PacketContents::from_message(m)).bytes());
    }
  }
  return out;
}

Expected<std::vector<Message>, TransportError> TransportSession::decode_segment(ByteSpan seg) {
  std::vector<Message> out;
  auto error = [&](TransportError e) -> Expected<std::vector<Message>, TransportError> {
    m_must_disconnect = true;
    return e;
  };
  if (m_must_disconnect) return TransportError::AuthFailure;
  size_t off = 0;
  if (m_protocol == Protocol::V1) {
    while (off < seg.size()) {
      if (seg.size() - off < kV1HeaderLen) return error(TransportError::Malformed);
      const uint8_t* h = seg.data() + off;
      if (!std::equal(kMagic.begin(), kMagic.end(), h)) return error(TransportError::Malformed);
      std::string cmd(reinterpret_cast<const char*>(h + 4), kCommandLen);
      cmd.resize(std::strlen(cmd.c_str()));
      uint32_t len = read_le32(h + 16);
      if (seg.size() - off - kV1HeaderLen < len) return error(TransportError::TooLarge);
      ByteSpan body = seg.subspan(off + kV1HeaderLen, len);
      auto sum = v1_checksum(body);
      if (!std::equal(sum.begin(), sum.end(), h + 20)) return error(TransportError::AuthFailure);
      auto type = from_command(cmd);
      if (!type) return error(TransportError::Malformed);
      out.push_back(Message{*type, Bytes(body.begin(), body.end())});
      off += kV1HeaderLen + len;
    }
    return out;
  }
  while (off < seg.size()) {
    if (seg.size() - off < kPacketOverhead) return error(TransportError::TooLarge);
    uint32_t len = m_recv_len->decrypt_length(seg.subspan(off, crypto::kLengthFieldLen));
    if (uint64_t{len} + kPacketOverhead > seg.size() - off) return error(TransportError::TooLarge);
    auto plain = m_recv_content->open({}, seg.subspan(off + crypto::kLengthFieldLen, len + 1 + crypto::kTagLen));
    if (!plain) return error(TransportError::AuthFailure);
    off += len + kPacketOverhead;
    auto pc = PacketContents::parse((*plain)[0], ByteSpan(*plain).subspan(1));
    if (!pc) return error(TransportError::Malformed);
    if (pc->ignore()) {
      ++m_decoys_received;
      continue;
    }
    auto msg = pc->to_message();
    if (!msg) return error(TransportError::Malformed);
    out.push_back(std::move(*msg));
  }
  return out;
}

Bytes v1_frame(const Message& m) {
  Bytes out(kMagic.begin(), kMagic.end());
  auto cmd = command_name(m.type);
  Bytes command(kCommandLen, 0);
  std::copy(cmd.begin(), cmd.end(), command.begin());
  append(out, command);
  uint8_t len[4];
  write_le32(len, static_cast<uint32_t>(m.body.size()));
  out.insert(out.end(), len, len + 4);
  auto sum = v1_checksum(m.body);
  out.insert(out.end(), sum.begin(), sum.end());
  append(out, m.body);
  return out;
}

bool looks_like_v1_version(ByteSpan prefix) {
  static constexpr std::string_view kVersion{"version\0\0\0\0\0", kCommandLen};
  const size_t need = kMagic.size() + kCommandLen;
  const size_t n = std::min(prefix.size(), need);
  for (size_t i = 0; i < n; ++i) {
    uint8_t expect = i < 4 ? kMagic[i] : static_cast<uint8_t>(kVersion[i - 4]);
    if (prefix[i] != expect) return false;
  }
  return n > 0;
}

FirstPayloadClass first_payload_protocol(size_t len) {
  if (len == kV1VersionPayload) return FirstPayloadClass::V1;
  if (len > kV1VersionPayload) return FirstPayloadClass::V2;
  return FirstPayloadClass::V2Ambiguous;
}

FallbackDecision v1_fallback_decision(HandshakePhase phase_at_close, bool c3c) {
  if (phase_at_close == HandshakePhase::KeyExchange && !c3c) return FallbackDecision::RetryV1;
  return FallbackDecision::GiveUp;
}

}  // namespace v2net
