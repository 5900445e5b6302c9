#pragma once

// V2 packet codec, V1 plaintext framing and the small decision rules the
// downgrade analysis relies on.

#include <v2net/cipher_suite.hpp>
#include <v2net/messages.hpp>

#include <optional>
#include <string_view>
#include <vector>

namespace v2net {

enum class Protocol { V1, V2 };
std::string_view to_string(Protocol p);

enum class Role { Initiator, Responder };

/// Bytes a V2 packet adds around its contents: 3 length + 1 flags + 16 tag.
inline constexpr size_t kPacketOverhead = crypto::kLengthFieldLen + 1 + crypto::kTagLen;
inline constexpr uint8_t kIgnoreBit = 0x80;
inline constexpr size_t kV1VersionPayload = kV1HeaderLen + kVersionBodyLen;  // 126

struct PacketContents {
  uint8_t flags = 0;
  std::optional<TypeId> type;  // absent for empty (version negotiation) packets
  Bytes message;

  bool ignore() const { return (flags & kIgnoreBit) != 0; }
  /// Type id bytes followed by the message; this is what the length field counts.
  Bytes serialize() const;
  static std::optional<PacketContents> parse(uint8_t flags, ByteSpan contents);
  static PacketContents from_message(const Message& m);
  static PacketContents decoy(size_t filler_len);
  std::optional<Message> to_message() const;
};

struct WirePacket {
  std::array<uint8_t, crypto::kLengthFieldLen> encrypted_length{};
  Bytes ciphertext;  // encrypted flags and contents, then the tag

  size_t size() const { return encrypted_length.size() + ciphertext.size(); }
  Bytes bytes() const;
};

enum class TransportError { TooLarge, AuthFailure, Malformed, Oversize };
std::string_view to_string(TransportError e);

/// One endpoint of an established connection. V2 sessions hold the send and
/// receive cipher streams; V1 sessions are stateless plaintext framing.
class TransportSession {
 public:
  static TransportSession v1();
  static TransportSession v2(const crypto::KeyMaterial& km, Role role);

  Protocol protocol() const { return m_protocol; }

  /// V2 only. Throws EncodingError if the contents exceed 2^24-1 bytes.
  WirePacket encode_packet(const PacketContents& contents, ByteSpan aad = {});
  /// V2 only. `wire` must be exactly one packet as framed by the sender.
  Expected<PacketContents, TransportError> decode_packet(ByteSpan wire, ByteSpan aad = {});

  /// Serializes messages back to back; the result is written as one segment.
  Bytes encode_messages(const std::vector<Message>& msgs);
  Bytes encode_message(const Message& m) { return encode_messages({m}); }
  /// Incremental V2 read: removes one complete packet from the front of
  /// `buffer`, or returns nullopt if more bytes are needed. The decrypted
  /// length of a partial packet is remembered between calls.
  Expected<std::optional<PacketContents>, TransportError> read_packet(Bytes& buffer, ByteSpan aad = {});
  /// Decodes every packet in a segment. Decoys are dropped and counted.
  Expected<std::vector<Message>, TransportError> decode_segment(ByteSpan segment);

  bool must_disconnect() const { return m_must_disconnect; }
  uint64_t decoys_received() const { return m_decoys_received; }
  const crypto::CipherStream* send_length_stream() const { return m_send_len ? &*m_send_len : nullptr; }
  const crypto::CipherStream* recv_length_stream() const { return m_recv_len ? &*m_recv_len : nullptr; }

 private:
  TransportSession() = default;
  Expected<PacketContents, TransportError> fail(TransportError e);

  Protocol m_protocol = Protocol::V1;
  std::optional<crypto::CipherStream> m_send_len, m_send_content, m_recv_len, m_recv_content;
  std::optional<uint32_t> m_pending_len;
  bool m_must_disconnect = false;
  uint64_t m_decoys_received = 0;
};

/// V1 framing: magic, 12-byte command, LE32 length, 4-byte checksum, body.
Bytes v1_frame(const Message& m);
/// True if the bytes start like a V1 VERSION header (magic + "version").
bool looks_like_v1_version(ByteSpan prefix);

enum class FirstPayloadClass { V1, V2, V2Ambiguous };
/// Classifies the initiator's first transmission by size alone.
FirstPayloadClass first_payload_protocol(size_t first_payload_len);

enum class HandshakePhase { KeyExchange, VersionNegotiation, Application };
std::string_view to_string(HandshakePhase p);

enum class FallbackDecision { RetryV1, GiveUp };
/// Initiator side: retry with V1 only when the peer closed during key
/// exchange and the no-retry countermeasure is off.
FallbackDecision v1_fallback_decision(HandshakePhase phase_at_close, bool c3c);

}  // namespace v2net
