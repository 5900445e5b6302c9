#pragma once

// V2 connection establishment: key exchange (public key + garbage), version
// negotiation (terminator + empty version packet), then application phase.
//
//   initiator -> responder : pub_I, garbage_I
//   responder -> initiator : pub_R, garbage_R, term_R, version_R
//   initiator -> responder : term_I, version_I

#include <v2net/cipher_suite.hpp>
#include <v2net/transport.hpp>

#include <optional>

namespace v2net {

enum class HandshakeError { TerminatorNotFound, MalformedKey, BadVersionPacket, Failed };
std::string_view to_string(HandshakeError e);

struct HandshakeConfig {
  const crypto::KeyExchange* backend = nullptr;  // default backend when null
  size_t max_garbage = 512;
  size_t terminator_search_limit = 4096;
  /// Decoy packets appended after the version packet.
  size_t decoys = 0;
  size_t decoy_len = 0;
  /// Forces the garbage length (tests); otherwise drawn uniformly.
  std::optional<size_t> garbage_len;
};

class V2Handshake {
 public:
  V2Handshake(Role role, Rng& rng, HandshakeConfig config = {});

  Role role() const { return m_role; }
  HandshakePhase phase() const { return m_phase; }
  bool complete() const { return m_phase == HandshakePhase::Application; }
  bool failed() const { return m_failed; }

  /// Bytes to send when the connection opens (initiator: public key and
  /// garbage; responder: nothing).
  Bytes start();
  /// Feeds received bytes; returns bytes to send in reply (possibly empty).
  Expected<Bytes, HandshakeError> step(ByteSpan incoming);

  const crypto::KeyPair& local_keys() const { return m_keys; }
  const crypto::KeyMaterial* key_material() const { return m_km ? &*m_km : nullptr; }
  std::optional<crypto::SessionId> session_id() const;
  size_t garbage_sent() const { return m_garbage.size(); }

  /// Valid once complete(); moves the cipher state out.
  TransportSession take_session();
  /// Bytes received after the peer's version packet (application data that
  /// arrived in the same segment).
  Bytes take_leftover() { return std::exchange(m_buffer, {}); }

 private:
  Expected<Bytes, HandshakeError> fail(HandshakeError e);
  bool try_read_pubkey();
  Expected<bool, HandshakeError> try_find_terminator();
  Expected<bool, HandshakeError> try_read_version_packet();
  Bytes terminator_and_version();

  Role m_role;
  HandshakeConfig m_cfg;
  const crypto::KeyExchange* m_backend;
  HandshakePhase m_phase = HandshakePhase::KeyExchange;
  bool m_failed = false;
  bool m_started = false;
  bool m_have_remote_pub = false;
  bool m_terminator_seen = false;
  bool m_sent_version = false;

  crypto::KeyPair m_keys;
  crypto::PubEncoding m_remote_pub{};
  Bytes m_garbage;
  Bytes m_remote_garbage;
  std::optional<crypto::KeyMaterial> m_km;
  std::optional<TransportSession> m_session;
  Bytes m_buffer;
};

}  // namespace v2net
