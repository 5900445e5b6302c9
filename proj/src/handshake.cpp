#include <v2net/handshake.hpp>

#include <algorithm>

namespace v2net {

std::string_view to_string(HandshakeError e) {
  switch (e) {
    case HandshakeError::TerminatorNotFound: return "terminator-not-found";
    case HandshakeError::MalformedKey: return "malformed-key";
    case HandshakeError::BadVersionPacket: return "bad-version-packet";
    case HandshakeError::Failed: return "handshake-failed";
  }
  return "unknown";
}

V2Handshake::V2Handshake(Role role, Rng& rng, HandshakeConfig config)
    : m_role(role), m_cfg(config), m_backend(config.backend ? config.backend : &crypto::default_key_exchange()) {
  // An initiator's key must never be mistaken for a V1 VERSION header.
  do {
    m_keys = m_backend->generate(rng);
  } while (role == Role::Initiator && looks_like_v1_version(m_keys.public_encoding));

  size_t glen = 0;
  if (m_cfg.garbage_len) {
    glen = *m_cfg.garbage_len;
  } else {
    // Redraw the one length at which the first flight would be exactly as
    // long as a V1 VERSION message.
    do {
      glen = static_cast<size_t>(rng.uniform(m_cfg.max_garbage + 1));
    } while (role == Role::Initiator && crypto::kPubEncodingLen + glen == kV1VersionPayload);
  }
  m_garbage.resize(glen);
  rng.fill(m_garbage);
}

std::optional<crypto::SessionId> V2Handshake::session_id() const {
  if (!m_km) return std::nullopt;
  return m_km->session_id;
}

Bytes V2Handshake::start() {
  m_started = true;
  if (m_role == Role::Responder) return {};
  Bytes out(m_keys.public_encoding.begin(), m_keys.public_encoding.end());
  append(out, m_garbage);
  return out;
}

Expected<Bytes, HandshakeError> V2Handshake::fail(HandshakeError e) {
  m_failed = true;
  return e;
}

TransportSession V2Handshake::take_session() {
  if (!complete() || !m_session) throw std::logic_error("handshake not complete");
  TransportSession s = std::move(*m_session);
  m_session.reset();
  return s;
}

bool V2Handshake::try_read_pubkey() {
  if (m_buffer.size() < crypto::kPubEncodingLen) return false;
  std::copy_n(m_buffer.begin(), crypto::kPubEncodingLen, m_remote_pub.begin());
  m_buffer.erase(m_buffer.begin(), m_buffer.begin() + crypto::kPubEncodingLen);
  auto secret = m_backend->exchange(m_keys, m_remote_pub);
  const bool init = m_role == Role::Initiator;
  m_km = crypto::derive_key_material(secret, init ? m_keys.public_encoding : m_remote_pub,
                                     init ? m_remote_pub : m_keys.public_encoding);
  m_session = TransportSession::v2(*m_km, m_role);
  m_have_remote_pub = true;
  m_phase = HandshakePhase::VersionNegotiation;
  return true;
}

Expected<bool, HandshakeError> V2Handshake::try_find_terminator() {
  const auto& term = m_role == Role::Initiator ? m_km->responder_garbage_terminator : m_km->initiator_garbage_terminator;
  auto it = std::search(m_buffer.begin(), m_buffer.end(), term.begin(), term.end());
  if (it == m_buffer.end()) {
    if (m_buffer.size() >= m_cfg.terminator_search_limit + crypto::kTerminatorLen) {
      return HandshakeError::TerminatorNotFound;
    }
    return false;
  }
  const size_t pos = static_cast<size_t>(it - m_buffer.begin());
  if (pos > m_cfg.terminator_search_limit) return HandshakeError::TerminatorNotFound;
  m_remote_garbage.assign(m_buffer.begin(), it);
  m_buffer.erase(m_buffer.begin(), it + crypto::kTerminatorLen);
  m_terminator_seen = true;
  return true;
}

Expected<bool, HandshakeError> V2Handshake::try_read_version_packet() {
  auto r = m_session->read_packet(m_buffer, m_remote_garbage);
  if (!r) return HandshakeError::BadVersionPacket;
  if (!r->has_value()) return false;
  if ((*r)->ignore()) return HandshakeError::BadVersionPacket;
  return true;
}

Bytes V2Handshake::terminator_and_version() {
  const auto& term = m_role == Role::Initiator ? m_km->initiator_garbage_terminator : m_km->responder_garbage_terminator;
  Bytes out(term.begin(), term.end());
  append(out, m_session->encode_packet(PacketContents{}, m_garbage).bytes());
  for (size_t i = 0; i < m_cfg.decoys; ++i) append(out, m_session->encode_packet(PacketContents::decoy(m_cfg.decoy_len)).bytes());
  m_sent_version = true;
  return out;
}

Expected<Bytes, HandshakeError> V2Handshake::step(ByteSpan incoming) {
  if (m_failed) return HandshakeError::Failed;
  if (complete()) {
    append(m_buffer, incoming);
    return Bytes{};
  }
  append(m_buffer, incoming);
  Bytes out;

  if (!m_have_remote_pub) {
    try {
      if (!try_read_pubkey()) return out;
    } catch (const crypto::MalformedKeyError&) {
      return fail(HandshakeError::MalformedKey);
    }
    if (m_role == Role::Responder) {
      out.assign(m_keys.public_encoding.begin(), m_keys.public_encoding.end());
      append(out, m_garbage);
      append(out, terminator_and_version());
    }
  }

  if (!m_terminator_seen) {
    auto found = try_find_terminator();
    if (!found) return fail(found.error());
    if (!*found) return out;
  }

  auto version = try_read_version_packet();
  if (!version) return fail(version.error());
  if (!*version) return out;

  if (!m_sent_version) append(out, terminator_and_version());
  m_phase = HandshakePhase::Application;
  return out;
}

}  // namespace v2net
