#pragma once

// Symmetric layer of the encrypted transport: the ChaCha20 length cipher, the
// ChaCha20-Poly1305 packet cipher, HKDF-SHA256 key schedule and a pluggable
// key exchange.

#include <v2net/common.hpp>

#include <array>
#include <memory>
#include <optional>
#include <string_view>

namespace v2net::crypto {

constexpr size_t kKeyLen = 32;
constexpr size_t kTagLen = 16;
constexpr size_t kNonceLen = 12;
constexpr size_t kTerminatorLen = 16;
constexpr size_t kPubEncodingLen = 64;
constexpr size_t kLengthFieldLen = 3;
constexpr uint32_t kRekeyInterval = 224;
constexpr uint32_t kMaxEncodableLength = (1u << 24) - 1;

using Key = std::array<uint8_t, kKeyLen>;
using Nonce = std::array<uint8_t, kNonceLen>;
using PubEncoding = std::array<uint8_t, kPubEncodingLen>;
using Terminator = std::array<uint8_t, kTerminatorLen>;
using SessionId = std::array<uint8_t, 32>;

/// HKDF labels shared by both simulated endpoints. These follow the naming
/// used by the reference client but no bit-compatibility with it is claimed.
namespace labels {
inline constexpr std::string_view kSalt = "bitcoin_v2_shared_secret";
inline constexpr std::array<uint8_t, 4> kNetworkMagic{0xf9, 0xbe, 0xb4, 0xd9};
inline constexpr std::string_view kInitiatorLength = "initiator_L";
inline constexpr std::string_view kInitiatorContent = "initiator_P";
inline constexpr std::string_view kResponderLength = "responder_L";
inline constexpr std::string_view kResponderContent = "responder_P";
inline constexpr std::string_view kGarbageTerminators = "garbage_terminators";
inline constexpr std::string_view kSessionId = "session_id";
inline constexpr std::string_view kSharedSecretTag = "bip324_ellswift_xonly_ecdh";
inline constexpr std::string_view kRekey = "v2net/rekey";
}  // namespace labels

class CryptoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedKeyError : public CryptoError {
 public:
  using CryptoError::CryptoError;
};

class EncodingError : public CryptoError {
 public:
  using CryptoError::CryptoError;
};

struct SharedSecret {
  std::array<uint8_t, 32> bytes{};
  bool operator==(const SharedSecret&) const = default;
};

struct KeyPair {
  std::array<uint8_t, 32> private_key{};
  PubEncoding public_encoding{};
};

struct KeyMaterial {
  Key initiator_length_key{};
  Key responder_length_key{};
  Key initiator_content_key{};
  Key responder_content_key{};
  SessionId session_id{};
  Terminator initiator_garbage_terminator{};
  Terminator responder_garbage_terminator{};
  bool operator==(const KeyMaterial&) const = default;
};

/// Key agreement backend. Implementations must be symmetric: exchange(a, pub_b)
/// equals exchange(b, pub_a).
class KeyExchange {
 public:
  virtual ~KeyExchange() = default;
  virtual std::string_view name() const = 0;
  virtual KeyPair generate(Rng& rng) const = 0;
  /// Throws MalformedKeyError on a wrong-length or unparseable encoding.
  virtual SharedSecret exchange(const KeyPair& local, ByteSpan remote_public) const = 0;
};

/// Deterministic stand-in for the curve exchange: Diffie-Hellman in the
/// multiplicative group modulo 2^61-1. Commutative and cheap, not secure.
class TestKeyExchange final : public KeyExchange {
 public:
  std::string_view name() const override { return "test-dh61"; }
  KeyPair generate(Rng& rng) const override;
  SharedSecret exchange(const KeyPair& local, ByteSpan remote_public) const override;
};

/// X25519 via libsodium; the 32-byte point is padded to the 64-byte wire size
/// with random bytes.
class X25519KeyExchange final : public KeyExchange {
 public:
  std::string_view name() const override { return "x25519"; }
  KeyPair generate(Rng& rng) const override;
  SharedSecret exchange(const KeyPair& local, ByteSpan remote_public) const override;
};

const KeyExchange& default_key_exchange();
/// Looks a backend up by name(); returns nullptr if unknown.
const KeyExchange* find_key_exchange(std::string_view name);

inline SharedSecret key_exchange(const KeyExchange& backend, const KeyPair& local, ByteSpan remote_public) {
  return backend.exchange(local, remote_public);
}

KeyMaterial derive_key_material(const SharedSecret& secret, const PubEncoding& initiator_pub,
                                const PubEncoding& responder_pub);

std::array<uint8_t, 32> hmac_sha256(ByteSpan key, ByteSpan data);
Bytes hkdf_sha256(ByteSpan ikm, ByteSpan salt, ByteSpan info, size_t length);

/// Raw ChaCha20 (96-bit nonce, 32-bit block counter) keystream.
void chacha20_keystream(const Key& key, const Nonce& nonce, uint32_t initial_counter, std::span<uint8_t> out);

/// ChaCha20-Poly1305 (IETF). Output is ciphertext followed by the 16-byte tag.
Bytes aead_encrypt(const Key& key, const Nonce& nonce, ByteSpan aad, ByteSpan plaintext);
std::optional<Bytes> aead_decrypt(const Key& key, const Nonce& nonce, ByteSpan aad, ByteSpan ciphertext_and_tag);

enum class OpenError { AuthFailure, TooShort, Unusable };
std::string_view to_string(OpenError e);

/// One direction of one cipher (length or content) of a session. Every
/// length or packet operation counts as one packet; after kRekeyInterval
/// packets the key is replaced by a hash of itself.
///
/// The length cipher consumes a continuous keystream, three bytes per
/// packet, so a length ciphertext only decodes at the position where it was
/// produced. The packet cipher uses (packet index, rekey epoch) as nonce.
class CipherStream {
 public:
  explicit CipherStream(const Key& key) : m_key(key) {}

  std::array<uint8_t, kLengthFieldLen> encrypt_length(uint32_t length);
  uint32_t decrypt_length(ByteSpan encrypted);

  Bytes seal(ByteSpan aad, ByteSpan plaintext);
  /// On failure the stream is flagged unusable and every later open fails.
  Expected<Bytes, OpenError> open(ByteSpan aad, ByteSpan ciphertext_and_tag);

  /// Rotates the key when the packet count reaches kRekeyInterval. Called
  /// after each packet; idempotent otherwise.
  void maybe_rekey();

  const Key& key() const { return m_key; }
  /// Packets processed over the stream's lifetime; never decreases.
  uint64_t block_counter() const { return m_total; }
  uint32_t packets_since_rekey() const { return m_packets; }
  uint64_t rekey_count() const { return m_epoch; }
  bool usable() const { return m_usable; }

 private:
  Nonce packet_nonce() const;
  void finish_packet();

  Key m_key;
  uint64_t m_epoch = 0;
  uint32_t m_packets = 0;
  uint64_t m_total = 0;
  bool m_usable = true;
};

}  // namespace v2net::crypto
