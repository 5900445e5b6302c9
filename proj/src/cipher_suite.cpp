#include <v2net/cipher_suite.hpp>

#include <sodium.h>

#include <algorithm>
#include <cstring>

namespace v2net::crypto {

namespace {

struct SodiumInit {
  SodiumInit() {
    if (sodium_init() < 0) throw CryptoError("libsodium initialisation failed");
  }
};

void ensure_sodium() { static SodiumInit init; }

ByteSpan as_bytes(std::string_view s) { return {reinterpret_cast<const uint8_t*>(s.data()), s.size()}; }

// Multiplicative group modulo the Mersenne prime 2^61 - 1.
constexpr uint64_t kToyPrime = (uint64_t{1} << 61) - 1;
constexpr uint64_t kToyGenerator = 37;

uint64_t mulmod(uint64_t a, uint64_t b) {
  unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  uint64_t lo = static_cast<uint64_t>(p & kToyPrime);
  uint64_t hi = static_cast<uint64_t>(p >> 61);
  uint64_t r = lo + hi;
  if (r >= kToyPrime) r -= kToyPrime;
  return r;
}

uint64_t powmod(uint64_t base, uint64_t exp) {
  uint64_t result = 1;
  while (exp) {
    if (exp & 1) result = mulmod(result, base);
    base = mulmod(base, base);
    exp >>= 1;
  }
  return result;
}

uint64_t toy_scalar(const std::array<uint8_t, 32>& priv) {
  uint64_t s = read_le64(priv.data()) % (kToyPrime - 1);
  return s < 2 ? s + 2 : s;
}

/// Hash of the exchange output with both encodings in canonical order, so the
/// result does not depend on which side computes it.
SharedSecret finish_secret(std::string_view tag, ByteSpan raw, const PubEncoding& a, ByteSpan b) {
  ByteSpan lo = a, hi = b;
  if (std::lexicographical_compare(hi.begin(), hi.end(), lo.begin(), lo.end())) std::swap(lo, hi);
  Bytes buf;
  append(buf, as_bytes(tag));
  append(buf, raw);
  append(buf, lo);
  append(buf, hi);
  return SharedSecret{sha256(buf)};
}

void check_encoding(ByteSpan remote) {
  if (remote.size() != kPubEncodingLen) {
    throw MalformedKeyError("public key encoding must be 64 bytes, got " + std::to_string(remote.size()));
  }
}

Key expand32(ByteSpan prk, std::string_view info) {
  // Single-block HKDF-Expand: T(1) = HMAC(PRK, info || 0x01).
  Bytes msg(info.begin(), info.end());
  msg.push_back(0x01);
  return hmac_sha256(prk, msg);
}

}  // namespace

KeyPair TestKeyExchange::generate(Rng& rng) const {
  KeyPair kp;
  kp.private_key = rng.bytes<32>();
  uint64_t element = powmod(kToyGenerator, toy_scalar(kp.private_key));
  write_le64(kp.public_encoding.data(), element);
  // Remaining 56 bytes are filler derived from the private key.
  auto pad0 = sha256(kp.private_key, as_bytes("pad0"));
  auto pad1 = sha256(kp.private_key, as_bytes("pad1"));
  std::copy(pad0.begin(), pad0.end(), kp.public_encoding.begin() + 8);
  std::copy(pad1.begin(), pad1.begin() + 24, kp.public_encoding.begin() + 40);
  return kp;
}

SharedSecret TestKeyExchange::exchange(const KeyPair& local, ByteSpan remote_public) const {
  check_encoding(remote_public);
  uint64_t element = read_le64(remote_public.data());
  if (element <= 1 || element >= kToyPrime) throw MalformedKeyError("group element out of range");
  uint64_t shared = powmod(element, toy_scalar(local.private_key));
  std::array<uint8_t, 8> raw{};
  write_le64(raw.data(), shared);
  return finish_secret("v2net/test-dh61", raw, local.public_encoding, remote_public);
}

KeyPair X25519KeyExchange::generate(Rng& rng) const {
  ensure_sodium();
  KeyPair kp;
  kp.private_key = rng.bytes<32>();
  crypto_scalarmult_base(kp.public_encoding.data(), kp.private_key.data());
  rng.fill(std::span(kp.public_encoding).subspan(32));
  return kp;
}

SharedSecret X25519KeyExchange::exchange(const KeyPair& local, ByteSpan remote_public) const {
  ensure_sodium();
  check_encoding(remote_public);
  std::array<uint8_t, 32> shared{};
  if (crypto_scalarmult(shared.data(), local.private_key.data(), remote_public.data()) != 0) {
    throw MalformedKeyError("x25519 point rejected");
  }
  return finish_secret("v2net/x25519", shared, local.public_encoding, remote_public);
}

const KeyExchange& default_key_exchange() {
  static const TestKeyExchange backend;
  return backend;
}

const KeyExchange* find_key_exchange(std::string_view name) {
  static const X25519KeyExchange x25519;
  if (name == default_key_exchange().name()) return &default_key_exchange();
  if (name == x25519.name()) return &x25519;
  return nullptr;
}

std::array<uint8_t, 32> hmac_sha256(ByteSpan key, ByteSpan data) {
  ensure_sodium();
  crypto_auth_hmacsha256_state st;
  crypto_auth_hmacsha256_init(&st, key.data(), key.size());
  crypto_auth_hmacsha256_update(&st, data.data(), data.size());
  std::array<uint8_t, 32> out{};
  crypto_auth_hmacsha256_final(&st, out.data());
  return out;
}

Bytes hkdf_sha256(ByteSpan ikm, ByteSpan salt, ByteSpan info, size_t length) {
  if (length > 255 * 32) throw CryptoError("HKDF output too long");
  Bytes zero_salt(32, 0);
  auto prk = hmac_sha256(salt.empty() ? ByteSpan(zero_salt) : salt, ikm);
  Bytes out;
  Bytes block;
  for (uint8_t i = 1; out.size() < length; ++i) {
    Bytes msg = block;
    append(msg, info);
    msg.push_back(i);
    auto t = hmac_sha256(prk, msg);
    block.assign(t.begin(), t.end());
    append(out, block);
  }
  out.resize(length);
  return out;
}

KeyMaterial derive_key_material(const SharedSecret& secret, const PubEncoding& initiator_pub,
                                const PubEncoding& responder_pub) {
  Bytes ikm;
  append(ikm, as_bytes(labels::kSharedSecretTag));
  append(ikm, initiator_pub);
  append(ikm, responder_pub);
  append(ikm, secret.bytes);
  auto ikm_hash = sha256(ikm);

  Bytes salt(labels::kSalt.begin(), labels::kSalt.end());
  append(salt, labels::kNetworkMagic);
  auto prk = hmac_sha256(salt, ikm_hash);

  KeyMaterial km;
  km.initiator_length_key = expand32(prk, labels::kInitiatorLength);
  km.initiator_content_key = expand32(prk, labels::kInitiatorContent);
  km.responder_length_key = expand32(prk, labels::kResponderLength);
  km.responder_content_key = expand32(prk, labels::kResponderContent);
  Key terminators = expand32(prk, labels::kGarbageTerminators);
  std::copy_n(terminators.begin(), kTerminatorLen, km.initiator_garbage_terminator.begin());
  std::copy_n(terminators.end() - kTerminatorLen, kTerminatorLen, km.responder_garbage_terminator.begin());
  km.session_id = expand32(prk, labels::kSessionId);
  return km;
}

void chacha20_keystream(const Key& key, const Nonce& nonce, uint32_t initial_counter, std::span<uint8_t> out) {
  ensure_sodium();
  std::fill(out.begin(), out.end(), 0);
  crypto_stream_chacha20_ietf_xor_ic(out.data(), out.data(), out.size(), nonce.data(), initial_counter, key.data());
}

Bytes aead_encrypt(const Key& key, const Nonce& nonce, ByteSpan aad, ByteSpan plaintext) {
  ensure_sodium();
  Bytes out(plaintext.size() + kTagLen);
  unsigned long long out_len = 0;
  crypto_aead_chacha20poly1305_ietf_encrypt(out.data(), &out_len, plaintext.data(), plaintext.size(), aad.data(),
                                            aad.size(), nullptr, nonce.data(), key.data());
  out.resize(out_len);
  return out;
}

std::optional<Bytes> aead_decrypt(const Key& key, const Nonce& nonce, ByteSpan aad, ByteSpan ciphertext_and_tag) {
  ensure_sodium();
  if (ciphertext_and_tag.size() < kTagLen) return std::nullopt;
  Bytes out(ciphertext_and_tag.size() - kTagLen);
  unsigned long long out_len = 0;
  if (crypto_aead_chacha20poly1305_ietf_decrypt(out.data(), &out_len, nullptr, ciphertext_and_tag.data(),
                                                ciphertext_and_tag.size(), aad.data(), aad.size(), nonce.data(),
                                                key.data()) != 0) {
    return std::nullopt;
  }
  out.resize(out_len);
  return out;
}

std::string_view to_string(OpenError e) {
  switch (e) {
    case OpenError::AuthFailure: return "auth-failure";
    case OpenError::TooShort: return "too-short";
    case OpenError::Unusable: return "stream-unusable";
  }
  return "unknown";
}

Nonce CipherStream::packet_nonce() const {
  Nonce n{};
  write_le32(n.data(), m_packets);
  write_le64(n.data() + 4, m_epoch);
  return n;
}

std::array<uint8_t, kLengthFieldLen> CipherStream::encrypt_length(uint32_t length) {
  if (length > kMaxEncodableLength) throw EncodingError("length does not fit in 3 bytes");
  // The keystream for this epoch starts at byte 0 and is consumed three bytes
  // per packet.
  Nonce nonce{};
  write_le64(nonce.data() + 4, m_epoch);
  const uint64_t offset = uint64_t{m_packets} * kLengthFieldLen;
  const uint32_t first_block = static_cast<uint32_t>(offset / 64);
  std::array<uint8_t, 128> ks{};
  chacha20_keystream(m_key, nonce, first_block, ks);
  const size_t at = offset % 64;
  std::array<uint8_t, kLengthFieldLen> out{};
  for (size_t i = 0; i < kLengthFieldLen; ++i) out[i] = static_cast<uint8_t>((length >> (8 * i)) & 0xff) ^ ks[at + i];
  finish_packet();
  return out;
}

uint32_t CipherStream::decrypt_length(ByteSpan encrypted) {
  if (encrypted.size() != kLengthFieldLen) throw EncodingError("length ciphertext must be 3 bytes");
  Nonce nonce{};
  write_le64(nonce.data() + 4, m_epoch);
  const uint64_t offset = uint64_t{m_packets} * kLengthFieldLen;
  std::array<uint8_t, 128> ks{};
  chacha20_keystream(m_key, nonce, static_cast<uint32_t>(offset / 64), ks);
  const size_t at = offset % 64;
  uint32_t v = 0;
  for (size_t i = 0; i < kLengthFieldLen; ++i) v |= uint32_t{static_cast<uint8_t>(encrypted[i] ^ ks[at + i])} << (8 * i);
  finish_packet();
  return v;
}

Bytes CipherStream::seal(ByteSpan aad, ByteSpan plaintext) {
  Bytes out = aead_encrypt(m_key, packet_nonce(), aad, plaintext);
  finish_packet();
  return out;
}

Expected<Bytes, OpenError> CipherStream::open(ByteSpan aad, ByteSpan ciphertext_and_tag) {
  if (!m_usable) return OpenError::Unusable;
  if (ciphertext_and_tag.size() < kTagLen) return OpenError::TooShort;
  auto plain = aead_decrypt(m_key, packet_nonce(), aad, ciphertext_and_tag);
  if (!plain) {
    m_usable = false;
    return OpenError::AuthFailure;
  }
  finish_packet();
  return std::move(*plain);
}

void CipherStream::finish_packet() {
  ++m_packets;
  ++m_total;
  maybe_rekey();
}

void CipherStream::maybe_rekey() {
  if (m_packets < kRekeyInterval) return;
  m_key = sha256(m_key, as_bytes(labels::kRekey));
  m_packets = 0;
  ++m_epoch;
}

}  // namespace v2net::crypto
