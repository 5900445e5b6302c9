#include <catch_amalgamated.hpp>

#include <v2net/cipher_suite.hpp>

#include <fstream>
#include <set>
#include <sstream>

using namespace v2net;
using namespace v2net::crypto;

namespace {

std::vector<std::vector<std::string>> load_records(const std::string& name) {
  std::ifstream in(std::string(V2NET_TEST_DATA) + "/" + name);
  REQUIRE(in.good());
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::vector<std::string> fields;
    std::string f;
    while (ss >> f) fields.push_back(f);
    out.push_back(fields);
  }
  return out;
}

template <size_t N>
std::array<uint8_t, N> arr(const Bytes& b) {
  REQUIRE(b.size() == N);
  std::array<uint8_t, N> a{};
  std::copy(b.begin(), b.end(), a.begin());
  return a;
}

Key fixed_key(uint8_t fill) {
  Key k;
  k.fill(fill);
  return k;
}

}  // namespace

TEST_CASE("AEAD matches reference vectors") {
  auto records = load_records("aead_vectors.txt");
  REQUIRE(records.size() >= 9);
  for (const auto& r : records) {
    REQUIRE(r.size() == 5);
    auto key = arr<32>(from_hex(r[0]));
    auto nonce = arr<12>(from_hex(r[1]));
    Bytes aad = from_hex(r[2]);
    Bytes pt = from_hex(r[3]);
    Bytes expected = from_hex(r[4]);
    CHECK(to_hex(aead_encrypt(key, nonce, aad, pt)) == r[4]);
    auto back = aead_decrypt(key, nonce, aad, expected);
    REQUIRE(back);
    CHECK(*back == pt);
  }
}

TEST_CASE("ChaCha20 keystream matches reference vectors") {
  auto records = load_records("chacha20_vectors.txt");
  REQUIRE(!records.empty());
  for (const auto& r : records) {
    auto key = arr<32>(from_hex(r[0]));
    auto nonce = arr<12>(from_hex(r[1]));
    uint32_t counter = static_cast<uint32_t>(std::stoul(r[2]));
    Bytes expected = from_hex(r[3]);
    Bytes ks(expected.size());
    chacha20_keystream(key, nonce, counter, ks);
    CHECK(ks == expected);
  }
}

TEST_CASE("HKDF-SHA256 matches RFC 5869 case 1") {
  Bytes ikm(22, 0x0b);
  Bytes salt = from_hex("000102030405060708090a0b0c");
  Bytes info = from_hex("f0f1f2f3f4f5f6f7f8f9");
  auto okm = hkdf_sha256(ikm, salt, info, 42);
  CHECK(to_hex(okm) ==
        "3cb25f25faacd57a90434f64d0362f2a2d2d0a90cf1a5a4c5db02d56ecc4c5bf34007208d5b887185865");
}

TEST_CASE("key exchange is symmetric and deterministic") {
  Rng rng(1);
  for (const KeyExchange* kx : {&default_key_exchange(), find_key_exchange("x25519")}) {
    REQUIRE(kx);
    auto a = kx->generate(rng);
    auto b = kx->generate(rng);
    auto s1 = key_exchange(*kx, a, b.public_encoding);
    auto s2 = key_exchange(*kx, b, a.public_encoding);
    CHECK(s1 == s2);
    CHECK(key_exchange(*kx, a, b.public_encoding) == s1);
  }
}

TEST_CASE("key exchange rejects wrong-length encodings") {
  Rng rng(2);
  auto a = default_key_exchange().generate(rng);
  Bytes short_pub(63, 1);
  CHECK_THROWS_AS(default_key_exchange().exchange(a, short_pub), MalformedKeyError);
  Bytes long_pub(65, 1);
  CHECK_THROWS_AS(default_key_exchange().exchange(a, long_pub), MalformedKeyError);
}

TEST_CASE("independent sessions yield distinct secrets") {
  Rng rng(1000);
  const auto& kx = default_key_exchange();
  std::set<std::string> seen;
  for (int i = 0; i < 1000; ++i) {
    auto a = kx.generate(rng);
    auto b = kx.generate(rng);
    seen.insert(to_hex(kx.exchange(a, b.public_encoding).bytes));
  }
  CHECK(seen.size() == 1000);
}

TEST_CASE("key material shape and determinism") {
  Rng rng(3);
  auto a = default_key_exchange().generate(rng);
  auto b = default_key_exchange().generate(rng);
  auto s = default_key_exchange().exchange(a, b.public_encoding);
  auto km1 = derive_key_material(s, a.public_encoding, b.public_encoding);
  auto km2 = derive_key_material(s, a.public_encoding, b.public_encoding);
  CHECK(km1 == km2);
  CHECK(km1.initiator_garbage_terminator.size() == 16);
  CHECK(km1.responder_garbage_terminator.size() == 16);
  CHECK(km1.initiator_length_key.size() == 32);
  CHECK(km1.initiator_garbage_terminator != km1.responder_garbage_terminator);

  std::set<std::string> outputs{to_hex(km1.initiator_length_key),  to_hex(km1.responder_length_key),
                                to_hex(km1.initiator_content_key), to_hex(km1.responder_content_key),
                                to_hex(km1.session_id),            to_hex(km1.initiator_garbage_terminator),
                                to_hex(km1.responder_garbage_terminator)};
  CHECK(outputs.size() == 7);

  // Both sides derive the same material.
  auto s_b = default_key_exchange().exchange(b, a.public_encoding);
  CHECK(derive_key_material(s_b, a.public_encoding, b.public_encoding) == km1);
}

TEST_CASE("one flipped secret bit changes every derived output") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    SharedSecret s{rng.bytes<32>()};
    auto pa = rng.bytes<64>();
    auto pb = rng.bytes<64>();
    auto km = derive_key_material(s, pa, pb);
    SharedSecret t = s;
    t.bytes[rng.uniform(32)] ^= static_cast<uint8_t>(1u << rng.uniform(8));
    auto km2 = derive_key_material(t, pa, pb);
    CHECK(km.initiator_length_key != km2.initiator_length_key);
    CHECK(km.responder_length_key != km2.responder_length_key);
    CHECK(km.initiator_content_key != km2.initiator_content_key);
    CHECK(km.responder_content_key != km2.responder_content_key);
    CHECK(km.session_id != km2.session_id);
    CHECK(km.initiator_garbage_terminator != km2.initiator_garbage_terminator);
    CHECK(km.responder_garbage_terminator != km2.responder_garbage_terminator);
  }
}

TEST_CASE("length cipher roundtrip and position dependence") {
  CipherStream enc(fixed_key(7)), dec(fixed_key(7));
  for (uint32_t len : {0u, 1u, 9u, 33u, 4096u, kMaxEncodableLength}) {
    auto c = enc.encrypt_length(len);
    CHECK(dec.decrypt_length(c) == len);
  }
  CHECK_THROWS_AS(enc.encrypt_length(kMaxEncodableLength + 1), EncodingError);

  CipherStream s(fixed_key(9));
  auto c0 = s.encrypt_length(0);
  auto c1 = s.encrypt_length(0);
  CHECK(c0 != c1);
}

TEST_CASE("stored length ciphertext decodes wrongly at a later position") {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    Key key = rng.bytes<32>();
    CipherStream enc(key), dec(key);
    const uint32_t len = 9;
    const size_t i = rng.uniform(50);
    const size_t j = i + 1 + rng.uniform(50);
    std::array<uint8_t, 3> stored{};
    for (size_t p = 0; p <= i; ++p) {
      auto c = enc.encrypt_length(len);
      dec.decrypt_length(c);
      if (p == i) stored = c;
    }
    for (size_t p = i + 1; p < j; ++p) dec.decrypt_length(enc.encrypt_length(len));
    CHECK(dec.decrypt_length(stored) != len);
  }
}

TEST_CASE("seal/open roundtrip, tamper detection and short input") {
  Rng rng(6);
  CipherStream a(fixed_key(1)), b(fixed_key(1));
  for (size_t n : {0, 1, 15, 16, 17, 1000, 65536}) {
    Bytes m(n);
    rng.fill(m);
    Bytes aad(n % 7);
    auto ct = a.seal(aad, m);
    CHECK(ct.size() == n + kTagLen);
    auto pt = b.open(aad, ct);
    REQUIRE(pt);
    CHECK(*pt == m);
  }

  CipherStream c(fixed_key(2)), d(fixed_key(2));
  auto ct = c.seal({}, Bytes(32, 5));
  ct[rng.uniform(ct.size())] ^= 0x10;
  auto r = d.open({}, ct);
  REQUIRE(!r);
  CHECK(r.error() == OpenError::AuthFailure);
  CHECK(!d.usable());
  auto again = d.open({}, c.seal({}, Bytes(1, 0)));
  CHECK(!again);

  CipherStream e(fixed_key(3));
  auto short_in = e.open({}, Bytes(15, 0));
  REQUIRE(!short_in);
  CHECK(short_in.error() == OpenError::TooShort);
}

TEST_CASE("a ciphertext opens exactly once") {
  CipherStream a(fixed_key(4)), b(fixed_key(4));
  auto ct = a.seal({}, Bytes{1, 2, 3});
  REQUIRE(b.open({}, ct));
  auto replay = b.open({}, ct);
  REQUIRE(!replay);
  CHECK(replay.error() == OpenError::AuthFailure);
}

TEST_CASE("rekey happens at 224 packets, not 223") {
  CipherStream s(fixed_key(8));
  const Key initial = s.key();
  for (int i = 0; i < 223; ++i) s.seal({}, {});
  CHECK(s.key() == initial);
  CHECK(s.packets_since_rekey() == 223);
  s.seal({}, {});
  CHECK(s.key() != initial);
  CHECK(s.packets_since_rekey() == 0);
  CHECK(s.block_counter() == 224);
  CHECK(s.key() == sha256(initial, Bytes{'v', '2', 'n', 'e', 't', '/', 'r', 'e', 'k', 'e', 'y'}));
}

TEST_CASE("peers rekey in lockstep over many packets") {
  Rng rng(7);
  Key k = rng.bytes<32>();
  CipherStream send_len(k), send_body(sha256(k)), recv_len(k), recv_body(sha256(k));
  uint64_t last_counter = 0;
  for (int i = 0; i < 1000; ++i) {
    Bytes m(rng.uniform(100));
    rng.fill(m);
    auto lc = send_len.encrypt_length(static_cast<uint32_t>(m.size()));
    auto ct = send_body.seal({}, m);
    REQUIRE(recv_len.decrypt_length(lc) == m.size());
    auto pt = recv_body.open({}, ct);
    REQUIRE(pt);
    REQUIRE(*pt == m);
    CHECK(recv_body.block_counter() > last_counter);
    last_counter = recv_body.block_counter();
    CHECK(recv_body.packets_since_rekey() < kRekeyInterval);
  }
  CHECK(recv_body.rekey_count() == 4);
  CHECK(send_len.key() == recv_len.key());
}
