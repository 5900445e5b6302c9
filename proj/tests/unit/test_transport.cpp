#include <catch_amalgamated.hpp>

#include <v2net/handshake.hpp>
#include <v2net/transport.hpp>

using namespace v2net;

namespace {

struct SessionPair {
  TransportSession initiator;
  TransportSession responder;
};

SessionPair make_pair(uint64_t seed) {
  Rng rng(seed);
  crypto::KeyMaterial km;
  km.initiator_length_key = rng.bytes<32>();
  km.responder_length_key = rng.bytes<32>();
  km.initiator_content_key = rng.bytes<32>();
  km.responder_content_key = rng.bytes<32>();
  return {TransportSession::v2(km, Role::Initiator), TransportSession::v2(km, Role::Responder)};
}

}  // namespace

TEST_CASE("wire size is contents plus 20") {
  auto p = make_pair(1);
  CHECK(p.initiator.encode_packet(PacketContents{}).size() == 20);
  CHECK(p.initiator.encode_packet(PacketContents::from_message(make_ping(42))).size() == 29);
  CHECK(p.initiator.encode_packet(PacketContents::from_message(make_inv({InvItem{}}))).size() == 58);
  CHECK(p.initiator.encode_packet(PacketContents::from_message(make_inv({InvItem{}, InvItem{}}))).size() == 94);
  CHECK(p.initiator.encode_packet(PacketContents::from_message(make_headers({HeaderInfo{5, 0}}))).size() == 103);

  Rng rng(2);
  for (int i = 0; i < 2000; ++i) {
    PacketContents pc;
    pc.type = TypeId{static_cast<uint16_t>(1 + rng.uniform(28)), false};
    pc.message.resize(rng.uniform(3000));
    CHECK(p.initiator.encode_packet(pc).size() - pc.serialize().size() == kPacketOverhead);
  }
}

TEST_CASE("encode/decode roundtrip for every message type") {
  auto p = make_pair(3);
  std::vector<Message> msgs{make_version(VersionInfo{70016, 9, 1, 2, "/Satoshi:28.0.0/", 10, true}),
                            make_verack(),
                            make_ping(1),
                            make_pong(1),
                            make_inv({InvItem{1, {}}}),
                            make_getdata({InvItem{2, {}}}),
                            make_addr({AddrEntry{1, 9, NetAddress::ipv4(1, 2, 3, 4)}}),
                            make_headers({HeaderInfo{1, 2}}),
                            make_getheaders(7),
                            make_block(3, 1500)};
  for (const auto& m : msgs) {
    auto wire = p.initiator.encode_packet(PacketContents::from_message(m));
    CHECK(wire.size() == v2_wire_size(m));
    auto back = p.responder.decode_packet(wire.bytes());
    REQUIRE(back);
    CHECK(back->to_message() == m);
  }
  auto seg = p.responder.encode_messages(msgs);
  auto decoded = p.initiator.decode_segment(seg);
  REQUIRE(decoded);
  CHECK(*decoded == msgs);
}

TEST_CASE("version payload sizes") {
  auto m = make_version(VersionInfo{70016, 9, 1, 2, "/Satoshi:28.0.0/", 10, true});
  CHECK(m.body.size() == kVersionBodyLen);
  CHECK(v1_frame(m).size() == 126);
  CHECK(v2_wire_size(m) == 125);
  CHECK(v2_wire_size(make_verack()) == 23);
  auto parsed = parse_version(m.body);
  REQUIRE(parsed);
  CHECK(parsed->user_agent == "/Satoshi:28.0.0/");
  CHECK(parsed->services == 9);
}

TEST_CASE("replayed packet is fatal") {
  auto p = make_pair(4);
  auto first = p.initiator.encode_packet(PacketContents::from_message(make_ping(1))).bytes();
  REQUIRE(p.responder.decode_packet(first));
  p.initiator.encode_packet(PacketContents::from_message(make_ping(2)));  // dropped in transit
  auto r = p.responder.decode_packet(first);
  REQUIRE(!r);
  CHECK(r.error() == TransportError::TooLarge);
  CHECK(p.responder.must_disconnect());
}

TEST_CASE("replay over many seeds always forces a disconnect") {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    auto p = make_pair(rng.next());
    const int before = static_cast<int>(rng.uniform(20));
    for (int i = 0; i < before; ++i) {
      REQUIRE(p.responder.decode_segment(p.initiator.encode_message(make_ping(rng.next()))));
    }
    Bytes stored = p.initiator.encode_message(make_ping(rng.next()));
    REQUIRE(p.responder.decode_segment(stored));
    p.initiator.encode_message(make_pong(rng.next()));
    auto r = p.responder.decode_segment(stored);
    CHECK(!r);
    CHECK(p.responder.must_disconnect());
  }
}

TEST_CASE("tampered ciphertext is an auth failure") {
  auto p = make_pair(6);
  auto wire = p.initiator.encode_packet(PacketContents::from_message(make_ping(1))).bytes();
  wire[10] ^= 1;
  auto r = p.responder.decode_packet(wire);
  REQUIRE(!r);
  CHECK(r.error() == TransportError::AuthFailure);
  CHECK(p.responder.must_disconnect());
}

TEST_CASE("decoys are delivered flagged and dropped by the stream decoder") {
  auto p = make_pair(7);
  auto wire = p.initiator.encode_packet(PacketContents::decoy(10));
  auto r = p.responder.decode_packet(wire.bytes());
  REQUIRE(r);
  CHECK(r->ignore());

  Bytes seg = p.initiator.encode_packet(PacketContents::decoy(5)).bytes();
  append(seg, p.initiator.encode_message(make_ping(3)));
  auto msgs = p.responder.decode_segment(seg);
  REQUIRE(msgs);
  REQUIRE(msgs->size() == 1);
  CHECK((*msgs)[0] == make_ping(3));
  CHECK(p.responder.decoys_received() == 1);
}

TEST_CASE("incremental reader handles split packets") {
  auto p = make_pair(8);
  Bytes wire = p.initiator.encode_message(make_inv({InvItem{}, InvItem{}, InvItem{}}));
  Bytes buf;
  std::optional<PacketContents> got;
  for (uint8_t b : wire) {
    buf.push_back(b);
    auto r = p.responder.read_packet(buf);
    REQUIRE(r);
    if (r->has_value()) got = **r;
  }
  REQUIRE(got);
  CHECK(buf.empty());
  CHECK(got->to_message() == make_inv({InvItem{}, InvItem{}, InvItem{}}));
}

TEST_CASE("V1 framing is plaintext and deterministic") {
  auto a = TransportSession::v1();
  auto b = TransportSession::v1();
  auto m = make_ping(99);
  CHECK(a.encode_message(m) == b.encode_message(m));
  CHECK(a.encode_message(m).size() == 32);
  auto dec = b.decode_segment(a.encode_messages({m, make_verack()}));
  REQUIRE(dec);
  CHECK(dec->size() == 2);
  auto version = v1_frame(make_version(VersionInfo{}));
  CHECK(looks_like_v1_version(version));
  CHECK(!looks_like_v1_version(v1_frame(make_ping(1))));
}

TEST_CASE("first payload rule") {
  CHECK(first_payload_protocol(126) == FirstPayloadClass::V1);
  CHECK(first_payload_protocol(164) == FirstPayloadClass::V2);
  CHECK(first_payload_protocol(20) == FirstPayloadClass::V2Ambiguous);

  // Every V1 first message the node model sends is a VERSION of 126 bytes;
  // every V2 first flight is larger.
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    VersionInfo v;
    v.user_agent = i % 2 ? "/Satoshi:28.0.0/" : "/Attacker:0.1.0/";
    v.nonce = rng.next();
    CHECK(first_payload_protocol(v1_frame(make_version(v)).size()) == FirstPayloadClass::V1);
    V2Handshake hs(Role::Initiator, rng);
    CHECK(first_payload_protocol(hs.start().size()) != FirstPayloadClass::V1);
  }
}

TEST_CASE("fallback decision") {
  CHECK(v1_fallback_decision(HandshakePhase::KeyExchange, false) == FallbackDecision::RetryV1);
  CHECK(v1_fallback_decision(HandshakePhase::Application, false) == FallbackDecision::GiveUp);
  CHECK(v1_fallback_decision(HandshakePhase::VersionNegotiation, false) == FallbackDecision::GiveUp);
  CHECK(v1_fallback_decision(HandshakePhase::KeyExchange, true) == FallbackDecision::GiveUp);
}

TEST_CASE("oversize contents are rejected") {
  auto p = make_pair(10);
  PacketContents pc;
  pc.message.resize(crypto::kMaxEncodableLength + 1);
  CHECK_THROWS_AS(p.initiator.encode_packet(pc), crypto::EncodingError);
}
