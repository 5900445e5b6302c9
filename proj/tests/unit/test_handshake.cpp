#include <catch_amalgamated.hpp>

#include <v2net/handshake.hpp>

using namespace v2net;

TEST_CASE("full handshake reaches application with equal session ids") {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    V2Handshake init(Role::Initiator, rng), resp(Role::Responder, rng);
    CHECK(resp.start().empty());
    Bytes f1 = init.start();
    CHECK(f1.size() == 64 + init.garbage_sent());
    CHECK(init.phase() == HandshakePhase::KeyExchange);

    auto f2 = resp.step(f1);
    REQUIRE(f2);
    // Responder's single flight: key, garbage, terminator, empty version packet.
    CHECK(f2->size() == 64 + resp.garbage_sent() + 16 + 20);
    CHECK(resp.phase() == HandshakePhase::VersionNegotiation);

    auto f3 = init.step(*f2);
    REQUIRE(f3);
    CHECK(f3->size() == 16 + 20);
    CHECK(init.complete());

    auto f4 = resp.step(*f3);
    REQUIRE(f4);
    CHECK(f4->empty());
    CHECK(resp.complete());
    CHECK(init.session_id() == resp.session_id());
    CHECK(*init.key_material() == *resp.key_material());

    auto si = init.take_session();
    auto sr = resp.take_session();
    auto got = sr.decode_segment(si.encode_message(make_ping(5)));
    REQUIRE(got);
    CHECK((*got)[0] == make_ping(5));
  }
}

TEST_CASE("handshake works when bytes arrive one at a time") {
  Rng rng(2);
  V2Handshake init(Role::Initiator, rng), resp(Role::Responder, rng);
  auto feed = [](V2Handshake& hs, const Bytes& data) {
    Bytes out;
    for (uint8_t b : data) {
      auto r = hs.step(ByteSpan(&b, 1));
      REQUIRE(r);
      append(out, *r);
    }
    return out;
  };
  Bytes f2 = feed(resp, init.start());
  Bytes f3 = feed(init, f2);
  CHECK(init.complete());
  feed(resp, f3);
  CHECK(resp.complete());
  CHECK(init.session_id() == resp.session_id());
}

TEST_CASE("application data in the same segment is kept as leftover") {
  Rng rng(3);
  V2Handshake init(Role::Initiator, rng), resp(Role::Responder, rng);
  auto f2 = resp.step(init.start());
  auto f3 = init.step(*f2);
  auto session = init.take_session();
  Bytes seg = *f3;
  append(seg, session.encode_message(make_version(VersionInfo{})));
  REQUIRE(resp.step(seg));
  REQUIRE(resp.complete());
  Bytes left = resp.take_leftover();
  auto rs = resp.take_session();
  auto msgs = rs.decode_segment(left);
  REQUIRE(msgs);
  CHECK((*msgs)[0].type == MessageType::Version);
}

TEST_CASE("garbage bounds and terminator search limit") {
  Rng rng(4);
  size_t max_seen = 0;
  for (int i = 0; i < 2000; ++i) {
    V2Handshake hs(Role::Initiator, rng);
    max_seen = std::max(max_seen, hs.garbage_sent());
    CHECK(hs.garbage_sent() <= 512);
    CHECK(hs.garbage_sent() + 64 != 126);
  }
  CHECK(max_seen > 400);

  V2Handshake init(Role::Initiator, rng, HandshakeConfig{.garbage_len = 5000});
  V2Handshake resp(Role::Responder, rng);
  Bytes f1 = init.start();
  auto r = resp.step(ByteSpan(f1).first(64 + 4000));
  REQUIRE(r);
  CHECK(!r->empty());
  auto r2 = resp.step(ByteSpan(f1).subspan(64 + 4000));
  REQUIRE(!r2);
  CHECK(r2.error() == HandshakeError::TerminatorNotFound);
  CHECK(resp.failed());
}

TEST_CASE("malformed key is a protocol error") {
  Rng rng(5);
  V2Handshake resp(Role::Responder, rng);
  Bytes bad(64, 0);  // group element 0 is invalid
  auto r = resp.step(bad);
  REQUIRE(!r);
  CHECK(r.error() == HandshakeError::MalformedKey);
}

TEST_CASE("tampered garbage fails version authentication") {
  Rng rng(6);
  V2Handshake init(Role::Initiator, rng, HandshakeConfig{.garbage_len = 40});
  V2Handshake resp(Role::Responder, rng);
  Bytes f1 = init.start();
  f1[70] ^= 0xff;  // inside the initiator's garbage
  auto f2 = resp.step(f1);
  REQUIRE(f2);
  auto f3 = init.step(*f2);
  REQUIRE(f3);
  auto r = resp.step(*f3);
  REQUIRE(!r);
  CHECK(r.error() == HandshakeError::BadVersionPacket);
}

TEST_CASE("phase never moves backwards") {
  Rng rng(7);
  V2Handshake init(Role::Initiator, rng), resp(Role::Responder, rng);
  std::vector<HandshakePhase> seen{init.phase()};
  auto f2 = resp.step(init.start());
  seen.push_back(resp.phase());
  auto f3 = init.step(*f2);
  seen.push_back(init.phase());
  REQUIRE(resp.step(*f3));
  seen.push_back(resp.phase());
  REQUIRE(init.step(Bytes{}));
  seen.push_back(init.phase());
  CHECK(seen.back() == HandshakePhase::Application);
  for (size_t i = 1; i < seen.size() - 1; ++i) CHECK(seen[i] >= seen[0]);
}

TEST_CASE("decoys after the version packet are dropped") {
  Rng rng(8);
  V2Handshake init(Role::Initiator, rng, HandshakeConfig{.decoys = 3, .decoy_len = 7});
  V2Handshake resp(Role::Responder, rng);
  auto f2 = resp.step(init.start());
  auto f3 = init.step(*f2);
  CHECK(f3->size() == 16 + 20 + 3 * (20 + 7));
  REQUIRE(resp.step(*f3));
  auto session = resp.take_session();
  auto msgs = session.decode_segment(resp.take_leftover());
  REQUIRE(msgs);
  CHECK(msgs->empty());
  CHECK(session.decoys_received() == 3);
}

TEST_CASE("x25519 backend completes a handshake") {
  Rng rng(9);
  HandshakeConfig cfg;
  cfg.backend = crypto::find_key_exchange("x25519");
  V2Handshake init(Role::Initiator, rng, cfg), resp(Role::Responder, rng, cfg);
  auto f2 = resp.step(init.start());
  auto f3 = init.step(*f2);
  REQUIRE(resp.step(*f3));
  CHECK(resp.complete());
  CHECK(init.session_id() == resp.session_id());
}
