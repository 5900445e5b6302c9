#include <catch_amalgamated.hpp>

#include <v2net/peer_node.hpp>

#include <json.hpp>

using namespace v2net;

namespace {

NodeConfig cfg(const std::string& name, NetAddress addr, bool v2 = true) {
  NodeConfig c;
  c.name = name;
  c.addr = addr;
  c.open_outbound = false;
  c.run_feelers = false;
  if (!v2) c.services &= ~services::kP2PV2;
  return c;
}

struct Pair {
  Simulator sim{11};
  Network net{sim};
  Node a;
  Node b;
  Pair(NodeConfig ca, NodeConfig cb) : a(sim, net, std::move(ca), 1), b(sim, net, std::move(cb), 2) {
    a.start();
    b.start();
  }
};

const NetAddress kA = NetAddress::ipv4(175, 1, 0, 1);
const NetAddress kB = NetAddress::ipv4(175, 2, 0, 1);

struct Silent : Endpoint {
  bool on_inbound(ConnId, const NetAddress&) override { return true; }
  void on_connected(ConnId) override {}
  void on_connect_failed(ConnId) override {}
  void on_data(ConnId, Bytes) override {}
  void on_closed(ConnId, CloseKind) override { closed = true; }
  bool closed = false;
};

struct DropAfter : PathHook {
  SimTime from = 0;
  Simulator* sim = nullptr;
  bool on_syn(const NetAddress&, const NetAddress&) override { return true; }
  SegmentDecision on_segment(const SegmentInfo&, const Bytes&) override {
    return {sim->now() >= from ? Verdict::Drop : Verdict::Forward, {}};
  }
  void on_close(ConnId, const NetAddress&, const NetAddress&, CloseKind) override {}
};

}  // namespace

TEST_CASE("protocol negotiation matrix") {
  struct Row {
    bool init_v2_capable, resp_v2_capable, try_v2;
    Protocol expect;
  };
  for (auto r : {Row{true, true, true, Protocol::V2}, Row{true, true, false, Protocol::V1},
                 Row{true, false, true, Protocol::V1}, Row{false, true, false, Protocol::V1}}) {
    Pair p(cfg("a", kA, r.init_v2_capable), cfg("b", kB, r.resp_v2_capable));
    p.a.connect_to(kB, Direction::Outbound, r.try_v2);
    p.sim.run_until(30 * kSeconds);
    REQUIRE(p.a.count(Direction::Outbound, true) == 1);
    REQUIRE(p.b.count(Direction::Inbound, true) == 1);
    CHECK(p.a.peers()[0]->proto == r.expect);
    CHECK(p.b.peers()[0]->proto == r.expect);
    CHECK(p.a.history().back().remote_v2 == r.resp_v2_capable);
    CHECK(p.b.history().back().remote_v2 == r.init_v2_capable);
    CHECK(p.a.peers()[0]->user_agent == "/Satoshi:27.0.0/");
  }
}

TEST_CASE("idle honest peers survive keepalive and sync checks") {
  Pair p(cfg("a", kA), cfg("b", kB));
  p.a.connect_to(kB, Direction::Outbound, true);
  p.sim.run_until(6 * kHours);
  CHECK(p.a.count(Direction::Outbound, true) == 1);
  CHECK(p.a.stats().inactivity_disconnects == 0);
  CHECK(p.a.stats().sync_disconnects == 0);
  CHECK(p.a.stats().decode_failures == 0);
  CHECK(p.b.stats().decode_failures == 0);
}

TEST_CASE("blocks propagate between peers") {
  Pair p(cfg("a", kA), cfg("b", kB));
  p.a.connect_to(kB, Direction::Outbound, true);
  p.sim.run_until(10 * kSeconds);
  p.b.mine_block(1);
  p.sim.run_until(20 * kSeconds);
  p.b.mine_block(2);
  p.sim.run_until(30 * kSeconds);
  CHECK(p.a.tip().height == 2);
  CHECK(p.a.peers()[0]->provides_data);
}

TEST_CASE("silent inbound connection hits the handshake timeout") {
  Simulator sim(1);
  Network net(sim);
  Node n(sim, net, cfg("n", kA), 1);
  n.start();
  Silent s;
  net.connect(&s, kB, kA);
  sim.run_until(59 * kSeconds);
  CHECK(n.inbound_count() == 1);
  sim.run_until(61 * kSeconds);
  CHECK(n.inbound_count() == 0);
  CHECK(n.stats().handshake_timeouts == 1);
  CHECK(s.closed);
}

TEST_CASE("blackholed peer is dropped for inactivity") {
  Pair p(cfg("a", kA), cfg("b", kB));
  DropAfter hook;
  hook.sim = &p.sim;
  hook.from = kMinutes;
  p.net.set_hook(&hook);
  p.a.connect_to(kB, Direction::Outbound, true);
  p.sim.run_until(19 * kMinutes);
  CHECK(p.a.count(Direction::Outbound, true) == 1);
  p.sim.run_until(30 * kMinutes);
  CHECK(p.a.connection_count() == 0);
  const auto& sa = p.a.stats();
  const auto& sb = p.b.stats();
  CHECK(sa.inactivity_disconnects + sa.sync_disconnects + sb.inactivity_disconnects + sb.sync_disconnects >= 1);
}

TEST_CASE("full inbound table evicts the worst-ranked peer") {
  Simulator sim(2);
  Network net(sim);
  NodeConfig tc = cfg("t", NetAddress::ipv4(193, 168, 1, 2));
  tc.max_connections = 15;
  Node t(sim, net, tc, 1);
  t.start();
  std::vector<std::unique_ptr<Node>> peers;
  for (int i = 0; i < 5; ++i) {
    peers.push_back(std::make_unique<Node>(sim, net, cfg("p" + std::to_string(i), NetAddress::ipv4(20, 1 + i, 0, 1)),
                                           10 + i));
    peers.back()->start();
  }
  for (int i = 0; i < 4; ++i) {
    peers[0]->connect_to(t.addr(), Direction::Outbound, true);
    sim.run_until(sim.now() + 5 * kSeconds);
  }
  REQUIRE(t.inbound_count() == tc.inbound_capacity());
  // The oldest connection from the repeated IP is the eviction choice.
  auto cand = t.eviction_candidate();
  REQUIRE(cand);
  CHECK(t.peer(*cand)->remote.same_ip(peers[0]->addr()));
  SimTime oldest = 0;
  for (const PeerInfo* q : t.peers()) oldest = std::max(oldest, q->connected_at);
  CHECK(t.peer(*cand)->connected_at == oldest);

  peers[1]->connect_to(t.addr(), Direction::Outbound, true);
  sim.run_until(sim.now() + 5 * kSeconds);
  CHECK(t.inbound_count() == tc.inbound_capacity());
  CHECK(t.stats().evictions == 1);
}

TEST_CASE("duplicate-prefix limit caps single-group floods", "[property]") {
  for (int thr : {50, 75, 90, 95, 100}) {
    for (size_t maxc : {20u, 31u, 50u}) {
      Simulator sim(3);
      Network net(sim);
      NodeConfig tc = cfg("t", NetAddress::ipv4(193, 168, 1, 2));
      tc.max_connections = maxc;
      tc.countermeasures.c6_threshold = thr;
      Node t(sim, net, tc, 1);
      NodeConfig hc = cfg("h", NetAddress::ipv4(11, 250, 0, 1));
      hc.kind = ProfileKind::Attacker;
      hc.profile = BehaviorProfile::minimal();
      hc.max_connections = 10000;
      Node h(sim, net, hc, 2);
      t.start();
      h.start();
      for (size_t i = 0; i < 2 * maxc; ++i) {
        h.connect_to(t.addr(), Direction::Outbound, false);
        sim.run_until(sim.now() + kSeconds);
      }
      const size_t cap = tc.inbound_capacity();
      const size_t expect = std::min(cap, (static_cast<size_t>(thr) * cap + 99) / 100);
      CHECK(t.count(Direction::Inbound, true) == expect);
      CHECK(t.stats().c6_rejects == 2 * maxc - expect);
    }
  }
}

TEST_CASE("feeler promotes an address to tried") {
  Simulator sim(4);
  Network net(sim);
  NodeConfig ac = cfg("a", kA);
  ac.run_feelers = true;
  ac.addrman_key = 77;
  Node a(sim, net, ac, 1);
  Node b(sim, net, cfg("b", kB), 2);
  Rng rng(5);
  a.addrman().insert_from_addr_msg(AddressRecord{kB, b.config().services, 0}, NetAddress::ipv4(30, 1, 0, 1).group(),
                                   rng);
  a.start();
  b.start();
  sim.run_until(10 * kMinutes);
  CHECK(a.addrman().in_tried(kB));
  CHECK(a.count(Direction::Feeler) == 0);
}

TEST_CASE("outbound slots fill from the address table") {
  Simulator sim(6);
  Network net(sim);
  NodeConfig ac = cfg("a", kA);
  ac.open_outbound = true;
  ac.addrman_key = 99;
  Node a(sim, net, ac, 1);
  std::vector<std::unique_ptr<Node>> others;
  Rng rng(2);
  for (int i = 0; i < 30; ++i) {
    others.push_back(std::make_unique<Node>(sim, net, cfg("o", NetAddress::ipv4(40, 1 + i, 0, 1)), 10 + i));
    others.back()->start();
    a.addrman().insert_from_addr_msg(AddressRecord{others.back()->addr(), others.back()->config().services, 0},
                                     NetAddress::ipv4(30, 1 + i, 0, 1).group(), rng);
  }
  a.start();
  sim.run_until(10 * kMinutes);
  CHECK(a.count(Direction::Outbound, true) == ac.outbound_slots);
  std::set<NetGroup> groups;
  for (const PeerInfo* p : a.peers())
    if (p->dir == Direction::Outbound) groups.insert(p->remote.group());
  CHECK(groups.size() == ac.outbound_slots);

  auto st = nlohmann::json::parse(a.status_json());
  CHECK(st["peers"].size() == a.connection_count());
}

TEST_CASE("stop keeps address table and tip") {
  Pair p(cfg("a", kA), cfg("b", kB));
  p.a.connect_to(kB, Direction::Outbound, true);
  p.sim.run_until(10 * kSeconds);
  p.b.mine_block(1);
  p.sim.run_until(20 * kSeconds);
  const size_t refs = p.a.addrman().new_ref_count() + p.a.addrman().tried_count();
  p.a.stop();
  p.sim.run_until(30 * kSeconds);
  CHECK(!p.a.running());
  CHECK(p.a.connection_count() == 0);
  CHECK(p.b.connection_count() == 0);
  CHECK(p.a.tip().height == 1);
  CHECK(p.a.addrman().new_ref_count() + p.a.addrman().tried_count() == refs);
  p.a.start();
  p.a.connect_to(kB, Direction::Outbound, true);
  p.sim.run_until(40 * kSeconds);
  CHECK(p.a.count(Direction::Outbound, true) == 1);
}
