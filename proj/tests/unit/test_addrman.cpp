#include <catch_amalgamated.hpp>

#include <v2net/addrman.hpp>
#include <v2net/messages.hpp>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

using namespace v2net;

namespace {

AddressRecord rec(uint8_t a, uint8_t b, uint8_t c, uint8_t d, uint64_t flags = services::kNetwork | services::kWitness) {
  return AddressRecord{NetAddress::ipv4(a, b, c, d), flags, 0};
}

NetGroup relayer(uint32_t i) { return NetAddress::ipv4(60 + (i >> 8), static_cast<uint8_t>(i), 0, 1).group(); }

}  // namespace

TEST_CASE("network groups and routability") {
  CHECK(NetAddress::ipv4(1, 2, 3, 4).group() == NetAddress::ipv4(1, 2, 200, 9).group());
  CHECK(NetAddress::ipv4(1, 2, 3, 4).group() != NetAddress::ipv4(1, 3, 3, 4).group());
  auto v6a = NetAddress::parse("[2001:db8:1:2::1]:8333");
  auto v6b = NetAddress::parse("[2001:db8:ffff::1]:8333");
  auto v6c = NetAddress::parse("[2001:db9::1]:8333");
  REQUIRE((v6a && v6b && v6c));
  CHECK(v6a->group() == v6b->group());
  CHECK(v6a->group() != v6c->group());
  CHECK(v6a->to_string() == "[2001:db8:1:2::1]:8333");

  CHECK(NetAddress::ipv4(8, 8, 8, 8).is_routable());
  for (auto a : {NetAddress::ipv4(0, 0, 0, 0), NetAddress::ipv4(127, 0, 0, 1), NetAddress::ipv4(10, 1, 1, 1),
                 NetAddress::ipv4(172, 16, 0, 1), NetAddress::ipv4(192, 168, 1, 1), NetAddress::ipv4(169, 254, 1, 1),
                 NetAddress::ipv4(224, 0, 0, 1)}) {
    CHECK(!a.is_routable());
  }
  CHECK(NetAddress::ipv4(172, 32, 0, 1).is_routable());
  auto p = NetAddress::parse("193.168.1.2:18444");
  REQUIRE(p);
  CHECK(p->port() == 18444);
  CHECK(p->to_string() == "193.168.1.2:18444");
  CHECK(!NetAddress::parse("300.1.1.1"));
}

TEST_CASE("insert, reference cap and unroutable rejection") {
  Rng rng(1);
  AddrTables t(42);
  auto r = rec(8, 1, 2, 3);
  CHECK(t.insert_from_addr_msg(r, relayer(0), rng) == InsertResult::Added);
  CHECK(t.new_ref_count() == 1);
  CHECK(t.tried_count() == 0);
  CHECK(t.insert_from_addr_msg(r, relayer(0), rng) == InsertResult::AlreadyInBucket);

  // Distinct relayer groups may still map to the same bucket; keep relaying
  // until eight references exist and check the cap holds afterwards.
  uint32_t i = 1;
  while (t.refs(r.addr) < 8 && i < 1000) t.insert_from_addr_msg(r, relayer(i++), rng);
  CHECK(t.refs(r.addr) == 8);
  CHECK(t.insert_from_addr_msg(r, relayer(i++), rng) == InsertResult::RefCapReached);
  CHECK(t.refs(r.addr) == 8);

  CHECK(t.insert_from_addr_msg(rec(10, 0, 0, 1), relayer(0), rng) == InsertResult::Unroutable);
  CHECK(t.check_invariants());
}

TEST_CASE("eight distinct relayer buckets give eight references") {
  Rng rng(2);
  AddrTables t(7);
  auto r = rec(9, 9, 9, 9);
  // Find relayers whose buckets are pairwise distinct by watching the count.
  size_t added = 0;
  for (uint32_t i = 0; added < 8; ++i) {
    if (t.insert_from_addr_msg(r, relayer(i), rng) != InsertResult::AlreadyInBucket) ++added;
  }
  CHECK(t.refs(r.addr) == 8);
}

TEST_CASE("mark_connected moves to tried and strips new references") {
  Rng rng(3);
  AddrTables t(1);
  auto r = rec(8, 8, 8, 8);
  for (uint32_t i = 0; i < 200; ++i) t.insert_from_addr_msg(r, relayer(i), rng);
  REQUIRE(t.refs(r.addr) == 8);
  t.mark_connected(r, rng);
  CHECK(t.in_tried(r.addr));
  CHECK(t.refs(r.addr) == 0);
  CHECK(t.new_ref_count() == 0);
  CHECK(t.tried_count() == 1);
  t.mark_connected(r, rng);
  CHECK(t.tried_count() == 1);

  t.mark_connected(rec(7, 7, 7, 7), rng);
  CHECK(t.tried_count() == 2);
  CHECK(t.in_tried(NetAddress::ipv4(7, 7, 7, 7)));
  CHECK(t.insert_from_addr_msg(r, relayer(999), rng) == InsertResult::InTried);
  CHECK(t.check_invariants());
}

TEST_CASE("selection falls back and picks tables evenly") {
  Rng rng(4);
  AddrTables t(3);
  CHECK(!t.select_candidate(rng));
  for (uint8_t i = 1; i <= 50; ++i) t.insert_from_addr_msg(rec(20, i, 0, 1), relayer(i), rng);
  for (int i = 0; i < 100; ++i) CHECK(t.select_candidate(rng)->table == TableKind::New);

  for (uint8_t i = 1; i <= 5; ++i) t.mark_connected(rec(30, i, 0, 1), rng);
  const int n = 100000;
  int tried = 0;
  for (int i = 0; i < n; ++i) tried += t.select_candidate(rng)->table == TableKind::Tried;
  const double frac = static_cast<double>(tried) / n;
  CHECK(std::abs(frac - 0.5) < 0.01);
  // Chi-square with one degree of freedom, 0.999 quantile 10.83.
  const double e = n / 2.0;
  const double chi2 = std::pow(tried - e, 2) / e + std::pow((n - tried) - e, 2) / e;
  CHECK(chi2 < 10.83);
}

TEST_CASE("selection probability follows reference mass") {
  Rng rng(5);
  AddrTables t(11);
  // Address A gets 4 references, B 1, C 3; only the new table is populated.
  auto a = rec(40, 1, 0, 1), b = rec(41, 1, 0, 1), c = rec(42, 1, 0, 1);
  auto fill = [&](const AddressRecord& r, size_t k) {
    for (uint32_t i = 0; t.refs(r.addr) < k; ++i) t.insert_from_addr_msg(r, relayer(i), rng);
  };
  fill(a, 4);
  fill(b, 1);
  fill(c, 3);
  REQUIRE(t.new_ref_count() == 8);

  // Brute force over the draw: one uniform index into 8 references.
  std::map<NetAddress, double> expected{{a.addr, 4 / 8.0}, {b.addr, 1 / 8.0}, {c.addr, 3 / 8.0}};
  std::map<NetAddress, int> counts;
  const int n = 80000;
  for (int i = 0; i < n; ++i) ++counts[t.select_candidate(rng)->record.addr];
  for (const auto& [addr, p] : expected) {
    const double sd = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(counts[addr] / static_cast<double>(n) - p) < 5 * sd);
  }
}

TEST_CASE("feeler ticks drain the new table when everything is reachable") {
  Rng rng(6);
  AddrTables t(9);
  for (int i = 0; i < 500; ++i) {
    t.insert_from_addr_msg(rec(static_cast<uint8_t>(20 + i % 50), static_cast<uint8_t>(i / 50), 1, 1), relayer(i % 30), rng);
  }
  size_t prev = t.new_ref_count();
  while (t.new_ref_count() > 0) {
    auto tested = t.feeler_tick(rng, [](const NetAddress&) { return true; });
    REQUIRE(tested);
    CHECK(t.in_tried(*tested));
    CHECK(t.new_ref_count() < prev);
    prev = t.new_ref_count();
  }
  CHECK(!t.feeler_tick(rng, [](const NetAddress&) { return true; }));

  AddrTables u(9);
  u.insert_from_addr_msg(rec(8, 8, 8, 8), relayer(1), rng);
  auto tested = u.feeler_tick(rng, [](const NetAddress&) { return false; });
  CHECK(tested);
  CHECK(u.new_ref_count() == 1);
  CHECK(u.tried_count() == 0);
}

TEST_CASE("outbound eligibility") {
  std::vector<NetAddress> current{NetAddress::ipv4(50, 1, 0, 1)};
  const uint64_t req = services::kNetwork | services::kWitness;
  CHECK(!outbound_eligible(rec(50, 1, 9, 9), current, req));
  CHECK(!outbound_eligible(rec(51, 1, 9, 9, services::kNetwork), current, req));
  CHECK(outbound_eligible(rec(51, 1, 9, 9), current, req));
  CHECK(!outbound_eligible(rec(10, 1, 9, 9), current, req));
}

TEST_CASE("capacity and invariants under random churn") {
  Rng rng(7);
  AddrmanConfig small{16, 8, 8, 8};
  AddrTables t(5, small);
  for (int step = 0; step < 20000; ++step) {
    auto r = rec(static_cast<uint8_t>(1 + rng.uniform(100)), static_cast<uint8_t>(rng.uniform(256)), 0,
                 static_cast<uint8_t>(1 + rng.uniform(20)));
    switch (rng.uniform(4)) {
      case 0:
      case 1: t.insert_from_addr_msg(r, relayer(static_cast<uint32_t>(rng.uniform(300))), rng); break;
      case 2: t.feeler_tick(rng, [&](const NetAddress&) { return rng.bernoulli(0.7); }); break;
      case 3:
        if (auto s = t.select_candidate(rng)) t.remove(s->record.addr);
        break;
    }
    REQUIRE(t.new_ref_count() <= t.new_capacity());
    REQUIRE(t.tried_count() <= t.tried_capacity());
    if (step % 500 == 0) REQUIRE(t.check_invariants());
  }
  CHECK(t.check_invariants());
}

TEST_CASE("dump and load roundtrip") {
  Rng rng(8);
  AddrTables t(21);
  for (int i = 0; i < 300; ++i) {
    t.insert_from_addr_msg(rec(static_cast<uint8_t>(20 + i % 40), static_cast<uint8_t>(i), 3, 4), relayer(i % 17), rng);
  }
  for (int i = 0; i < 40; ++i) t.feeler_tick(rng, [](const NetAddress&) { return true; });
  std::stringstream ss;
  t.dump(ss);
  auto u = AddrTables::load(ss, 21);
  CHECK(u.new_ref_count() == t.new_ref_count());
  CHECK(u.tried_count() == t.tried_count());
  CHECK(u.check_invariants());
  auto lines = [](const AddrTables& x) {
    std::stringstream out;
    x.dump(out);
    std::multiset<std::string> l;
    for (std::string line; std::getline(out, line);) l.insert(line);
    return l;
  };
  CHECK(lines(u) == lines(t));

  std::stringstream bad("new 5 not-an-ip 8333 1\n");
  CHECK_THROWS(AddrTables::load(bad));
}
