#include <catch_amalgamated.hpp>

#include <v2net/sweep.hpp>

using namespace v2net;

namespace {

const AddrTables& small_db() {
  static const AddrTables db = [] {
    SyntheticDbSpec s;
    s.new_fill = 0.15;
    s.tried_fill = 0.05;
    s.groups = 600;
    s.seed = 4;
    return generate_synthetic_addrdb(s);
  }();
  return db;
}

AddrGridSpec small_grid() {
  AddrGridSpec g;
  g.attackers = {20, 50};
  g.closes = {2, 10};
  g.seeds = 6;
  return g;
}

}  // namespace

TEST_CASE("synthetic database shape") {
  const auto& db = small_db();
  CHECK(db.check_invariants());
  CHECK(db.new_ref_count() > 0);
  CHECK(db.tried_count() > 0);
  CHECK(distinct_groups(db) <= 600);
  CHECK(distinct_groups(db) > 400);
}

TEST_CASE("addr-sim parameter errors") {
  AddrSelSimParams p;
  p.n_attacker_addrs = 9;
  CHECK(run_addr_selection_sim(small_db(), p).error() == AddrSimError::TooFewGroups);
  p.n_attacker_addrs = 20;
  p.closes_per_interval = 0;
  CHECK(run_addr_selection_sim(small_db(), p).error() == AddrSimError::BadCloseCount);
  p.closes_per_interval = 11;
  CHECK(run_addr_selection_sim(small_db(), p).error() == AddrSimError::BadCloseCount);
  p.closes_per_interval = 1;
  CHECK(run_addr_selection_sim(AddrTables(1), p).error() == AddrSimError::EmptyDatabase);
}

TEST_CASE("addr-sim completes and is seed-deterministic") {
  AddrSelSimParams p;
  p.n_attacker_addrs = 30;
  p.closes_per_interval = 5;
  p.seed = 12;
  const AddrTables before = small_db();
  auto a = run_addr_selection_sim(small_db(), p);
  auto b = run_addr_selection_sim(small_db(), p);
  REQUIRE((a && b));
  CHECK(a->completed);
  CHECK(a->elapsed == b->elapsed);
  CHECK(a->closes == b->closes);
  CHECK(a->closes * p.close_interval >= a->elapsed - p.close_interval * static_cast<SimTime>(p.closes_per_interval));
  CHECK(small_db().new_ref_count() == before.new_ref_count());
  CHECK(attacker_sim_address(0).group() != attacker_sim_address(1).group());
  CHECK(attacker_sim_address(254).group() != attacker_sim_address(255).group());
}

TEST_CASE("parallel grid matches the serial reference") {
  auto serial = addr_grid_serial(small_db(), small_grid());
  REQUIRE(serial);
  for (int threads : {1, 2, 3}) {
    auto par = addr_grid_parallel(small_db(), small_grid(), threads);
    REQUIRE(par);
    REQUIRE(par->size() == serial->size());
    for (size_t i = 0; i < par->size(); ++i) {
      CHECK((*par)[i].attackers == (*serial)[i].attackers);
      CHECK((*par)[i].closes == (*serial)[i].closes);
      CHECK((*par)[i].days == (*serial)[i].days);
      CHECK((*par)[i].mean_days == (*serial)[i].mean_days);
      CHECK((*par)[i].completed == (*serial)[i].completed);
    }
  }
  for (const auto& c : *serial) {
    CHECK(c.min_days <= c.mean_days);
    CHECK(c.mean_days <= c.max_days);
  }
  AddrGridSpec bad = small_grid();
  bad.attackers = {5};
  CHECK(addr_grid_parallel(small_db(), bad, 2).error() == AddrSimError::TooFewGroups);
}

TEST_CASE("grid monotonicity check") {
  AddrGridSpec g;
  g.attackers = {20, 50};
  g.closes = {1, 10};
  auto cell = [](size_t a, size_t c, double m) {
    AddrGridCell x;
    x.attackers = a;
    x.closes = c;
    x.mean_days = m;
    return x;
  };
  std::vector<AddrGridCell> good{cell(20, 1, 80), cell(20, 10, 30), cell(50, 1, 40), cell(50, 10, 12)};
  CHECK(grid_monotone(good, g));
  auto bad = good;
  bad[3].mean_days = 35;
  CHECK(!grid_monotone(bad, g));
  bad = good;
  bad[2].mean_days = 90;
  CHECK(!grid_monotone(bad, g));
  CHECK(!grid_monotone({good[0]}, g));
}

TEST_CASE("parallel seed sweep matches serial") {
  ScenarioConfig c = default_config(ScenarioKind::Downgrade);
  c.topology.honest_nodes = 12;
  const std::vector<uint64_t> seeds{3, 4, 5};
  auto s = scenario_sweep_serial(c, seeds);
  auto p = scenario_sweep_parallel(c, seeds, 3);
  REQUIRE(s.size() == p.size());
  for (size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i].seed == seeds[i]);
    CHECK(s[i].summary.dump() == p[i].summary.dump());
    CHECK(s[i].events.size() == p[i].events.size());
  }
}
