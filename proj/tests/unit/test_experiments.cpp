#include <catch_amalgamated.hpp>

#include <v2net/scenarios.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace v2net;

namespace {

ScenarioConfig small_eclipse(AdversaryMode mode, uint64_t seed = 2) {
  ScenarioConfig c = default_config(ScenarioKind::Eclipse);
  c.seed = seed;
  c.topology.honest_nodes = 15;
  c.warmup = 30 * kMinutes;
  c.duration = 6 * kHours;
  c.attack.mode = mode;
  return c;
}

ScenarioConfig small_downgrade(bool attack, bool c3c) {
  ScenarioConfig c = default_config(ScenarioKind::Downgrade);
  c.topology.honest_nodes = 20;
  c.attack.mode = attack ? AdversaryMode::Downgrade : AdversaryMode::Off;
  c.victim.c3c = c3c;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("eclipse on a small network and its control") {
  auto atk = run_eclipse_scenario(small_eclipse(AdversaryMode::Eclipse));
  CHECK(!atk.summary["time_to_eclipse"].is_null());
  CHECK(atk.summary["eclipsed_at_end"] == true);
  CHECK(atk.summary["adversary"]["replaced"].get<uint64_t>() > 0);

  auto ctl = run_eclipse_scenario(small_eclipse(AdversaryMode::Off));
  CHECK(ctl.summary["time_to_eclipse"].is_null());
  CHECK(ctl.summary["max_attacker_slots"] == 0);
  CHECK(ctl.summary["adversary"].is_null());
  for (const auto& s : ctl.snapshots) {
    CHECK(s.outbound_attacker == 0);
    CHECK(s.inbound_attacker == 0);
  }
}

TEST_CASE("downgrade and the C3C countermeasure") {
  auto base = run_downgrade_scenario(small_downgrade(false, false));
  CHECK(base.summary["post_restart_v2"].get<size_t>() > 0);
  CHECK(base.summary["downgraded"] == 0);

  auto atk = run_downgrade_scenario(small_downgrade(true, false));
  CHECK(atk.summary["post_restart_connections"].get<size_t>() > 0);
  CHECK(atk.summary["post_restart_v2"] == 0);
  CHECK(atk.summary["downgraded"].get<size_t>() > 0);

  auto c3c = run_downgrade_scenario(small_downgrade(true, true));
  CHECK(c3c.summary["downgraded"] == 0);
  CHECK(c3c.summary["adversary"]["resets"].get<uint64_t>() > 0);
}

TEST_CASE("flood against the duplicate-prefix limit", "[property]") {
  for (int thr : {60, 90, 95}) {
    ScenarioConfig c = default_config(ScenarioKind::Countermeasures);
    c.victim.c6_threshold = thr;
    auto r = run_countermeasure_scenario(c);
    const size_t cap = r.summary["inbound_capacity"];
    CHECK(r.summary["max_inbound"].get<size_t>() == (static_cast<size_t>(thr) * cap + 99) / 100);
  }
  ScenarioConfig d = default_config(ScenarioKind::Countermeasures);
  d.flood.distinct_groups = true;
  auto r = run_countermeasure_scenario(d);
  CHECK(r.summary["max_inbound"] == r.summary["inbound_capacity"]);
  CHECK(r.summary["duplicate_prefix_rejects"] == 0);
}

TEST_CASE("runs are deterministic per seed") {
  auto a = run_eclipse_scenario(small_eclipse(AdversaryMode::Eclipse, 9));
  auto b = run_eclipse_scenario(small_eclipse(AdversaryMode::Eclipse, 9));
  CHECK(a.summary.dump() == b.summary.dump());
  REQUIRE(a.events.size() == b.events.size());
  std::ostringstream ea, eb;
  write_events_jsonl(ea, a.events);
  write_events_jsonl(eb, b.events);
  CHECK(ea.str() == eb.str());
  auto c = run_eclipse_scenario(small_eclipse(AdversaryMode::Eclipse, 10));
  std::ostringstream ec;
  write_events_jsonl(ec, c.events);
  CHECK(ec.str() != ea.str());
}

TEST_CASE("config parsing") {
  auto base = default_config(ScenarioKind::Eclipse);
  auto ok = parse_config(R"({"seed": 4, "duration": 3600, "topology": {"honest_nodes": 7}, "victim": {"c6_threshold": 80}})",
                         base);
  REQUIRE(ok);
  CHECK(ok->seed == 4);
  CHECK(ok->duration == kHours);
  CHECK(ok->topology.honest_nodes == 7);
  CHECK(ok->victim.c6_threshold == 80);

  CHECK(!parse_config("{\"sed\": 1}", base));
  CHECK(!parse_config("{\"topology\": {\"nodes\": 1}}", base));
  CHECK(!parse_config("{\"victim\": {\"c6_threshold\": 0}}", base));
  CHECK(!parse_config("{\"topology\": {\"v1_only_fraction\": 1.5}}", base));
  CHECK(!parse_config("{\"attack\": {\"mode\": \"loud\"}}", base));
  CHECK(!parse_config("{\"attack\": {\"attacker_addrs\": 5}}", base));
  CHECK(!parse_config("[1]", base));
  CHECK(!parse_config("{", base));

  for (auto k : {ScenarioKind::Eclipse, ScenarioKind::Downgrade, ScenarioKind::Countermeasures}) {
    auto c = default_config(k);
    auto again = parse_config(config_to_json(c), default_config(ScenarioKind::Eclipse));
    REQUIRE(again);
    CHECK(config_to_json(*again) == config_to_json(c));
  }
}

TEST_CASE("report files") {
  namespace fs = std::filesystem;
  auto r = run_countermeasure_scenario(default_config(ScenarioKind::Countermeasures));
  const fs::path dir = fs::temp_directory_path() / "v2net_report_test";
  fs::remove_all(dir);
  REQUIRE(!emit_report(r, (dir / "csv").string(), ReportFormat::Csv));
  REQUIRE(!emit_report(r, (dir / "json").string(), ReportFormat::Json));
  const std::string snaps = slurp(dir / "csv" / "snapshots.csv");
  CHECK(snaps.rfind(std::string(kSnapshotHeader) + "\n", 0) == 0);
  CHECK(std::count(snaps.begin(), snaps.end(), '\n') == static_cast<long>(r.snapshots.size() + 1));
  auto summary = nlohmann::json::parse(slurp(dir / "json" / "summary.json"));
  CHECK(summary["scenario"] == "countermeasures");
  CHECK(summary["config"]["victim"]["c6_threshold"] == 90);
  const std::string events = slurp(dir / "json" / "events.jsonl");
  CHECK(std::count(events.begin(), events.end(), '\n') == static_cast<long>(r.events.size()));
  CHECK(slurp(dir / "csv" / "summary.csv").rfind("key,value\n", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("per-message traffic is always labeled with its true type", "[property]") {
  auto segs = simulate_traffic(6, 90 * kMinutes, 3, true);
  REQUIRE(segs.size() > 200);
  std::set<MessageType> seen;
  for (const auto& s : segs) {
    REQUIRE(s.truth.size() == 1);
    seen.insert(s.truth[0]);
    auto c = classify(s.payload_len);
    REQUIRE(c);
    CHECK(c->contains(spec_name(s.truth[0])));
  }
  CHECK(seen.count(MessageType::Ping));
  CHECK(seen.count(MessageType::Inv));
  CHECK(seen.count(MessageType::Headers));
}
