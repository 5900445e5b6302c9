#include <v2net/config.hpp>

#include <json.hpp>

#include <set>

namespace v2net {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Eclipse: return "eclipse";
    case ScenarioKind::Downgrade: return "downgrade";
    case ScenarioKind::Countermeasures: return "countermeasures";
  }
  return "?";
}

ScenarioConfig default_config(ScenarioKind kind) {
  ScenarioConfig c;
  c.kind = kind;
  switch (kind) {
    case ScenarioKind::Eclipse: break;
    case ScenarioKind::Downgrade:
      c.attack.mode = AdversaryMode::Downgrade;
      c.topology.v1_only_fraction = 0.2;
      c.warmup = 30 * kMinutes;
      c.duration = 1 * kHours;
      c.snapshot_interval = 5 * kMinutes;
      break;
    case ScenarioKind::Countermeasures:
      c.attack.mode = AdversaryMode::Off;
      c.victim.c6_threshold = 90;
      c.warmup = 0;
      c.duration = 10 * kMinutes;
      c.snapshot_interval = 30 * kSeconds;
      break;
  }
  return c;
}

namespace {

struct Reader {
  const json& obj;
  std::string path;
  std::set<std::string> used;

  const json* get(const std::string& key) {
    used.insert(key);
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }
  void check_unknown() const {
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (!used.count(it.key())) throw std::invalid_argument("unknown key '" + path + it.key() + "'");
  }
  std::string where(const std::string& key) const { return path + key; }

  void size(const std::string& key, size_t& out, size_t lo = 0, size_t hi = SIZE_MAX) {
    if (auto v = get(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<int64_t>() >= 0))
        throw std::invalid_argument(where(key) + " must be a non-negative integer");
      auto x = v->get<uint64_t>();
      if (x < lo || x > hi) throw std::invalid_argument(where(key) + " out of range");
      out = static_cast<size_t>(x);
    }
  }
  void u64(const std::string& key, uint64_t& out) {
    size_t tmp = out;
    size(key, tmp);
    out = tmp;
  }
  void real(const std::string& key, double& out, double lo, double hi) {
    if (auto v = get(key)) {
      if (!v->is_number()) throw std::invalid_argument(where(key) + " must be a number");
      double x = v->get<double>();
      if (x < lo || x > hi) throw std::invalid_argument(where(key) + " out of range");
      out = x;
    }
  }
  void duration(const std::string& key, SimTime& out, double lo = 0) {
    double s = to_seconds(out);
    real(key, s, lo, 1e9);
    out = seconds(s);
  }
  void boolean(const std::string& key, bool& out) {
    if (auto v = get(key)) {
      if (!v->is_boolean()) throw std::invalid_argument(where(key) + " must be true or false");
      out = v->get<bool>();
    }
  }
  const json* object(const std::string& key) {
    auto v = get(key);
    if (v && !v->is_object()) throw std::invalid_argument(where(key) + " must be an object");
    return v;
  }
};

}  // namespace

Expected<ScenarioConfig, std::string> parse_config(std::string_view text, ScenarioConfig cfg) {
  json root = json::parse(text, nullptr, false);
  if (root.is_discarded()) return std::string("config is not valid JSON");
  if (!root.is_object()) return std::string("config must be a JSON object");
  try {
    Reader r{root, "", {}};
    if (auto v = r.get("scenario")) {
      const std::string s = v->is_string() ? v->get<std::string>() : "";
      if (s == "eclipse") cfg.kind = ScenarioKind::Eclipse;
      else if (s == "downgrade") cfg.kind = ScenarioKind::Downgrade;
      else if (s == "countermeasures") cfg.kind = ScenarioKind::Countermeasures;
      else throw std::invalid_argument("scenario must be eclipse, downgrade or countermeasures");
    }
    r.u64("seed", cfg.seed);
    r.duration("warmup", cfg.warmup);
    r.duration("duration", cfg.duration);
    r.duration("snapshot_interval", cfg.snapshot_interval, 1);
    r.boolean("log_events", cfg.log_events);
    if (auto t = r.object("topology")) {
      Reader s{*t, "topology.", {}};
      s.size("honest_nodes", cfg.topology.honest_nodes, 0, 10000);
      s.size("hosts_per_subnet", cfg.topology.hosts_per_subnet, 1, 250);
      s.size("honest_max_connections", cfg.topology.honest_max_connections, 12, 10000);
      s.real("v1_only_fraction", cfg.topology.v1_only_fraction, 0, 1);
      s.duration("block_interval", cfg.topology.block_interval, 1);
      s.duration("tx_interval", cfg.topology.tx_interval);
      s.check_unknown();
    }
    if (auto t = r.object("victim")) {
      Reader s{*t, "victim.", {}};
      s.size("max_connections", cfg.victim.max_connections, 12, 10000);
      s.boolean("c3c", cfg.victim.c3c);
      s.boolean("c3c_network_wide", cfg.victim.c3c_network_wide);
      if (auto v = s.get("c6_threshold")) {
        if (v->is_null()) {
          cfg.victim.c6_threshold.reset();
        } else if (v->is_number_integer() && v->get<int>() >= 1 && v->get<int>() <= 100) {
          cfg.victim.c6_threshold = v->get<int>();
        } else {
          throw std::invalid_argument("victim.c6_threshold must be null or a percentage");
        }
      }
      s.check_unknown();
    }
    if (auto t = r.object("attack")) {
      Reader s{*t, "attack.", {}};
      if (auto v = s.get("mode")) {
        auto m = v->is_string() ? adversary_mode_from(v->get<std::string>()) : std::nullopt;
        if (!m) throw std::invalid_argument("attack.mode must be off, eclipse or downgrade");
        cfg.attack.mode = *m;
      }
      s.size("attacker_addrs", cfg.attack.attacker_addrs, 0, 240);
      s.duration("stagger_interval", cfg.attack.stagger_interval);
      s.boolean("drop_reconnect_syn", cfg.attack.drop_reconnect_syn);
      s.size("replay_len", cfg.attack.replay_len, 20, 1 << 24);
      s.u64("reset_segment_index", cfg.attack.reset_segment_index);
      if (cfg.attack.reset_segment_index == 0) throw std::invalid_argument("attack.reset_segment_index starts at 1");
      s.check_unknown();
    }
    if (auto t = r.object("flood")) {
      Reader s{*t, "flood.", {}};
      s.size("connections", cfg.flood.connections, 0, 60000);
      s.boolean("distinct_groups", cfg.flood.distinct_groups);
      s.duration("spacing", cfg.flood.spacing);
      s.check_unknown();
    }
    r.check_unknown();
  } catch (const std::exception& e) {
    return std::string(e.what());
  }
  if (cfg.attack.mode == AdversaryMode::Eclipse && cfg.kind == ScenarioKind::Eclipse && cfg.attack.attacker_addrs < 10)
    return std::string("attack.attacker_addrs must provide at least 10 distinct groups");
  return cfg;
}

std::string config_to_json(const ScenarioConfig& c) {
  ordered_json j;
  j["scenario"] = to_string(c.kind);
  j["seed"] = c.seed;
  j["warmup"] = to_seconds(c.warmup);
  j["duration"] = to_seconds(c.duration);
  j["snapshot_interval"] = to_seconds(c.snapshot_interval);
  j["log_events"] = c.log_events;
  j["topology"] = {{"honest_nodes", c.topology.honest_nodes},
                   {"hosts_per_subnet", c.topology.hosts_per_subnet},
                   {"honest_max_connections", c.topology.honest_max_connections},
                   {"v1_only_fraction", c.topology.v1_only_fraction},
                   {"block_interval", to_seconds(c.topology.block_interval)},
                   {"tx_interval", to_seconds(c.topology.tx_interval)}};
  ordered_json victim = {{"max_connections", c.victim.max_connections},
                         {"c3c", c.victim.c3c},
                         {"c3c_network_wide", c.victim.c3c_network_wide}};
  victim["c6_threshold"] = c.victim.c6_threshold ? ordered_json(*c.victim.c6_threshold) : ordered_json(nullptr);
  j["victim"] = victim;
  j["attack"] = {{"mode", to_string(c.attack.mode)},
                 {"attacker_addrs", c.attack.attacker_addrs},
                 {"stagger_interval", to_seconds(c.attack.stagger_interval)},
                 {"drop_reconnect_syn", c.attack.drop_reconnect_syn},
                 {"replay_len", c.attack.replay_len},
                 {"reset_segment_index", c.attack.reset_segment_index}};
  j["flood"] = {{"connections", c.flood.connections},
                {"distinct_groups", c.flood.distinct_groups},
                {"spacing", to_seconds(c.flood.spacing)}};
  return j.dump(2);
}

}  // namespace v2net
