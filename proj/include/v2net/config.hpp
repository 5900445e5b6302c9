#pragma once

// Scenario configuration. Files are JSON objects; every key is optional and
// unknown keys are rejected. Durations are given in seconds.

#include <v2net/adversary.hpp>

#include <optional>
#include <string>

namespace v2net {

enum class ScenarioKind { Eclipse, Downgrade, Countermeasures };
std::string_view to_string(ScenarioKind k);

struct TopologyConfig {
  size_t honest_nodes = 50;
  size_t hosts_per_subnet = 3;
  size_t honest_max_connections = 125;
  /// Share of honest nodes that do not advertise or speak V2.
  double v1_only_fraction = 0.0;
  SimTime block_interval = 600 * kSeconds;
  SimTime tx_interval = 60 * kSeconds;
};

struct VictimConfig {
  size_t max_connections = 50;
  bool c3c = false;
  /// Apply c3c to every honest node as well.
  bool c3c_network_wide = true;
  std::optional<int> c6_threshold;
};

struct AttackConfig {
  AdversaryMode mode = AdversaryMode::Eclipse;
  size_t attacker_addrs = 20;
  SimTime stagger_interval = 0;
  bool drop_reconnect_syn = true;
  size_t replay_len = 29;
  uint64_t reset_segment_index = 1;
};

struct FloodConfig {
  size_t connections = 60;
  bool distinct_groups = false;
  SimTime spacing = 1 * kSeconds;
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::Eclipse;
  uint64_t seed = 1;
  TopologyConfig topology;
  VictimConfig victim;
  AttackConfig attack;
  FloodConfig flood;
  SimTime warmup = 2 * kHours;
  SimTime duration = 48 * kHours;
  SimTime snapshot_interval = 10 * kMinutes;
  bool log_events = true;
};

ScenarioConfig default_config(ScenarioKind kind);

/// Overlays the JSON object onto `base`. Returns an error message for
/// malformed JSON, unknown keys or out-of-range values.
Expected<ScenarioConfig, std::string> parse_config(std::string_view json_text, ScenarioConfig base);
std::string config_to_json(const ScenarioConfig& cfg);

}  // namespace v2net
