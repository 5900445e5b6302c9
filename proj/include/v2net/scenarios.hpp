#pragma once

// Topology construction and the three scenario runners.

#include <v2net/adversary.hpp>
#include <v2net/config.hpp>
#include <v2net/peer_node.hpp>
#include <v2net/report.hpp>

#include <memory>
#include <vector>

namespace v2net {

inline constexpr std::string_view kAttackerAgent = "Attacker";
bool is_attacker_agent(std::string_view ua);

/// Counts the target's established, non-feeler peers.
Snapshot take_snapshot(const Node& n, SimTime t);
/// Every outbound and inbound slot is held by an established attacker peer.
bool fully_eclipsed(const Node& n);

NetAddress honest_address(size_t i, size_t hosts_per_subnet);
NetAddress attacker_listener_address(size_t i);
inline const NetAddress kVictimAddress = NetAddress::ipv4(193, 168, 1, 2);
inline const NetAddress kAttackerHostAddress = NetAddress::ipv4(11, 250, 0, 1);

/// Honest network plus victim, with the attacker side built on demand.
class World {
 public:
  explicit World(const ScenarioConfig& cfg);
  ~World();

  void start();
  /// Starts attacker listeners, the inbound filler and the in-path hook.
  void launch_eclipse();
  void attach_downgrade();
  void restart_all();
  void run_until(SimTime t) { sim.run_until(t); }
  void start_snapshots(SimTime interval);

  Simulator sim;
  Network net;
  ScenarioConfig cfg;
  std::vector<std::unique_ptr<Node>> honest;
  std::unique_ptr<Node> victim;
  std::vector<std::unique_ptr<Node>> attackers;
  std::unique_ptr<Node> attacker_host;
  std::unique_ptr<Adversary> adversary;
  std::unique_ptr<InboundFiller> filler;
  std::vector<Snapshot> snapshots;

 private:
  void block_tick();
  NodeConfig honest_config(size_t i, bool v2) const;
  NodeConfig attacker_config(const std::string& name, const NetAddress& addr) const;
  std::vector<AddrEntry> attacker_ads() const;

  Rng m_rng;
  uint32_t m_height = 0;
};

RunReport run_eclipse_scenario(const ScenarioConfig& cfg);
RunReport run_downgrade_scenario(const ScenarioConfig& cfg);
RunReport run_countermeasure_scenario(const ScenarioConfig& cfg);
RunReport run_scenario(const ScenarioConfig& cfg);

/// Runs an attack-free honest network and returns every outgoing V2
/// application segment with its true message types.
std::vector<Segment> simulate_traffic(size_t honest_nodes, SimTime duration, uint64_t seed, bool per_message);

}  // namespace v2net
