#pragma once

// Simulated node: connection slots, V1/V2 transport per peer, handshake and
// keepalive timers, sync checks, inbound eviction, address management and a
// small block/transaction traffic model.

#include <v2net/addrman.hpp>
#include <v2net/classifier.hpp>
#include <v2net/handshake.hpp>
#include <v2net/netsim.hpp>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace v2net {

enum class Direction { Inbound, Outbound, Feeler };
std::string_view to_string(Direction d);

enum class ProfileKind { Full, Minimal, Attacker };
std::string_view to_string(ProfileKind k);

struct BehaviorProfile {
  bool responds_to_ping = true;
  bool echoes_getheaders = false;
  bool relays_data = true;

  static BehaviorProfile full() { return {true, false, true}; }
  static BehaviorProfile minimal() { return {true, true, false}; }
};

struct Countermeasures {
  bool c3c = false;
  std::optional<int> c6_threshold;  // percent of inbound capacity
};

struct NodeTiming {
  SimTime handshake_timeout = 60 * kSeconds;
  SimTime ping_interval = 120 * kSeconds;
  SimTime inactivity_timeout = 1200 * kSeconds;
  SimTime sync_interval = 20 * kMinutes;
  SimTime headers_timeout = 120 * kSeconds;
  SimTime outbound_tick = 2 * kSeconds;
  SimTime feeler_interval = 120 * kSeconds;
  SimTime retry_window = 10 * kMinutes;
  SimTime block_interval = 600 * kSeconds;
  SimTime addr_interval = 1 * kHours;
  /// Mean time between locally generated transaction announcements; 0 = none.
  SimTime tx_interval = 0;
  SimTime trickle_inbound = 5 * kSeconds;
  SimTime trickle_outbound = 2 * kSeconds;
};

struct NodeConfig {
  std::string name;
  NetAddress addr;
  uint64_t services = services::kNetwork | services::kWitness | services::kP2PV2;
  std::string user_agent = "/Satoshi:27.0.0/";
  size_t max_connections = 125;
  size_t outbound_slots = 10;
  size_t feeler_slots = 1;
  Countermeasures countermeasures;
  ProfileKind kind = ProfileKind::Full;
  BehaviorProfile profile = BehaviorProfile::full();
  uint64_t required_outbound_flags = services::kNetwork | services::kWitness;
  bool open_outbound = true;
  bool run_feelers = true;
  /// ADDR payload sent after each handshake (and hourly for attackers);
  /// empty means "advertise my own address".
  std::vector<AddrEntry> advertise;
  NodeTiming timing;
  HandshakeConfig handshake;
  AddrmanConfig addrman;
  uint64_t addrman_key = 0;
  /// Keep the sizes and true types of outgoing V2 application segments.
  bool record_traffic = false;
  /// Write every message as its own segment (no coalescing).
  bool segment_per_message = false;

  size_t inbound_capacity() const {
    const size_t reserved = outbound_slots + feeler_slots;
    return max_connections > reserved ? max_connections - reserved : 0;
  }
  bool v2_capable() const { return (services & services::kP2PV2) != 0; }
};

struct ChainTip {
  uint32_t height = 0;
  uint32_t time = 0;  // seconds
};

struct PeerInfo {
  ConnId conn = 0;
  NetAddress remote;
  Direction dir = Direction::Inbound;
  Protocol proto = Protocol::V1;
  bool proto_known = false;
  std::string user_agent;
  uint64_t services = 0;
  SimTime connected_at = 0;
  SimTime last_recv = 0;
  SimTime last_ping_sent = 0;
  SimTime last_fresh_headers = 0;
  SimTime headers_deadline = 0;  // 0 when no sync check is pending
  uint64_t ping_nonce = 0;
  bool ping_outstanding = false;
  bool provides_data = false;
  bool connected = false;  // transport-level connection is up
  bool bytes_received = false;
  bool version_received = false;
  bool established = false;  // VERSION and VERACK exchanged
  bool force_v1 = false;
  std::unique_ptr<V2Handshake> hs;
  std::optional<TransportSession> session;
  std::vector<InvItem> pending_inv;
  EventId handshake_timer = 0;
  EventId keepalive_timer = 0;
  EventId trickle_timer = 0;
  EventId headers_timer = 0;
  EventId addr_timer = 0;
};

/// One successfully established connection, as seen by this node.
struct ConnRecord {
  SimTime time = 0;
  Direction dir = Direction::Inbound;
  Protocol proto = Protocol::V1;
  NetAddress remote;
  std::string user_agent;
  bool remote_v2 = false;
};

struct NodeStats {
  uint64_t c6_rejects = 0;
  uint64_t evictions = 0;
  uint64_t decode_failures = 0;
  uint64_t too_large = 0;
  uint64_t handshake_timeouts = 0;
  uint64_t inactivity_disconnects = 0;
  uint64_t sync_disconnects = 0;
  uint64_t v1_fallbacks = 0;
  uint64_t fallback_give_ups = 0;
  uint64_t connect_failures = 0;
};

class Node : public Endpoint {
 public:
  Node(Simulator& sim, Network& net, NodeConfig cfg, uint64_t seed);
  ~Node() override;
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  void start();
  /// Closes every connection and cancels all timers; the address tables and
  /// chain tip survive.
  void stop();
  void restart() {
    stop();
    start();
  }
  bool running() const { return m_running; }

  /// Opens a connection regardless of slot policy (used by attacker hosts
  /// and tests). Returns the connection id.
  ConnId connect_to(const NetAddress& remote, Direction dir, bool use_v2);
  void disconnect(ConnId conn, std::string_view reason);

  /// New block produced here; adopted and announced to peers.
  void mine_block(uint32_t height);

  const NodeConfig& config() const { return m_cfg; }
  NodeConfig& mutable_config() { return m_cfg; }
  const std::string& name() const { return m_cfg.name; }
  const NetAddress& addr() const { return m_cfg.addr; }
  AddrTables& addrman() { return m_addrman; }
  const AddrTables& addrman() const { return m_addrman; }
  const ChainTip& tip() const { return m_tip; }

  size_t count(Direction d, bool established_only = false) const;
  size_t inbound_count() const { return count(Direction::Inbound); }
  size_t outbound_count() const { return count(Direction::Outbound); }
  size_t connection_count() const { return m_peers.size(); }
  const PeerInfo* peer(ConnId conn) const;
  std::vector<const PeerInfo*> peers() const;
  const std::vector<ConnRecord>& history() const { return m_history; }
  const NodeStats& stats() const { return m_stats; }
  const std::vector<Segment>& traffic() const { return m_traffic; }

  /// Per-node JSON status: peer list with direction, protocol and agent.
  std::string status_json() const;

  /// Picks the inbound peer the simplified eviction policy would drop.
  std::optional<ConnId> eviction_candidate() const;

  // Endpoint
  bool on_inbound(ConnId conn, const NetAddress& remote) override;
  void on_connected(ConnId conn) override;
  void on_connect_failed(ConnId conn) override;
  void on_data(ConnId conn, Bytes data) override;
  void on_closed(ConnId conn, CloseKind kind) override;

 private:
  PeerInfo* find(ConnId conn);
  void remove_peer(ConnId conn, std::string_view event, std::string_view reason);
  void cancel_timers(PeerInfo& p);
  void log(std::string_view event, std::string details = {});

  void send_raw(PeerInfo& p, Bytes data);
  void send_messages(PeerInfo& p, std::vector<Message> msgs);
  void send_message(PeerInfo& p, Message m) { send_messages(p, {std::move(m)}); }
  void handle_payload(PeerInfo& p, Bytes data);
  void handle_message(PeerInfo& p, const Message& m);
  void on_established(PeerInfo& p);
  Message version_message(const PeerInfo& p);
  std::vector<AddrEntry> advertisement() const;

  void schedule_keepalive(PeerInfo& p);
  void keepalive_tick(ConnId conn);
  void start_sync_check(PeerInfo& p);
  void flush_inv(ConnId conn);
  void schedule_addr(PeerInfo& p);

  void outbound_tick();
  void feeler_tick();
  void tx_tick();
  void announce_tip(ConnId except);

  Simulator& m_sim;
  Network& m_net;
  NodeConfig m_cfg;
  Rng m_rng;
  AddrTables m_addrman;
  ChainTip m_tip;
  std::map<uint32_t, uint32_t> m_announced;  // height -> header time
  std::map<ConnId, PeerInfo> m_peers;
  std::unordered_map<NetAddress, SimTime, NetAddressHash> m_last_attempt;
  std::vector<ConnRecord> m_history;
  std::vector<Segment> m_traffic;
  NodeStats m_stats;
  bool m_running = false;
  uint16_t m_next_port = 20000;
  uint64_t m_tx_counter = 0;
  EventId m_outbound_timer = 0;
  EventId m_feeler_timer = 0;
  EventId m_tx_timer = 0;
};

}  // namespace v2net
