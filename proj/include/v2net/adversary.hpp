#pragma once

// In-path adversary attached to every channel that touches one target node.
// Eclipse mode replays a stored payload so the honest end's length decode
// fails; downgrade mode turns the responder's key-exchange reply into a
// reset so V2 initiators fall back to V1.

#include <v2net/netsim.hpp>
#include <v2net/peer_node.hpp>

#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

namespace v2net {

enum class AdversaryMode { Off, Eclipse, Downgrade };
std::string_view to_string(AdversaryMode m);
std::optional<AdversaryMode> adversary_mode_from(std::string_view s);

struct AdversaryPolicy {
  AdversaryMode mode = AdversaryMode::Off;
  NetAddress target;
  /// Payload length of the replay class (PING/PONG by default).
  size_t replay_len = 29;
  /// At most one replacement per interval; 0 disables staggering.
  SimTime stagger_interval = 0;
  bool drop_reconnect_syn = true;
  /// IPs the adversary controls; their channels are left alone.
  std::vector<NetAddress> attacker_ips;
  /// Which responder-to-initiator segment becomes a reset (1 = the key
  /// exchange reply). Later indices land after the window and are misses.
  uint64_t reset_segment_index = 1;
  bool record_trace = true;
};

struct VerdictRecord {
  SimTime time = 0;
  ConnId conn = 0;
  bool from_target = false;
  size_t length = 0;
  std::string classification;
  Verdict verdict = Verdict::Forward;
};

struct AdversaryStats {
  uint64_t observed = 0;
  uint64_t stored = 0;
  uint64_t replaced = 0;
  uint64_t closes_after_replay = 0;
  uint64_t syn_drops = 0;
  uint64_t resets = 0;
  uint64_t misses = 0;
  uint64_t v1_untouched = 0;
};

class Adversary : public PathHook {
 public:
  Adversary(Simulator& sim, AdversaryPolicy policy);

  bool on_syn(const NetAddress& from, const NetAddress& to) override;
  SegmentDecision on_segment(const SegmentInfo& seg, const Bytes& payload) override;
  void on_close(ConnId conn, const NetAddress& closer, const NetAddress& other, CloseKind kind) override;

  const AdversaryPolicy& policy() const { return m_policy; }
  void set_mode(AdversaryMode m) { m_policy.mode = m; }
  const AdversaryStats& stats() const { return m_stats; }
  const std::vector<VerdictRecord>& trace() const { return m_trace; }
  const std::set<NetAddress>& blocked() const { return m_blocked; }
  bool has_stored(ConnId conn) const;

 private:
  struct ChannelState {
    std::optional<Bytes> stored;
    bool replayed = false;
    bool v2_candidate = false;
    bool reset_done = false;
    uint64_t initiator_segments = 0;
  };

  bool is_target(const NetAddress& a) const { return a.same_ip(m_policy.target); }
  bool is_attacker(const NetAddress& a) const;
  SegmentDecision eclipse_step(const SegmentInfo& seg, const Bytes& payload, ChannelState& st);
  SegmentDecision downgrade_step(const SegmentInfo& seg, const Bytes& payload, ChannelState& st);

  Simulator& m_sim;
  AdversaryPolicy m_policy;
  AdversaryStats m_stats;
  std::unordered_map<ConnId, ChannelState> m_channels;
  std::set<NetAddress> m_blocked;  // IPs (port 0)
  std::vector<VerdictRecord> m_trace;
  std::optional<SimTime> m_last_replay;
};

/// Keeps the target's inbound slots filled with connections from one
/// attacker host (one IP, many ports).
class InboundFiller {
 public:
  InboundFiller(Simulator& sim, Node& host, Node& target, SimTime period = 1 * kSeconds);
  void start();
  void stop();
  uint64_t attempts() const { return m_attempts; }

 private:
  void tick();
  Simulator& m_sim;
  Node& m_host;
  Node& m_target;
  SimTime m_period;
  EventId m_timer = 0;
  uint64_t m_attempts = 0;
};

}  // namespace v2net
