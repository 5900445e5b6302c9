#include <v2net/adversary.hpp>

#include <v2net/classifier.hpp>

namespace v2net {

namespace {

NetAddress ip_only(const NetAddress& a) { return a.with_port(0); }

std::string describe(size_t len) {
  auto c = classify(len);
  if (!c) return "not-v2";
  if (c->empty_or_decoy) return "empty";
  std::string out;
  for (const auto& cand : c->candidates) {
    if (out.find(cand.type) != std::string::npos) continue;
    if (!out.empty()) out += '/';
    out += cand.type;
  }
  return out.empty() ? "unknown" : out;
}

}  // namespace

std::string_view to_string(AdversaryMode m) {
  switch (m) {
    case AdversaryMode::Off: return "off";
    case AdversaryMode::Eclipse: return "eclipse";
    case AdversaryMode::Downgrade: return "downgrade";
  }
  return "?";
}

std::optional<AdversaryMode> adversary_mode_from(std::string_view s) {
  if (s == "off") return AdversaryMode::Off;
  if (s == "eclipse") return AdversaryMode::Eclipse;
  if (s == "downgrade") return AdversaryMode::Downgrade;
  return std::nullopt;
}

Adversary::Adversary(Simulator& sim, AdversaryPolicy policy) : m_sim(sim), m_policy(std::move(policy)) {}

bool Adversary::is_attacker(const NetAddress& a) const {
  for (const auto& x : m_policy.attacker_ips)
    if (x.same_ip(a)) return true;
  return false;
}

bool Adversary::has_stored(ConnId conn) const {
  auto it = m_channels.find(conn);
  return it != m_channels.end() && it->second.stored.has_value();
}

bool Adversary::on_syn(const NetAddress& from, const NetAddress& to) {
  if (m_policy.mode != AdversaryMode::Eclipse || !m_policy.drop_reconnect_syn) return true;
  const bool touches = is_target(from) || is_target(to);
  const NetAddress& other = is_target(from) ? to : from;
  if (touches && m_blocked.count(ip_only(other))) {
    ++m_stats.syn_drops;
    m_sim.log("adversary", "syn-drop", from.to_string() + " -> " + to.to_string());
    return false;
  }
  return true;
}

SegmentDecision Adversary::on_segment(const SegmentInfo& seg, const Bytes& payload) {
  if (m_policy.mode == AdversaryMode::Off) return {};
  if (!is_target(seg.from) && !is_target(seg.to)) return {};
  ++m_stats.observed;
  ChannelState& st = m_channels[seg.conn];
  SegmentDecision d = m_policy.mode == AdversaryMode::Eclipse ? eclipse_step(seg, payload, st)
                                                              : downgrade_step(seg, payload, st);
  if (m_policy.record_trace) {
    m_trace.push_back(VerdictRecord{seg.time, seg.conn, is_target(seg.from), payload.size(), describe(payload.size()),
                                    d.verdict});
  }
  return d;
}

SegmentDecision Adversary::eclipse_step(const SegmentInfo& seg, const Bytes& payload, ChannelState& st) {
  if (!is_target(seg.from) || is_attacker(seg.to)) return {};
  if (payload.size() != m_policy.replay_len) return {};
  if (!st.stored) {
    st.stored = payload;
    ++m_stats.stored;
    return {};
  }
  if (st.replayed) return {};
  if (m_policy.stagger_interval > 0 && m_last_replay && m_sim.now() - *m_last_replay < m_policy.stagger_interval) {
    return {};
  }
  st.replayed = true;
  m_last_replay = m_sim.now();
  ++m_stats.replaced;
  m_sim.log("adversary", "replay", seg.from.to_string() + " -> " + seg.to.to_string());
  return SegmentDecision{Verdict::Replace, *st.stored};
}

SegmentDecision Adversary::downgrade_step(const SegmentInfo& seg, const Bytes& payload, ChannelState& st) {
  if (seg.from_initiator) {
    ++st.initiator_segments;
    if (seg.index == 1) {
      if (first_payload_protocol(payload.size()) == FirstPayloadClass::V1) {
        ++m_stats.v1_untouched;
      } else {
        st.v2_candidate = true;
      }
    }
    return {};
  }
  if (!st.v2_candidate || st.reset_done || seg.index != m_policy.reset_segment_index) return {};
  st.reset_done = true;
  ++m_stats.resets;
  // The initiator's second segment carries its terminator: once it has been
  // sent the key exchange is over and a reset no longer triggers fallback.
  if (st.initiator_segments >= 2) {
    ++m_stats.misses;
    m_sim.log("adversary", "downgrade-miss", seg.from.to_string() + " -> " + seg.to.to_string());
  } else {
    m_sim.log("adversary", "downgrade-reset", seg.from.to_string() + " -> " + seg.to.to_string());
  }
  return SegmentDecision{Verdict::Reset, {}};
}

void Adversary::on_close(ConnId conn, const NetAddress& closer, const NetAddress& other, CloseKind kind) {
  auto it = m_channels.find(conn);
  if (it == m_channels.end()) return;
  const bool replayed = it->second.replayed;
  m_channels.erase(it);
  if (m_policy.mode != AdversaryMode::Eclipse || !replayed) return;
  if (kind == CloseKind::Graceful && !is_target(closer)) ++m_stats.closes_after_replay;
  const NetAddress& honest = is_target(closer) ? other : closer;
  if (m_policy.drop_reconnect_syn && !is_attacker(honest)) {
    m_blocked.insert(ip_only(honest));
    m_sim.log("adversary", "block", honest.ip_string());
  }
}

InboundFiller::InboundFiller(Simulator& sim, Node& host, Node& target, SimTime period)
    : m_sim(sim), m_host(host), m_target(target), m_period(period) {}

void InboundFiller::start() {
  if (!m_timer) m_timer = m_sim.after(0, EventKind::Timer, [this] { tick(); });
}

void InboundFiller::stop() {
  m_sim.cancel(m_timer);
  m_timer = 0;
}

void InboundFiller::tick() {
  m_timer = m_sim.after(m_period, EventKind::Timer, [this] { tick(); });
  if (!m_target.running()) return;
  size_t in_flight = 0;
  for (const PeerInfo* p : m_host.peers()) in_flight += !p->connected;
  const size_t cap = m_target.config().inbound_capacity();
  const size_t used = m_target.inbound_count() + in_flight;
  for (size_t i = used; i < cap; ++i) {
    m_host.connect_to(m_target.addr(), Direction::Outbound, false);
    ++m_attempts;
  }
}

}  // namespace v2net
