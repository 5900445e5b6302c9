#include <v2net/peer_node.hpp>

#include <json.hpp>

#include <algorithm>
#include <tuple>

namespace v2net {

namespace {

constexpr uint32_t kMsgBlock = 2;

uint32_t sim_seconds(SimTime t) { return static_cast<uint32_t>(t / kSeconds); }

}  // namespace

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Inbound: return "inbound";
    case Direction::Outbound: return "outbound";
    case Direction::Feeler: return "feeler";
  }
  return "?";
}

std::string_view to_string(ProfileKind k) {
  switch (k) {
    case ProfileKind::Full: return "full";
    case ProfileKind::Minimal: return "minimal";
    case ProfileKind::Attacker: return "attacker";
  }
  return "?";
}

Node::Node(Simulator& sim, Network& net, NodeConfig cfg, uint64_t seed)
    : m_sim(sim), m_net(net), m_cfg(std::move(cfg)), m_rng(seed), m_addrman(m_cfg.addrman_key, m_cfg.addrman) {}

Node::~Node() {
  if (m_running) m_net.unlisten(m_cfg.addr);
}

void Node::log(std::string_view event, std::string details) {
  m_sim.log(m_cfg.name, std::string(event), std::move(details));
}

void Node::start() {
  if (m_running) return;
  m_running = true;
  m_net.listen(m_cfg.addr, this);
  log("start");
  if (m_cfg.kind != ProfileKind::Full) return;
  if (m_cfg.open_outbound) {
    m_outbound_timer = m_sim.after(static_cast<SimTime>(m_rng.uniform(m_cfg.timing.outbound_tick)) + 1, EventKind::Timer,
                                   [this] { outbound_tick(); });
  }
  if (m_cfg.run_feelers && m_cfg.feeler_slots > 0) {
    m_feeler_timer = m_sim.after(m_cfg.timing.feeler_interval, EventKind::Timer, [this] { feeler_tick(); });
  }
  if (m_cfg.timing.tx_interval > 0) {
    m_tx_timer = m_sim.after(seconds(m_rng.exponential(to_seconds(m_cfg.timing.tx_interval))), EventKind::Timer,
                             [this] { tx_tick(); });
  }
}

void Node::stop() {
  if (!m_running) return;
  for (auto& [conn, p] : m_peers) {
    cancel_timers(p);
    m_net.close(conn, this);
  }
  m_peers.clear();
  m_sim.cancel(m_outbound_timer);
  m_sim.cancel(m_feeler_timer);
  m_sim.cancel(m_tx_timer);
  m_outbound_timer = m_feeler_timer = m_tx_timer = 0;
  m_last_attempt.clear();
  m_net.unlisten(m_cfg.addr);
  m_running = false;
  log("stop");
}

PeerInfo* Node::find(ConnId conn) {
  auto it = m_peers.find(conn);
  return it == m_peers.end() ? nullptr : &it->second;
}

const PeerInfo* Node::peer(ConnId conn) const {
  auto it = m_peers.find(conn);
  return it == m_peers.end() ? nullptr : &it->second;
}

std::vector<const PeerInfo*> Node::peers() const {
  std::vector<const PeerInfo*> out;
  for (const auto& [id, p] : m_peers) out.push_back(&p);
  return out;
}

size_t Node::count(Direction d, bool established_only) const {
  size_t n = 0;
  for (const auto& [id, p] : m_peers) n += p.dir == d && (!established_only || p.established);
  return n;
}

void Node::cancel_timers(PeerInfo& p) {
  for (EventId* t : {&p.handshake_timer, &p.keepalive_timer, &p.trickle_timer, &p.headers_timer, &p.addr_timer}) {
    m_sim.cancel(*t);
    *t = 0;
  }
}

void Node::remove_peer(ConnId conn, std::string_view event, std::string_view reason) {
  auto it = m_peers.find(conn);
  if (it == m_peers.end()) return;
  cancel_timers(it->second);
  log(event, it->second.remote.to_string() + " " + std::string(to_string(it->second.dir)) + " " + std::string(reason));
  m_peers.erase(it);
}

void Node::disconnect(ConnId conn, std::string_view reason) {
  if (!find(conn)) return;
  m_net.close(conn, this);
  remove_peer(conn, "disconnect", reason);
}

ConnId Node::connect_to(const NetAddress& remote, Direction dir, bool use_v2) {
  const NetAddress local = m_cfg.addr.with_port(m_next_port);
  m_next_port = m_next_port >= 60000 ? 20000 : static_cast<uint16_t>(m_next_port + 1);
  const ConnId conn = m_net.connect(this, local, remote);
  PeerInfo& p = m_peers[conn];
  p.conn = conn;
  p.remote = remote;
  p.dir = dir;
  p.force_v1 = !use_v2;
  p.connected_at = m_sim.now();
  m_last_attempt[remote] = m_sim.now();
  log("connect-attempt", remote.to_string() + " " + std::string(to_string(dir)) + (use_v2 ? " v2" : " v1"));
  return conn;
}

void Node::on_connected(ConnId conn) {
  PeerInfo* p = find(conn);
  if (!p) return;
  p->connected = true;
  p->connected_at = p->last_recv = m_sim.now();
  p->proto_known = true;
  if (p->force_v1) {
    p->proto = Protocol::V1;
    p->session = TransportSession::v1();
    send_message(*p, version_message(*p));
  } else {
    p->proto = Protocol::V2;
    p->hs = std::make_unique<V2Handshake>(Role::Initiator, m_rng, m_cfg.handshake);
    send_raw(*p, p->hs->start());
  }
}

void Node::on_connect_failed(ConnId conn) {
  ++m_stats.connect_failures;
  remove_peer(conn, "connect-failed", "");
}

std::optional<ConnId> Node::eviction_candidate() const {
  std::optional<ConnId> worst;
  std::tuple<int, size_t, SimTime> worst_key{};
  for (const auto& [id, p] : m_peers) {
    if (p.dir != Direction::Inbound) continue;
    size_t same_ip = 0;
    for (const auto& [id2, q] : m_peers) same_ip += q.dir == Direction::Inbound && q.remote.same_ip(p.remote);
    std::tuple<int, size_t, SimTime> key{p.provides_data ? 0 : 1, same_ip, p.connected_at};
    if (!worst || key > worst_key) {
      worst = id;
      worst_key = key;
    }
  }
  return worst;
}

bool Node::on_inbound(ConnId conn, const NetAddress& remote) {
  if (!m_running) return false;
  const size_t cap = m_cfg.inbound_capacity();
  const size_t inbound = inbound_count();
  if (m_cfg.countermeasures.c6_threshold && cap > 0) {
    const bool over = inbound * 100 >= static_cast<size_t>(*m_cfg.countermeasures.c6_threshold) * cap;
    bool dup = false;
    for (const auto& [id, p] : m_peers) dup |= p.dir == Direction::Inbound && p.remote.group() == remote.group();
    if (over && dup) {
      ++m_stats.c6_rejects;
      log("c6-reject", remote.to_string());
      return false;
    }
  }
  if (inbound >= cap) {
    auto victim = eviction_candidate();
    if (!victim) return false;
    ++m_stats.evictions;
    m_net.close(*victim, this);
    remove_peer(*victim, "evict", "inbound-full");
  }
  PeerInfo& p = m_peers[conn];
  p.conn = conn;
  p.remote = remote;
  p.dir = Direction::Inbound;
  p.connected = true;
  p.connected_at = p.last_recv = m_sim.now();
  if (m_cfg.kind == ProfileKind::Full) {
    p.handshake_timer = m_sim.after(m_cfg.timing.handshake_timeout, EventKind::Timer, [this, conn] {
      PeerInfo* q = find(conn);
      if (!q) return;
      q->handshake_timer = 0;
      if (!q->bytes_received) {
        ++m_stats.handshake_timeouts;
        disconnect(conn, "handshake-timeout");
      }
    });
  }
  log("inbound", remote.to_string());
  return true;
}

void Node::on_closed(ConnId conn, CloseKind kind) {
  PeerInfo* p = find(conn);
  if (!p) return;
  if (p->dir != Direction::Inbound && p->hs && !p->hs->complete()) {
    const auto phase = p->hs->phase();
    const NetAddress remote = p->remote;
    const Direction dir = p->dir;
    remove_peer(conn, "closed", std::string(to_string(kind)) + " during " + std::string(to_string(phase)));
    if (v1_fallback_decision(phase, m_cfg.countermeasures.c3c) == FallbackDecision::RetryV1) {
      ++m_stats.v1_fallbacks;
      log("v1-fallback", remote.to_string());
      if (m_running) connect_to(remote, dir, false);
    } else {
      ++m_stats.fallback_give_ups;
      log("v2-give-up", remote.to_string());
    }
    return;
  }
  remove_peer(conn, "closed", to_string(kind));
}

void Node::send_raw(PeerInfo& p, Bytes data) {
  if (!data.empty()) m_net.send(p.conn, this, std::move(data));
}

void Node::send_messages(PeerInfo& p, std::vector<Message> msgs) {
  if (!p.session) return;
  if (p.established && !p.pending_inv.empty()) {
    msgs.push_back(make_inv(p.pending_inv));
    p.pending_inv.clear();
    m_sim.cancel(p.trickle_timer);
    p.trickle_timer = 0;
  }
  if (msgs.empty()) return;
  if (m_cfg.segment_per_message && msgs.size() > 1) {
    for (auto& m : msgs) send_messages(p, {std::move(m)});
    return;
  }
  Bytes out;
  if (p.proto == Protocol::V2) {
    out = p.session->encode_messages(msgs);
    if (m_cfg.record_traffic) {
      Segment seg{0, m_sim.now(), out.size(), {}};
      for (const auto& m : msgs) seg.truth.push_back(m.type);
      m_traffic.push_back(std::move(seg));
    }
  } else {
    for (const auto& m : msgs) append(out, v1_frame(m));
  }
  send_raw(p, std::move(out));
}

Message Node::version_message(const PeerInfo& p) {
  VersionInfo v;
  v.services = m_cfg.services;
  v.timestamp = sim_seconds(m_sim.now());
  v.nonce = m_rng.next();
  v.user_agent = m_cfg.user_agent;
  v.start_height = static_cast<int32_t>(m_tip.height);
  v.relay = m_cfg.profile.relays_data;
  (void)p;
  return make_version(v);
}

std::vector<AddrEntry> Node::advertisement() const {
  if (!m_cfg.advertise.empty()) {
    auto out = m_cfg.advertise;
    for (auto& e : out) e.time = sim_seconds(m_sim.now());
    return out;
  }
  return {AddrEntry{sim_seconds(m_sim.now()), m_cfg.services, m_cfg.addr}};
}

void Node::on_data(ConnId conn, Bytes data) {
  PeerInfo* p = find(conn);
  if (!p) return;
  p->last_recv = m_sim.now();
  if (!p->bytes_received) {
    p->bytes_received = true;
    m_sim.cancel(p->handshake_timer);
    p->handshake_timer = 0;
  }
  if (!p->proto_known) {
    p->proto_known = true;
    if (looks_like_v1_version(data)) {
      p->proto = Protocol::V1;
      p->session = TransportSession::v1();
    } else if (m_cfg.v2_capable()) {
      p->proto = Protocol::V2;
      p->hs = std::make_unique<V2Handshake>(Role::Responder, m_rng, m_cfg.handshake);
      send_raw(*p, p->hs->start());
    } else {
      disconnect(conn, "unexpected-v2");
      return;
    }
  }
  if (p->hs) {
    auto reply = p->hs->step(data);
    if (!reply) {
      ++m_stats.decode_failures;
      disconnect(conn, std::string("handshake-") + std::string(to_string(reply.error())));
      return;
    }
    if (!p->hs->complete()) {
      send_raw(*p, std::move(*reply));
      return;
    }
    Bytes out = std::move(*reply);
    data = p->hs->take_leftover();
    p->session = p->hs->take_session();
    p->hs.reset();
    if (p->dir != Direction::Inbound) {
      // Initiator: the first application message rides with the terminator.
      append(out, p->session->encode_message(version_message(*p)));
    }
    send_raw(*p, std::move(out));
    if (data.empty()) return;
  }
  handle_payload(*p, std::move(data));
}

void Node::handle_payload(PeerInfo& p, Bytes data) {
  const ConnId conn = p.conn;
  auto msgs = p.session->decode_segment(data);
  if (!msgs) {
    ++m_stats.decode_failures;
    if (msgs.error() == TransportError::TooLarge) ++m_stats.too_large;
    disconnect(conn, std::string("decode-") + std::string(to_string(msgs.error())));
    return;
  }
  for (const auto& m : *msgs) {
    PeerInfo* q = find(conn);
    if (!q) return;
    handle_message(*q, m);
  }
}

void Node::handle_message(PeerInfo& p, const Message& m) {
  const ConnId conn = p.conn;
  switch (m.type) {
    case MessageType::Version: {
      if (p.version_received) return;
      auto v = parse_version(m.body);
      if (!v) {
        disconnect(conn, "bad-version");
        return;
      }
      p.version_received = true;
      p.user_agent = v->user_agent;
      p.services = v->services;
      if (p.dir == Direction::Inbound) {
        send_messages(p, {version_message(p), make_verack()});
      } else {
        send_message(p, make_verack());
      }
      if (p.dir == Direction::Feeler) {
        m_addrman.mark_connected(AddressRecord{p.remote, p.services, m_sim.now()}, m_rng);
        log("feeler-ok", p.remote.to_string());
        disconnect(conn, "feeler-done");
      }
      return;
    }
    case MessageType::Verack:
      if (p.version_received && !p.established) on_established(p);
      return;
    case MessageType::Ping:
      if (m_cfg.profile.responds_to_ping) {
        if (auto n = parse_nonce(m.body)) send_message(p, make_pong(*n));
      }
      return;
    case MessageType::Pong:
      if (auto n = parse_nonce(m.body); n && p.ping_outstanding && *n == p.ping_nonce) p.ping_outstanding = false;
      return;
    case MessageType::Inv:
      if (auto items = parse_inv(m.body); items && !items->empty()) p.provides_data = true;
      return;
    case MessageType::GetData: {
      if (!m_cfg.profile.relays_data) return;
      auto items = parse_inv(m.body);
      if (!items) return;
      for (const auto& it : *items) {
        if (it.type != kMsgBlock) continue;
        const uint32_t h = read_le32(it.hash.data());
        if (h <= m_tip.height) send_message(p, make_block(h, static_cast<size_t>(m_rng.range(1000, 4000))));
      }
      return;
    }
    case MessageType::Addr: {
      if (m_cfg.kind != ProfileKind::Full) return;
      auto entries = parse_addr(m.body);
      if (!entries) return;
      for (const auto& e : *entries) {
        if (e.addr == m_cfg.addr) continue;
        m_addrman.insert_from_addr_msg(AddressRecord{e.addr, e.services, m_sim.now()}, p.remote.group(), m_rng);
      }
      return;
    }
    case MessageType::GetHeaders:
      if (m_cfg.profile.echoes_getheaders) {
        send_message(p, m);
      } else if (m_cfg.kind == ProfileKind::Full) {
        send_message(p, make_headers({HeaderInfo{m_tip.height, m_tip.time}}));
      }
      return;
    case MessageType::Headers: {
      if (m_cfg.profile.echoes_getheaders) {
        send_message(p, m);
        return;
      }
      if (m_cfg.kind != ProfileKind::Full) return;
      auto hs = parse_headers(m.body);
      if (!hs || hs->empty()) return;
      const HeaderInfo best = *std::max_element(hs->begin(), hs->end(),
                                                [](const HeaderInfo& a, const HeaderInfo& b) { return a.height < b.height; });
      if (best.height > m_tip.height && !m_announced.count(best.height)) {
        m_announced[best.height] = best.time;
        p.provides_data = true;
        InvItem item{kMsgBlock, {}};
        write_le32(item.hash.data(), best.height);
        send_message(p, make_getdata({item}));
      }
      const uint64_t horizon = 2 * static_cast<uint64_t>(m_cfg.timing.block_interval / kSeconds);
      const bool fresh = uint64_t{best.time} + horizon >= m_tip.time;
      if (fresh) {
        p.last_fresh_headers = m_sim.now();
        if (p.headers_deadline) {
          p.headers_deadline = 0;
          m_sim.cancel(p.headers_timer);
          p.headers_timer = 0;
        }
      } else if (p.headers_deadline) {
        ++m_stats.sync_disconnects;
        disconnect(conn, "stale-headers");
      }
      return;
    }
    case MessageType::Block: {
      if (m_cfg.kind != ProfileKind::Full) return;
      auto h = parse_block(m.body);
      if (!h || *h <= m_tip.height) return;
      p.provides_data = true;
      auto it = m_announced.find(*h);
      m_tip = ChainTip{*h, it != m_announced.end() ? it->second : sim_seconds(m_sim.now())};
      m_announced.erase(m_announced.begin(), m_announced.upper_bound(*h));
      announce_tip(conn);
      return;
    }
  }
}

void Node::on_established(PeerInfo& p) {
  p.established = true;
  p.last_fresh_headers = m_sim.now();
  m_history.push_back(ConnRecord{m_sim.now(), p.dir, p.proto, p.remote, p.user_agent,
                                 (p.services & services::kP2PV2) != 0});
  log("established", p.remote.to_string() + " " + std::string(to_string(p.dir)) + " " +
                         std::string(to_string(p.proto)) + " " + p.user_agent);
  if (p.dir == Direction::Outbound) {
    m_addrman.mark_connected(AddressRecord{p.remote, p.services, m_sim.now()}, m_rng);
  }
  if (m_cfg.kind == ProfileKind::Full) schedule_keepalive(p);
  send_message(p, make_addr(advertisement()));
  if (m_cfg.kind == ProfileKind::Attacker) schedule_addr(p);
}

void Node::schedule_addr(PeerInfo& p) {
  const ConnId conn = p.conn;
  p.addr_timer = m_sim.after(m_cfg.timing.addr_interval, EventKind::Timer, [this, conn] {
    PeerInfo* q = find(conn);
    if (!q) return;
    send_message(*q, make_addr(advertisement()));
    schedule_addr(*q);
  });
}

void Node::schedule_keepalive(PeerInfo& p) {
  const ConnId conn = p.conn;
  p.keepalive_timer = m_sim.after(m_cfg.timing.ping_interval, EventKind::Timer, [this, conn] { keepalive_tick(conn); });
}

void Node::keepalive_tick(ConnId conn) {
  PeerInfo* p = find(conn);
  if (!p) return;
  p->keepalive_timer = 0;
  const SimTime now = m_sim.now();
  if (now - p->last_recv >= m_cfg.timing.inactivity_timeout) {
    ++m_stats.inactivity_disconnects;
    disconnect(conn, "inactivity");
    return;
  }
  if (p->ping_outstanding && now - p->last_ping_sent >= m_cfg.timing.inactivity_timeout) {
    ++m_stats.inactivity_disconnects;
    disconnect(conn, "ping-timeout");
    return;
  }
  if (!p->ping_outstanding) {
    p->ping_nonce = m_rng.next();
    p->ping_outstanding = true;
    p->last_ping_sent = now;
    send_message(*p, make_ping(p->ping_nonce));
  }
  if (p->dir == Direction::Outbound && !p->headers_deadline &&
      now - p->last_fresh_headers >= m_cfg.timing.sync_interval) {
    start_sync_check(*p);
  }
  schedule_keepalive(*p);
}

void Node::start_sync_check(PeerInfo& p) {
  const ConnId conn = p.conn;
  p.headers_deadline = m_sim.now() + m_cfg.timing.headers_timeout;
  send_message(p, make_getheaders(m_tip.height));
  p.headers_timer = m_sim.after(m_cfg.timing.headers_timeout, EventKind::Timer, [this, conn] {
    PeerInfo* q = find(conn);
    if (!q) return;
    q->headers_timer = 0;
    if (q->headers_deadline) {
      ++m_stats.sync_disconnects;
      disconnect(conn, "sync-timeout");
    }
  });
}

void Node::flush_inv(ConnId conn) {
  PeerInfo* p = find(conn);
  if (!p) return;
  p->trickle_timer = 0;
  send_messages(*p, {});
}

void Node::tx_tick() {
  m_tx_timer = m_sim.after(seconds(m_rng.exponential(to_seconds(m_cfg.timing.tx_interval))), EventKind::Timer,
                           [this] { tx_tick(); });
  InvItem item{1, {}};
  m_rng.fill(item.hash);
  ++m_tx_counter;
  for (auto& [conn, p] : m_peers) {
    if (!p.established) continue;
    p.pending_inv.push_back(item);
    if (p.trickle_timer == 0) {
      const SimTime mean = p.dir == Direction::Inbound ? m_cfg.timing.trickle_inbound : m_cfg.timing.trickle_outbound;
      const ConnId id = conn;
      p.trickle_timer = m_sim.after(seconds(m_rng.exponential(to_seconds(mean))), EventKind::Timer,
                                    [this, id] { flush_inv(id); });
    }
  }
}

void Node::announce_tip(ConnId except) {
  if (!m_cfg.profile.relays_data) return;
  std::vector<ConnId> targets;
  for (const auto& [conn, p] : m_peers)
    if (p.established && conn != except) targets.push_back(conn);
  for (ConnId c : targets) {
    if (PeerInfo* p = find(c)) send_message(*p, make_headers({HeaderInfo{m_tip.height, m_tip.time}}));
  }
}

void Node::mine_block(uint32_t height) {
  if (height <= m_tip.height) return;
  m_tip = ChainTip{height, sim_seconds(m_sim.now())};
  log("block", std::to_string(height));
  announce_tip(0);
}

void Node::outbound_tick() {
  m_outbound_timer = m_sim.after(m_cfg.timing.outbound_tick, EventKind::Timer, [this] { outbound_tick(); });
  const size_t used = count(Direction::Outbound);
  if (used >= m_cfg.outbound_slots) return;
  size_t free = m_cfg.outbound_slots - used;
  std::vector<NetAddress> current;
  std::unordered_set<NetAddress, NetAddressHash> connected;
  for (const auto& [conn, p] : m_peers) {
    connected.insert(p.remote);
    if (p.dir == Direction::Outbound) current.push_back(p.remote);
  }
  const SimTime now = m_sim.now();
  for (int draws = 0; free > 0 && draws < 100; ++draws) {
    auto sel = m_addrman.select_candidate(m_rng);
    if (!sel) break;
    const AddressRecord& a = sel->record;
    if (a.addr == m_cfg.addr || connected.count(a.addr)) continue;
    if (auto it = m_last_attempt.find(a.addr); it != m_last_attempt.end() && now - it->second < m_cfg.timing.retry_window)
      continue;
    if (!outbound_eligible(a, current, m_cfg.required_outbound_flags)) continue;
    connect_to(a.addr, Direction::Outbound, m_cfg.v2_capable() && (a.services & services::kP2PV2));
    current.push_back(a.addr);
    connected.insert(a.addr);
    --free;
  }
}

void Node::feeler_tick() {
  m_feeler_timer = m_sim.after(m_cfg.timing.feeler_interval, EventKind::Timer, [this] { feeler_tick(); });
  if (count(Direction::Feeler) >= m_cfg.feeler_slots) return;
  auto rec = m_addrman.random_new(m_rng);
  if (!rec || rec->addr == m_cfg.addr) return;
  for (const auto& [conn, p] : m_peers)
    if (p.remote == rec->addr) return;
  if (auto it = m_last_attempt.find(rec->addr);
      it != m_last_attempt.end() && m_sim.now() - it->second < m_cfg.timing.retry_window)
    return;
  connect_to(rec->addr, Direction::Feeler, m_cfg.v2_capable() && (rec->services & services::kP2PV2));
}

std::string Node::status_json() const {
  nlohmann::ordered_json j;
  j["node"] = m_cfg.name;
  j["address"] = m_cfg.addr.to_string();
  j["profile"] = to_string(m_cfg.kind);
  j["tip"] = m_tip.height;
  auto& peers = j["peers"] = nlohmann::ordered_json::array();
  for (const auto& [conn, p] : m_peers) {
    nlohmann::ordered_json e;
    e["conn"] = conn;
    e["remote"] = p.remote.to_string();
    e["direction"] = to_string(p.dir);
    e["protocol"] = p.proto_known ? std::string(to_string(p.proto)) : std::string("unknown");
    e["user_agent"] = p.user_agent;
    e["established"] = p.established;
    peers.push_back(std::move(e));
  }
  return j.dump();
}

}  // namespace v2net
