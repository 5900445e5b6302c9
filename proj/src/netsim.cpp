#include <v2net/netsim.hpp>

namespace v2net {

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Deliver: return "deliver";
    case EventKind::Timer: return "timer";
    case EventKind::Connect: return "connect";
    case EventKind::Close: return "close";
  }
  return "?";
}

std::string_view to_string(CloseKind k) { return k == CloseKind::Graceful ? "graceful" : "reset"; }

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Forward: return "forward";
    case Verdict::Replace: return "replace";
    case Verdict::Drop: return "drop";
    case Verdict::Reset: return "reset";
  }
  return "?";
}

EventId Simulator::at(SimTime when, EventKind kind, std::function<void()> fn) {
  if (when < m_now) when = m_now;
  const EventId id = m_next++;
  m_queue.push(Event{when, id, kind, std::move(fn)});
  return id;
}

void Simulator::cancel(EventId id) {
  if (id != 0) m_cancelled.emplace(id, true);
}

void Simulator::run_until(SimTime t_end) {
  while (!m_queue.empty() && m_queue.top().time <= t_end) {
    Event ev = std::move(const_cast<Event&>(m_queue.top()));
    m_queue.pop();
    if (auto it = m_cancelled.find(ev.seq); it != m_cancelled.end()) {
      m_cancelled.erase(it);
      continue;
    }
    m_now = ev.time;
    ++m_processed;
    ev.fn();
  }
  if (t_end > m_now) m_now = t_end;
}

void Simulator::log(std::string node, std::string event, std::string details) {
  if (m_logging) m_log.push_back(LogEntry{m_now, std::move(node), std::move(event), std::move(details)});
}

void Network::listen(const NetAddress& addr, Endpoint* ep) { m_listeners[addr] = ep; }
void Network::unlisten(const NetAddress& addr) { m_listeners.erase(addr); }

Network::Side* Network::side_of(Conn& c, const Endpoint* ep) {
  if (c.init.ep == ep) return &c.init;
  if (c.resp.ep == ep) return &c.resp;
  return nullptr;
}

Network::Side* Network::other_of(Conn& c, const Endpoint* ep) {
  if (c.init.ep == ep) return &c.resp;
  if (c.resp.ep == ep) return &c.init;
  return nullptr;
}

ConnId Network::connect(Endpoint* initiator, const NetAddress& local, const NetAddress& remote) {
  const ConnId id = m_next++;
  Conn& c = m_conns[id];
  c.init = Side{initiator, local, true, 0};
  c.resp.addr = remote;

  auto fail = [this, id](SimTime delay) {
    m_sim.after(delay, EventKind::Connect, [this, id] {
      auto it = m_conns.find(id);
      if (it == m_conns.end() || !it->second.init.open) return;
      Endpoint* ep = it->second.init.ep;
      m_conns.erase(it);
      ep->on_connect_failed(id);
    });
  };

  if (m_hook && !m_hook->on_syn(local, remote)) {
    fail(m_cfg.connect_timeout);
    return id;
  }
  m_sim.after(m_cfg.latency, EventKind::Connect, [this, id, remote, fail] {
    auto it = m_conns.find(id);
    if (it == m_conns.end() || !it->second.init.open) return;
    auto lit = m_listeners.find(remote);
    if (lit == m_listeners.end()) {
      fail(m_cfg.latency);
      return;
    }
    Conn& conn = it->second;
    conn.resp.ep = lit->second;
    conn.resp.open = true;
    if (!lit->second->on_inbound(id, conn.init.addr)) {
      conn.resp.open = false;
      fail(m_cfg.latency);
      return;
    }
    conn.established = true;
    m_sim.after(m_cfg.latency, EventKind::Connect, [this, id] {
      auto it2 = m_conns.find(id);
      if (it2 == m_conns.end() || !it2->second.init.open) return;
      it2->second.init.ep->on_connected(id);
    });
  });
  return id;
}

void Network::send(ConnId id, Endpoint* from, Bytes data) {
  auto it = m_conns.find(id);
  if (it == m_conns.end() || !it->second.established) return;
  Conn& c = it->second;
  Side* self = side_of(c, from);
  Side* peer = other_of(c, from);
  if (!self || !self->open) return;
  ++self->sent;

  if (m_hook) {
    SegmentInfo info{id, self->addr, peer->addr, self == &c.init, self->sent, m_sim.now()};
    SegmentDecision d = m_hook->on_segment(info, data);
    switch (d.verdict) {
      case Verdict::Forward: break;
      case Verdict::Replace: data = std::move(d.replacement); break;
      case Verdict::Drop: return;
      case Verdict::Reset: {
        // The segment never arrives; both ends see a reset instead.
        Endpoint* sender = self->ep;
        self->open = false;
        deliver_close(id, self != &c.init, CloseKind::Reset, m_cfg.latency);
        m_sim.after(m_cfg.latency, EventKind::Close, [sender, id] { sender->on_closed(id, CloseKind::Reset); });
        return;
      }
    }
  }

  const bool to_initiator = peer == &c.init;
  m_sim.after(m_cfg.latency, EventKind::Deliver, [this, id, to_initiator, data = std::move(data)]() mutable {
    auto it2 = m_conns.find(id);
    if (it2 == m_conns.end()) return;
    Side& dst = to_initiator ? it2->second.init : it2->second.resp;
    if (!dst.open) return;
    dst.ep->on_data(id, std::move(data));
  });
}

void Network::deliver_close(ConnId id, bool to_initiator, CloseKind kind, SimTime delay) {
  m_sim.after(delay, EventKind::Close, [this, id, to_initiator, kind] {
    auto it = m_conns.find(id);
    if (it == m_conns.end()) return;
    Side& dst = to_initiator ? it->second.init : it->second.resp;
    Side& src = to_initiator ? it->second.resp : it->second.init;
    if (dst.open) {
      dst.open = false;
      dst.ep->on_closed(id, kind);
    }
    if (!dst.open && !src.open) m_conns.erase(it);
  });
}

void Network::shutdown(ConnId id, Endpoint* from, CloseKind kind) {
  auto it = m_conns.find(id);
  if (it == m_conns.end()) return;
  Conn& c = it->second;
  Side* self = side_of(c, from);
  if (!self || !self->open) return;
  self->open = false;
  if (!c.established) {
    // Attempt abandoned before the peer answered.
    m_conns.erase(it);
    return;
  }
  Side* peer = other_of(c, from);
  if (m_hook) m_hook->on_close(id, self->addr, peer->addr, kind);
  if (!peer->open) {
    m_conns.erase(it);
    return;
  }
  deliver_close(id, peer == &c.init, kind, m_cfg.latency);
}

void Network::close(ConnId id, Endpoint* from) { shutdown(id, from, CloseKind::Graceful); }
void Network::reset(ConnId id, Endpoint* from) { shutdown(id, from, CloseKind::Reset); }

bool Network::is_open(ConnId id) const {
  auto it = m_conns.find(id);
  return it != m_conns.end() && it->second.established && it->second.init.open && it->second.resp.open;
}

std::optional<NetAddress> Network::remote_of(ConnId id, const Endpoint* self) const {
  auto it = m_conns.find(id);
  if (it == m_conns.end()) return std::nullopt;
  if (it->second.init.ep == self) return it->second.resp.addr;
  if (it->second.resp.ep == self) return it->second.init.addr;
  return std::nullopt;
}

}  // namespace v2net
