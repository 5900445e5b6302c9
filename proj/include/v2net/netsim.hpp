#pragma once

// Deterministic discrete-event network. Connections are duplex channels of
// whole segments with a fixed one-way latency. An optional in-path hook sees
// every segment and connection attempt before delivery.

#include <v2net/common.hpp>
#include <v2net/netaddr.hpp>

#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

namespace v2net {

using ConnId = uint64_t;
using EventId = uint64_t;

enum class EventKind { Deliver, Timer, Connect, Close };
std::string_view to_string(EventKind k);

struct LogEntry {
  SimTime time = 0;
  std::string node;
  std::string event;
  std::string details;
};

class Simulator {
 public:
  explicit Simulator(uint64_t seed) : m_rng(seed) {}

  SimTime now() const { return m_now; }
  Rng& rng() { return m_rng; }

  EventId at(SimTime when, EventKind kind, std::function<void()> fn);
  EventId after(SimTime delay, EventKind kind, std::function<void()> fn) { return at(m_now + delay, kind, std::move(fn)); }
  void cancel(EventId id);

  /// Processes events with time <= t_end in (time, insertion) order, then
  /// sets the clock to t_end. Stops early, cleanly, if the queue empties.
  void run_until(SimTime t_end);
  size_t pending() const { return m_queue.size() - m_cancelled.size(); }
  uint64_t processed() const { return m_processed; }

  void log(std::string node, std::string event, std::string details = {});
  const std::vector<LogEntry>& log_entries() const { return m_log; }
  void set_logging(bool on) { m_logging = on; }

 private:
  struct Event {
    SimTime time;
    EventId seq;
    EventKind kind;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  SimTime m_now = 0;
  EventId m_next = 1;
  uint64_t m_processed = 0;
  Rng m_rng;
  std::priority_queue<Event, std::vector<Event>, Later> m_queue;
  std::unordered_map<EventId, bool> m_cancelled;
  std::vector<LogEntry> m_log;
  bool m_logging = true;
};

enum class CloseKind { Graceful, Reset };
std::string_view to_string(CloseKind k);

/// Receiver of network callbacks. A node owns one Endpoint.
class Endpoint {
 public:
  virtual ~Endpoint() = default;
  /// Incoming connection attempt; return false to refuse (seen as reset).
  virtual bool on_inbound(ConnId conn, const NetAddress& remote) = 0;
  /// Outbound attempt succeeded.
  virtual void on_connected(ConnId conn) = 0;
  /// Outbound attempt refused, unreachable or timed out.
  virtual void on_connect_failed(ConnId conn) = 0;
  virtual void on_data(ConnId conn, Bytes data) = 0;
  virtual void on_closed(ConnId conn, CloseKind kind) = 0;
};

struct SegmentInfo {
  ConnId conn = 0;
  NetAddress from;
  NetAddress to;
  bool from_initiator = true;
  /// 1-based index of this segment within its direction.
  uint64_t index = 0;
  SimTime time = 0;
};

enum class Verdict { Forward, Replace, Drop, Reset };
std::string_view to_string(Verdict v);

struct SegmentDecision {
  Verdict verdict = Verdict::Forward;
  Bytes replacement;
};

/// In-path observer/manipulator.
class PathHook {
 public:
  virtual ~PathHook() = default;
  /// Return false to silently drop the connection attempt.
  virtual bool on_syn(const NetAddress& from, const NetAddress& to) = 0;
  virtual SegmentDecision on_segment(const SegmentInfo& seg, const Bytes& payload) = 0;
  virtual void on_close(ConnId conn, const NetAddress& closer, const NetAddress& other, CloseKind kind) = 0;
};

struct NetworkConfig {
  SimTime latency = 50 * kMillis;
  SimTime connect_timeout = 5 * kSeconds;
};

class Network {
 public:
  Network(Simulator& sim, NetworkConfig cfg = {}) : m_sim(sim), m_cfg(cfg) {}

  void listen(const NetAddress& addr, Endpoint* ep);
  void unlisten(const NetAddress& addr);
  bool is_listening(const NetAddress& addr) const { return m_listeners.count(addr) > 0; }

  /// Starts a connection from `local` (the initiator's address as the peer
  /// will see it) to `remote`.
  ConnId connect(Endpoint* initiator, const NetAddress& local, const NetAddress& remote);
  void send(ConnId conn, Endpoint* from, Bytes data);
  void close(ConnId conn, Endpoint* from);
  void reset(ConnId conn, Endpoint* from);

  bool is_open(ConnId conn) const;
  std::optional<NetAddress> remote_of(ConnId conn, const Endpoint* self) const;

  void set_hook(PathHook* hook) { m_hook = hook; }
  Simulator& sim() { return m_sim; }
  const NetworkConfig& config() const { return m_cfg; }

 private:
  struct Side {
    Endpoint* ep = nullptr;
    NetAddress addr;
    bool open = false;
    uint64_t sent = 0;
  };
  struct Conn {
    Side init, resp;
    bool established = false;
  };
  Side* side_of(Conn& c, const Endpoint* ep);
  Side* other_of(Conn& c, const Endpoint* ep);
  void shutdown(ConnId id, Endpoint* from, CloseKind kind);
  void deliver_close(ConnId id, bool to_initiator, CloseKind kind, SimTime delay);

  Simulator& m_sim;
  NetworkConfig m_cfg;
  std::map<NetAddress, Endpoint*> m_listeners;
  std::unordered_map<ConnId, Conn> m_conns;
  ConnId m_next = 1;
  PathHook* m_hook = nullptr;
};

}  // namespace v2net
