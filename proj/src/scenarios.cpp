#include <v2net/scenarios.hpp>

#include <algorithm>
#include <functional>

namespace v2net {

using nlohmann::ordered_json;

namespace {

ordered_json opt_seconds(const std::optional<SimTime>& t) {
  return t ? ordered_json(to_seconds(*t)) : ordered_json(nullptr);
}

ordered_json node_stats_json(const NodeStats& s) {
  return ordered_json{{"c6_rejects", s.c6_rejects},
                      {"evictions", s.evictions},
                      {"decode_failures", s.decode_failures},
                      {"too_large", s.too_large},
                      {"handshake_timeouts", s.handshake_timeouts},
                      {"inactivity_disconnects", s.inactivity_disconnects},
                      {"sync_disconnects", s.sync_disconnects},
                      {"v1_fallbacks", s.v1_fallbacks},
                      {"fallback_give_ups", s.fallback_give_ups},
                      {"connect_failures", s.connect_failures}};
}

ordered_json adversary_json(const Adversary* a) {
  if (!a) return nullptr;
  const auto& s = a->stats();
  std::map<std::string, uint64_t> verdicts;
  for (const auto& v : a->trace()) ++verdicts[std::string(to_string(v.verdict))];
  ordered_json vj = ordered_json::object();
  for (const auto& [k, n] : verdicts) vj[k] = n;
  return ordered_json{{"observed", s.observed},
                      {"stored", s.stored},
                      {"replaced", s.replaced},
                      {"closes_after_replay", s.closes_after_replay},
                      {"syn_drops", s.syn_drops},
                      {"resets", s.resets},
                      {"misses", s.misses},
                      {"v1_untouched", s.v1_untouched},
                      {"blocked_ips", a->blocked().size()},
                      {"verdicts", vj}};
}

RunReport base_report(const ScenarioConfig& cfg) {
  RunReport r;
  r.scenario = std::string(to_string(cfg.kind));
  r.seed = cfg.seed;
  r.config_json = config_to_json(cfg);
  return r;
}

void add_snapshot_tail(RunReport& r) {
  if (r.snapshots.empty()) return;
  const Snapshot& s = r.snapshots.back();
  r.summary["final"] = ordered_json{{"outbound_honest", s.outbound_honest},
                                    {"outbound_attacker", s.outbound_attacker},
                                    {"inbound_honest", s.inbound_honest},
                                    {"inbound_attacker", s.inbound_attacker},
                                    {"v1_count", s.v1_count},
                                    {"v2_count", s.v2_count}};
}

}  // namespace

bool is_attacker_agent(std::string_view ua) { return ua == kAttackerAgent; }

Snapshot take_snapshot(const Node& n, SimTime t) {
  Snapshot s;
  s.time = t;
  for (const PeerInfo* p : n.peers()) {
    if (!p->established || p->dir == Direction::Feeler) continue;
    const bool att = is_attacker_agent(p->user_agent);
    if (p->dir == Direction::Outbound) ++(att ? s.outbound_attacker : s.outbound_honest);
    else ++(att ? s.inbound_attacker : s.inbound_honest);
    ++(p->proto == Protocol::V1 ? s.v1_count : s.v2_count);
  }
  return s;
}

bool fully_eclipsed(const Node& n) {
  Snapshot s = take_snapshot(n, 0);
  return s.outbound_attacker == n.config().outbound_slots && s.inbound_attacker == n.config().inbound_capacity();
}

NetAddress honest_address(size_t i, size_t hosts_per_subnet) {
  const size_t g = i / hosts_per_subnet;
  return NetAddress::ipv4(static_cast<uint8_t>(175 + g / 250), static_cast<uint8_t>(1 + g % 250), 0,
                          static_cast<uint8_t>(1 + i % hosts_per_subnet));
}

NetAddress attacker_listener_address(size_t i) { return NetAddress::ipv4(11, static_cast<uint8_t>(1 + i), 0, 1); }

World::World(const ScenarioConfig& c) : sim(c.seed), net(sim), cfg(c), m_rng(c.seed ^ 0x2545f4914f6cdd1dULL) {
  sim.set_logging(cfg.log_events);
  const size_t n = cfg.topology.honest_nodes;
  std::vector<bool> v2(n, true);
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  for (size_t i = n; i > 1; --i) std::swap(order[i - 1], order[m_rng.uniform(i)]);
  const auto v1_only = static_cast<size_t>(cfg.topology.v1_only_fraction * static_cast<double>(n) + 0.5);
  for (size_t k = 0; k < v1_only && k < n; ++k) v2[order[k]] = false;

  for (size_t i = 0; i < n; ++i) {
    NodeConfig nc = honest_config(i, v2[i]);
    honest.push_back(std::make_unique<Node>(sim, net, std::move(nc), m_rng.next()));
  }

  NodeConfig vc;
  vc.name = "victim";
  vc.addr = kVictimAddress;
  vc.max_connections = cfg.victim.max_connections;
  vc.countermeasures = Countermeasures{cfg.victim.c3c, cfg.victim.c6_threshold};
  vc.timing.block_interval = cfg.topology.block_interval;
  vc.timing.tx_interval = cfg.topology.tx_interval;
  vc.addrman_key = m_rng.next();
  vc.record_traffic = true;
  victim = std::make_unique<Node>(sim, net, std::move(vc), m_rng.next());

  auto relayer = [&] { return honest_address(m_rng.uniform(std::max<size_t>(n, 1)), cfg.topology.hosts_per_subnet).group(); };
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      honest[i]->addrman().insert_from_addr_msg(
          AddressRecord{honest[j]->addr(), honest[j]->config().services, 0}, relayer(), m_rng);
    }
    honest[i]->addrman().insert_from_addr_msg(AddressRecord{victim->addr(), victim->config().services, 0}, relayer(),
                                              m_rng);
    victim->addrman().insert_from_addr_msg(AddressRecord{honest[i]->addr(), honest[i]->config().services, 0},
                                           relayer(), m_rng);
  }
}

World::~World() {
  if (filler) filler->stop();
  net.set_hook(nullptr);
}

NodeConfig World::honest_config(size_t i, bool v2) const {
  NodeConfig nc;
  nc.name = "honest-" + std::to_string(i);
  nc.addr = honest_address(i, cfg.topology.hosts_per_subnet);
  nc.max_connections = cfg.topology.honest_max_connections;
  if (!v2) nc.services &= ~services::kP2PV2;
  nc.countermeasures.c3c = cfg.victim.c3c && cfg.victim.c3c_network_wide;
  nc.timing.block_interval = cfg.topology.block_interval;
  nc.timing.tx_interval = cfg.topology.tx_interval;
  nc.addrman_key = mix64(cfg.seed + i);
  return nc;
}

std::vector<AddrEntry> World::attacker_ads() const {
  std::vector<AddrEntry> ads;
  for (size_t i = 0; i < cfg.attack.attacker_addrs; ++i)
    ads.push_back(AddrEntry{0, services::kNetwork | services::kWitness, attacker_listener_address(i)});
  return ads;
}

NodeConfig World::attacker_config(const std::string& name, const NetAddress& addr) const {
  NodeConfig nc;
  nc.name = name;
  nc.addr = addr;
  nc.kind = ProfileKind::Attacker;
  nc.profile = BehaviorProfile::minimal();
  nc.user_agent = std::string(kAttackerAgent);
  nc.services = services::kNetwork | services::kWitness;
  nc.max_connections = 100000;
  nc.open_outbound = false;
  nc.run_feelers = false;
  nc.advertise = attacker_ads();
  return nc;
}

void World::start() {
  victim->start();
  for (auto& h : honest) h->start();
  sim.after(cfg.topology.block_interval, EventKind::Timer, [this] { block_tick(); });
}

void World::block_tick() {
  sim.after(cfg.topology.block_interval, EventKind::Timer, [this] { block_tick(); });
  ++m_height;
  if (honest.empty()) {
    victim->mine_block(m_height);
    return;
  }
  honest[m_rng.uniform(honest.size())]->mine_block(m_height);
}

void World::launch_eclipse() {
  for (size_t i = 0; i < cfg.attack.attacker_addrs; ++i) {
    attackers.push_back(std::make_unique<Node>(
        sim, net, attacker_config("attacker-" + std::to_string(i), attacker_listener_address(i)), m_rng.next()));
    attackers.back()->start();
  }
  attacker_host = std::make_unique<Node>(sim, net, attacker_config("attacker-host", kAttackerHostAddress), m_rng.next());
  attacker_host->start();

  AdversaryPolicy pol;
  pol.mode = AdversaryMode::Eclipse;
  pol.target = victim->addr();
  pol.replay_len = cfg.attack.replay_len;
  pol.stagger_interval = cfg.attack.stagger_interval;
  pol.drop_reconnect_syn = cfg.attack.drop_reconnect_syn;
  for (const auto& a : attackers) pol.attacker_ips.push_back(a->addr());
  pol.attacker_ips.push_back(kAttackerHostAddress);
  adversary = std::make_unique<Adversary>(sim, pol);
  net.set_hook(adversary.get());
  filler = std::make_unique<InboundFiller>(sim, *attacker_host, *victim);
  filler->start();
  sim.log("adversary", "launch", "eclipse");
}

void World::attach_downgrade() {
  AdversaryPolicy pol;
  pol.mode = AdversaryMode::Downgrade;
  pol.target = victim->addr();
  pol.reset_segment_index = cfg.attack.reset_segment_index;
  adversary = std::make_unique<Adversary>(sim, pol);
  net.set_hook(adversary.get());
  sim.log("adversary", "launch", "downgrade");
}

void World::restart_all() {
  victim->stop();
  for (auto& h : honest) h->stop();
  victim->start();
  for (auto& h : honest) h->start();
}

void World::start_snapshots(SimTime interval) {
  auto tick = std::make_shared<std::function<void()>>();
  *tick = [this, interval, tick] {
    snapshots.push_back(take_snapshot(*victim, sim.now()));
    sim.after(interval, EventKind::Timer, *tick);
  };
  sim.at(sim.now(), EventKind::Timer, *tick);
}

RunReport run_eclipse_scenario(const ScenarioConfig& cfg) {
  RunReport r = base_report(cfg);
  World w(cfg);
  w.start();
  w.start_snapshots(cfg.snapshot_interval);
  w.run_until(cfg.warmup);

  const SimTime onset = w.sim.now();
  const bool attack = cfg.attack.mode == AdversaryMode::Eclipse;
  if (attack) w.launch_eclipse();

  std::optional<SimTime> t_eclipse, t_inbound, t_outbound;
  size_t max_attacker = 0;
  const Node& v = *w.victim;
  std::function<void()> monitor = [&] {
    Snapshot s = take_snapshot(v, w.sim.now());
    max_attacker = std::max(max_attacker, s.outbound_attacker + s.inbound_attacker);
    const SimTime rel = w.sim.now() - onset;
    if (!t_inbound && s.inbound_attacker == v.config().inbound_capacity()) t_inbound = rel;
    if (!t_outbound && s.outbound_attacker == v.config().outbound_slots) t_outbound = rel;
    if (!t_eclipse && fully_eclipsed(v)) t_eclipse = rel;
    w.sim.after(1 * kMinutes, EventKind::Timer, monitor);
  };
  w.sim.after(0, EventKind::Timer, monitor);
  w.run_until(onset + cfg.duration);
  w.sim.run_until(w.sim.now());

  uint64_t honest_decode_failures = 0;
  for (const auto& h : w.honest) honest_decode_failures += h->stats().decode_failures;

  r.snapshots = w.snapshots;
  add_snapshot_tail(r);
  auto& m = r.summary;
  m["attack"] = attack;
  m["attack_start"] = to_seconds(onset);
  m["time_to_eclipse"] = opt_seconds(t_eclipse);
  m["time_inbound_monopolized"] = opt_seconds(t_inbound);
  m["time_outbound_monopolized"] = opt_seconds(t_outbound);
  m["eclipsed_at_end"] = fully_eclipsed(v);
  m["max_attacker_slots"] = max_attacker;
  m["non_feeler_slots"] = v.config().outbound_slots + v.config().inbound_capacity();
  m["honest_decode_failures"] = honest_decode_failures;
  m["victim"] = node_stats_json(v.stats());
  m["adversary"] = adversary_json(w.adversary.get());
  if (auto cm = evaluate(v.traffic(), MessageType::Ping)) {
    m["classifier"] = ordered_json{{"target", "PING"},
                                   {"precision", cm->precision},
                                   {"recall", cm->recall},
                                   {"labeled", cm->labeled},
                                   {"target_total", cm->target_total}};
  } else {
    m["classifier"] = nullptr;
  }
  m["events"] = w.sim.log_entries().size();
  r.events = w.sim.log_entries();
  return r;
}

RunReport run_downgrade_scenario(const ScenarioConfig& cfg) {
  RunReport r = base_report(cfg);
  World w(cfg);
  w.start();
  w.start_snapshots(cfg.snapshot_interval);
  w.run_until(cfg.warmup);
  const SimTime onset = w.sim.now();
  if (cfg.attack.mode == AdversaryMode::Downgrade) w.attach_downgrade();
  w.restart_all();
  w.sim.log("scenario", "restart", "all nodes");
  w.run_until(onset + cfg.duration);

  size_t total = 0, v1 = 0, v2 = 0, downgraded = 0, pre_v1 = 0, pre_v2 = 0;
  const bool victim_v2 = w.victim->config().v2_capable();
  for (const auto& c : w.victim->history()) {
    if (c.time < onset) {
      ++(c.proto == Protocol::V1 ? pre_v1 : pre_v2);
      continue;
    }
    ++total;
    ++(c.proto == Protocol::V1 ? v1 : v2);
    downgraded += c.proto == Protocol::V1 && victim_v2 && c.remote_v2;
  }
  uint64_t net_fallbacks = 0, net_give_ups = 0;
  for (const auto& h : w.honest) {
    net_fallbacks += h->stats().v1_fallbacks;
    net_give_ups += h->stats().fallback_give_ups;
  }

  r.snapshots = w.snapshots;
  add_snapshot_tail(r);
  auto& m = r.summary;
  m["attack"] = cfg.attack.mode == AdversaryMode::Downgrade;
  m["onset"] = to_seconds(onset);
  m["c3c"] = cfg.victim.c3c;
  m["pre_restart_v1"] = pre_v1;
  m["pre_restart_v2"] = pre_v2;
  m["post_restart_connections"] = total;
  m["post_restart_v1"] = v1;
  m["post_restart_v2"] = v2;
  m["v1_fraction"] = total ? ordered_json(static_cast<double>(v1) / static_cast<double>(total)) : ordered_json(nullptr);
  m["downgraded"] = downgraded;
  m["downgrade_fraction"] =
      total ? ordered_json(static_cast<double>(downgraded) / static_cast<double>(total)) : ordered_json(nullptr);
  m["network_v1_fallbacks"] = net_fallbacks;
  m["network_give_ups"] = net_give_ups;
  m["victim"] = node_stats_json(w.victim->stats());
  m["adversary"] = adversary_json(w.adversary.get());
  m["events"] = w.sim.log_entries().size();
  r.events = w.sim.log_entries();
  return r;
}

RunReport run_countermeasure_scenario(const ScenarioConfig& base) {
  ScenarioConfig cfg = base;
  cfg.topology.honest_nodes = 0;
  RunReport r = base_report(cfg);
  World w(cfg);
  w.victim->mutable_config().open_outbound = false;
  w.start();
  w.start_snapshots(cfg.snapshot_interval);

  const NetAddress target = w.victim->addr();
  if (cfg.flood.distinct_groups) {
    for (size_t i = 0; i < cfg.flood.connections; ++i) {
      NetAddress a = NetAddress::ipv4(static_cast<uint8_t>(20 + i / 250), static_cast<uint8_t>(1 + i % 250), 0, 1);
      NodeConfig nc;
      nc.name = "flood-" + std::to_string(i);
      nc.addr = a;
      nc.kind = ProfileKind::Attacker;
      nc.profile = BehaviorProfile::minimal();
      nc.user_agent = std::string(kAttackerAgent);
      nc.services = services::kNetwork | services::kWitness;
      nc.open_outbound = false;
      nc.run_feelers = false;
      w.attackers.push_back(std::make_unique<Node>(w.sim, w.net, std::move(nc), mix64(cfg.seed + i)));
      Node* node = w.attackers.back().get();
      node->start();
      w.sim.at(static_cast<SimTime>(i) * cfg.flood.spacing, EventKind::Timer,
               [node, target] { node->connect_to(target, Direction::Outbound, false); });
    }
  } else {
    NodeConfig nc;
    nc.name = "flood-host";
    nc.addr = kAttackerHostAddress;
    nc.kind = ProfileKind::Attacker;
    nc.profile = BehaviorProfile::minimal();
    nc.user_agent = std::string(kAttackerAgent);
    nc.services = services::kNetwork | services::kWitness;
    nc.max_connections = 100000;
    nc.open_outbound = false;
    nc.run_feelers = false;
    w.attacker_host = std::make_unique<Node>(w.sim, w.net, std::move(nc), mix64(cfg.seed));
    Node* host = w.attacker_host.get();
    host->start();
    for (size_t i = 0; i < cfg.flood.connections; ++i) {
      w.sim.at(static_cast<SimTime>(i) * cfg.flood.spacing, EventKind::Timer,
               [host, target] { host->connect_to(target, Direction::Outbound, false); });
    }
  }

  size_t max_inbound = 0;
  std::function<void()> monitor = [&] {
    max_inbound = std::max(max_inbound, w.victim->count(Direction::Inbound, true));
    w.sim.after(cfg.flood.spacing > 0 ? cfg.flood.spacing : kSeconds, EventKind::Timer, monitor);
  };
  w.sim.after(0, EventKind::Timer, monitor);
  w.run_until(cfg.duration);

  const size_t cap = w.victim->config().inbound_capacity();
  const size_t final_inbound = w.victim->count(Direction::Inbound, true);
  r.snapshots = w.snapshots;
  add_snapshot_tail(r);
  auto& m = r.summary;
  m["c6_threshold"] = cfg.victim.c6_threshold ? ordered_json(*cfg.victim.c6_threshold) : ordered_json(nullptr);
  m["distinct_groups"] = cfg.flood.distinct_groups;
  m["flood_connections"] = cfg.flood.connections;
  m["inbound_capacity"] = cap;
  m["max_inbound"] = max_inbound;
  m["final_inbound"] = final_inbound;
  m["max_occupancy"] = cap ? static_cast<double>(max_inbound) / static_cast<double>(cap) : 0.0;
  m["duplicate_prefix_rejects"] = w.victim->stats().c6_rejects;
  m["evictions"] = w.victim->stats().evictions;
  m["events"] = w.sim.log_entries().size();
  r.events = w.sim.log_entries();
  return r;
}

RunReport run_scenario(const ScenarioConfig& cfg) {
  switch (cfg.kind) {
    case ScenarioKind::Eclipse: return run_eclipse_scenario(cfg);
    case ScenarioKind::Downgrade: return run_downgrade_scenario(cfg);
    case ScenarioKind::Countermeasures: return run_countermeasure_scenario(cfg);
  }
  return {};
}

std::vector<Segment> simulate_traffic(size_t honest_nodes, SimTime duration, uint64_t seed, bool per_message) {
  ScenarioConfig cfg = default_config(ScenarioKind::Eclipse);
  cfg.seed = seed;
  cfg.topology.honest_nodes = honest_nodes;
  cfg.topology.tx_interval = 10 * kSeconds;
  cfg.log_events = false;
  World w(cfg);
  std::vector<Node*> all{w.victim.get()};
  for (auto& h : w.honest) all.push_back(h.get());
  for (Node* n : all) {
    n->mutable_config().record_traffic = true;
    n->mutable_config().segment_per_message = per_message;
  }
  w.start();
  w.run_until(duration);
  std::vector<Segment> out;
  for (Node* n : all) out.insert(out.end(), n->traffic().begin(), n->traffic().end());
  return out;
}

}  // namespace v2net
