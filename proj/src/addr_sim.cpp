#include <v2net/addr_sim.hpp>

#include <v2net/messages.hpp>

#include <algorithm>
#include <set>
#include <unordered_set>

namespace v2net {

std::string_view to_string(AddrSimError e) {
  switch (e) {
    case AddrSimError::TooFewGroups: return "attacker addresses cannot cover 10 distinct groups";
    case AddrSimError::EmptyDatabase: return "address database is empty";
    case AddrSimError::BadCloseCount: return "closes per interval must be between 1 and the outbound slot count";
  }
  return "?";
}

NetAddress attacker_sim_address(size_t i) {
  return NetAddress::ipv4(0, static_cast<uint8_t>(i % 255 + 1), static_cast<uint8_t>(i / 255), 1);
}

Expected<AddrSimResult, AddrSimError> run_addr_selection_sim(const AddrTables& db, const AddrSelSimParams& params) {
  if (params.n_attacker_addrs < params.outbound_slots || params.n_attacker_addrs > 255 * 256)
    return AddrSimError::TooFewGroups;
  if (params.closes_per_interval == 0 || params.closes_per_interval > params.outbound_slots)
    return AddrSimError::BadCloseCount;
  if (db.new_ref_count() + db.tried_count() < params.outbound_slots) return AddrSimError::EmptyDatabase;

  Rng rng(params.seed);
  AddrTables t = db;
  AddrSimResult res;

  struct Peer {
    NetAddress addr;
    bool attacker;
  };
  std::vector<Peer> peers;
  std::unordered_set<NetAddress, NetAddressHash> attackers;

  auto draw = [&]() -> std::optional<Peer> {
    auto sel = t.select_candidate(rng);
    if (!sel) return std::nullopt;
    t.remove(sel->record.addr);
    return Peer{sel->record.addr, attackers.count(sel->record.addr) > 0};
  };

  while (peers.size() < params.outbound_slots) {
    auto p = draw();
    if (!p) return AddrSimError::EmptyDatabase;
    peers.push_back(*p);
  }

  for (size_t i = 0; i < params.n_attacker_addrs; ++i) {
    AddressRecord rec{attacker_sim_address(i), services::kNetwork | services::kWitness, 0};
    attackers.insert(rec.addr);
    t.insert_random_bucket(rec, rng);
  }

  auto all_attacker = [&] {
    return peers.size() == params.outbound_slots &&
           std::all_of(peers.begin(), peers.end(), [](const Peer& p) { return p.attacker; });
  };

  SimTime now = 0;
  SimTime next_feeler = params.feeler_interval;
  SimTime next_close = params.close_interval;
  while (now < params.max_time) {
    now = std::min(next_feeler, next_close);
    if (now == next_feeler) {
      next_feeler += params.feeler_interval;
      if (auto tested = t.feeler_tick(rng, [](const NetAddress&) { return true; })) {
        ++res.feelers;
        res.attacker_in_tried += attackers.count(*tested);
      }
    }
    if (now == next_close) {
      next_close += params.close_interval;
      for (size_t k = 0; k < params.closes_per_interval; ++k) {
        std::vector<size_t> honest;
        for (size_t i = 0; i < peers.size(); ++i)
          if (!peers[i].attacker) honest.push_back(i);
        if (honest.empty()) break;
        peers.erase(peers.begin() + static_cast<long>(honest[rng.uniform(honest.size())]));
        ++res.closes;
      }
      while (peers.size() < params.outbound_slots) {
        auto p = draw();
        if (!p) break;
        peers.push_back(*p);
      }
      if (all_attacker()) {
        res.completed = true;
        res.elapsed = now;
        return res;
      }
    }
  }
  res.elapsed = params.max_time;
  return res;
}

AddrTables generate_synthetic_addrdb(const SyntheticDbSpec& spec) {
  Rng rng(spec.seed);
  AddrTables t(spec.key, spec.addrman);

  // Group prefixes: routable first octets, distinct second octets.
  std::vector<std::pair<uint8_t, uint8_t>> groups;
  std::set<std::pair<uint8_t, uint8_t>> seen;
  while (groups.size() < spec.groups) {
    uint8_t a = static_cast<uint8_t>(rng.range(1, 223));
    uint8_t b = static_cast<uint8_t>(rng.uniform(256));
    if (!NetAddress::ipv4(a, b, 0, 1).is_routable() || a == 0 || !seen.insert({a, b}).second) continue;
    groups.push_back({a, b});
  }
  auto random_addr = [&] {
    auto [a, b] = groups[rng.uniform(groups.size())];
    return NetAddress::ipv4(a, b, static_cast<uint8_t>(rng.uniform(256)), static_cast<uint8_t>(rng.range(1, 254)));
  };
  auto relayer = [&] { return random_addr().group(); };
  const uint64_t flags = services::kNetwork | services::kWitness;

  const size_t tried_target = static_cast<size_t>(spec.tried_fill * static_cast<double>(t.tried_capacity()));
  for (size_t guard = 0; t.tried_count() < tried_target && guard < tried_target * 4; ++guard) {
    t.mark_connected(AddressRecord{random_addr(), flags, 0}, rng);
  }

  const size_t new_target = static_cast<size_t>(spec.new_fill * static_cast<double>(t.new_capacity()));
  for (size_t guard = 0; t.new_ref_count() < new_target && guard < t.new_capacity() * 20; ++guard) {
    AddressRecord rec{random_addr(), flags, 0};
    t.insert_from_addr_msg(rec, relayer(), rng);
    while (rng.bernoulli(spec.extra_ref_prob)) t.insert_from_addr_msg(rec, relayer(), rng);
  }
  return t;
}

size_t distinct_groups(const AddrTables& t) {
  std::set<NetGroup> g;
  for (const auto& r : t.all_records()) g.insert(r.addr.group());
  return g.size();
}

}  // namespace v2net
