#include <v2net/addrman.hpp>

#include <istream>
#include <ostream>
#include <sstream>

namespace v2net {

std::string_view to_string(TableKind t) { return t == TableKind::New ? "new" : "tried"; }

void AddrTables::Table::init(size_t n) {
  cells.assign(n, -1);
  occupied_pos.assign(n, -1);
  occupied.clear();
}

void AddrTables::Table::put(size_t cell, int32_t id) {
  cells[cell] = id;
  occupied_pos[cell] = static_cast<int32_t>(occupied.size());
  occupied.push_back(static_cast<uint32_t>(cell));
}

int32_t AddrTables::Table::clear(size_t cell) {
  int32_t id = cells[cell];
  if (id < 0) return id;
  cells[cell] = -1;
  const auto pos = static_cast<size_t>(occupied_pos[cell]);
  const uint32_t last = occupied.back();
  occupied[pos] = last;
  occupied_pos[last] = static_cast<int32_t>(pos);
  occupied.pop_back();
  occupied_pos[cell] = -1;
  return id;
}

AddrTables::AddrTables(uint64_t key, AddrmanConfig cfg) : m_key(key), m_cfg(cfg) {
  m_new.init(m_cfg.new_buckets * m_cfg.bucket_size);
  m_tried.init(m_cfg.tried_buckets * m_cfg.bucket_size);
}

size_t AddrTables::new_bucket(const NetAddress& addr, NetGroup relayer) const {
  uint64_t h = mix64(m_key ^ mix64(addr.group().value) ^ mix64(relayer.value + 0x51ed27));
  return static_cast<size_t>(h % m_cfg.new_buckets);
}

size_t AddrTables::tried_bucket(const NetAddress& addr) const {
  uint64_t h = mix64(m_key ^ 0x7e1d ^ NetAddressHash{}(addr));
  return static_cast<size_t>(h % m_cfg.tried_buckets);
}

int32_t AddrTables::entry_id(const NetAddress& addr) {
  auto it = m_index.find(addr);
  if (it != m_index.end()) return it->second;
  int32_t id;
  if (!m_free_ids.empty()) {
    id = m_free_ids.back();
    m_free_ids.pop_back();
  } else {
    id = static_cast<int32_t>(m_entries.size());
    m_entries.emplace_back();
  }
  m_entries[id] = Entry{};
  m_entries[id].rec.addr = addr;
  m_entries[id].live = true;
  m_index.emplace(addr, id);
  return id;
}

void AddrTables::drop_if_orphan(int32_t id) {
  Entry& e = m_entries[id];
  if (!e.live || e.tried || e.new_refs > 0) return;
  m_index.erase(e.rec.addr);
  e.live = false;
  m_free_ids.push_back(id);
}

void AddrTables::clear_new_cell(size_t cell) {
  int32_t id = m_new.clear(cell);
  if (id < 0) return;
  auto& e = m_entries[id];
  --e.new_refs;
  std::erase(e.new_cells, static_cast<uint32_t>(cell));
}

bool AddrTables::place_new(int32_t id, size_t bucket, Rng& rng) {
  const size_t base = bucket * m_cfg.bucket_size;
  std::optional<size_t> free_cell;
  for (size_t i = 0; i < m_cfg.bucket_size; ++i) {
    int32_t v = m_new.cells[base + i];
    if (v == id) return false;
    if (v < 0 && !free_cell) free_cell = base + i;
  }
  if (!free_cell) {
    size_t victim = base + rng.uniform(m_cfg.bucket_size);
    int32_t old = m_new.cells[victim];
    clear_new_cell(victim);
    drop_if_orphan(old);
    free_cell = victim;
  }
  m_new.put(*free_cell, id);
  ++m_entries[id].new_refs;
  m_entries[id].new_cells.push_back(static_cast<uint32_t>(*free_cell));
  return true;
}

InsertResult AddrTables::insert_from_addr_msg(const AddressRecord& rec, NetGroup relayer, Rng& rng) {
  if (!rec.addr.is_routable()) return InsertResult::Unroutable;
  const bool known = m_index.count(rec.addr) > 0;
  int32_t id = entry_id(rec.addr);
  Entry& e = m_entries[id];
  if (!known) {
    e.rec = rec;
  } else {
    e.rec.services |= rec.services;
    e.rec.last_seen = std::max(e.rec.last_seen, rec.last_seen);
  }
  if (e.tried) return InsertResult::InTried;
  if (e.new_refs >= m_cfg.max_refs) return InsertResult::RefCapReached;
  const bool had_refs = e.new_refs > 0;
  if (!place_new(id, new_bucket(rec.addr, relayer), rng)) return InsertResult::AlreadyInBucket;
  return had_refs ? InsertResult::AddedReference : InsertResult::Added;
}

InsertResult AddrTables::insert_random_bucket(const AddressRecord& rec, Rng& rng) {
  const bool known = m_index.count(rec.addr) > 0;
  int32_t id = entry_id(rec.addr);
  Entry& e = m_entries[id];
  if (!known) e.rec = rec;
  if (e.tried) return InsertResult::InTried;
  if (e.new_refs >= m_cfg.max_refs) return InsertResult::RefCapReached;
  const bool had_refs = e.new_refs > 0;
  if (!place_new(id, rng.uniform(m_cfg.new_buckets), rng)) return InsertResult::AlreadyInBucket;
  return had_refs ? InsertResult::AddedReference : InsertResult::Added;
}

std::optional<AddressRecord> AddrTables::random_new(Rng& rng) const {
  if (m_new.occupied.empty()) return std::nullopt;
  uint32_t cell = m_new.occupied[rng.uniform(m_new.occupied.size())];
  return m_entries[m_new.cells[cell]].rec;
}

std::optional<Selection> AddrTables::select_candidate(Rng& rng) const {
  const bool has_new = !m_new.occupied.empty();
  const bool has_tried = !m_tried.occupied.empty();
  if (!has_new && !has_tried) return std::nullopt;
  bool use_tried;
  if (has_new && has_tried) use_tried = rng.uniform(2) == 1;
  else use_tried = has_tried;
  const Table& t = use_tried ? m_tried : m_new;
  uint32_t cell = t.occupied[rng.uniform(t.occupied.size())];
  return Selection{m_entries[t.cells[cell]].rec, use_tried ? TableKind::Tried : TableKind::New};
}

void AddrTables::strip_new_refs(int32_t id) {
  auto cells = m_entries[id].new_cells;
  for (uint32_t c : cells) clear_new_cell(c);
}

void AddrTables::place_tried(int32_t id, Rng& rng) {
  const size_t base = tried_bucket(m_entries[id].rec.addr) * m_cfg.bucket_size;
  std::optional<size_t> free_cell;
  for (size_t i = 0; i < m_cfg.bucket_size; ++i) {
    if (m_tried.cells[base + i] < 0) {
      free_cell = base + i;
      break;
    }
  }
  if (!free_cell) {
    // Evicted tried entries go back to the new table.
    size_t victim = base + rng.uniform(m_cfg.bucket_size);
    int32_t old = m_tried.clear(victim);
    m_entries[old].tried = false;
    m_entries[old].tried_cell = -1;
    if (!place_new(old, new_bucket(m_entries[old].rec.addr, m_entries[old].rec.addr.group()), rng)) {
      drop_if_orphan(old);
    }
    free_cell = victim;
  }
  m_tried.put(*free_cell, id);
  m_entries[id].tried = true;
  m_entries[id].tried_cell = static_cast<int64_t>(*free_cell);
}

void AddrTables::mark_connected(const AddressRecord& rec, Rng& rng) {
  const bool known = m_index.count(rec.addr) > 0;
  int32_t id = entry_id(rec.addr);
  Entry& e = m_entries[id];
  if (!known) e.rec = rec;
  e.rec.last_seen = std::max(e.rec.last_seen, rec.last_seen);
  if (e.tried) return;
  strip_new_refs(id);
  place_tried(id, rng);
}

std::optional<NetAddress> AddrTables::feeler_tick(Rng& rng, const std::function<bool(const NetAddress&)>& reachable) {
  auto pick = random_new(rng);
  if (!pick) return std::nullopt;
  if (reachable(pick->addr)) mark_connected(*pick, rng);
  return pick->addr;
}

bool AddrTables::remove(const NetAddress& addr) {
  auto it = m_index.find(addr);
  if (it == m_index.end()) return false;
  int32_t id = it->second;
  strip_new_refs(id);
  if (m_entries[id].tried) {
    m_tried.clear(static_cast<size_t>(m_entries[id].tried_cell));
    m_entries[id].tried = false;
    m_entries[id].tried_cell = -1;
  }
  drop_if_orphan(id);
  return true;
}

size_t AddrTables::new_unique_count() const {
  size_t n = 0;
  for (const auto& [addr, id] : m_index)
    if (m_entries[id].new_refs > 0) ++n;
  return n;
}

size_t AddrTables::refs(const NetAddress& addr) const {
  auto it = m_index.find(addr);
  return it == m_index.end() ? 0 : m_entries[it->second].new_refs;
}

bool AddrTables::in_tried(const NetAddress& addr) const {
  auto it = m_index.find(addr);
  return it != m_index.end() && m_entries[it->second].tried;
}

const AddressRecord* AddrTables::find(const NetAddress& addr) const {
  auto it = m_index.find(addr);
  return it == m_index.end() ? nullptr : &m_entries[it->second].rec;
}

std::vector<AddressRecord> AddrTables::all_records() const {
  std::vector<AddressRecord> out;
  out.reserve(m_index.size());
  for (const auto& e : m_entries)
    if (e.live) out.push_back(e.rec);
  return out;
}

void AddrTables::dump(std::ostream& out) const {
  auto emit = [&](const Table& t, std::string_view name) {
    for (size_t cell = 0; cell < t.cells.size(); ++cell) {
      int32_t id = t.cells[cell];
      if (id < 0) continue;
      const auto& r = m_entries[id].rec;
      out << name << ' ' << cell / m_cfg.bucket_size << ' ' << r.addr.ip_string() << ' ' << r.addr.port() << ' '
          << r.services << '\n';
    }
  };
  emit(m_new, "new");
  emit(m_tried, "tried");
}

AddrTables AddrTables::load(std::istream& in, uint64_t key, AddrmanConfig cfg) {
  AddrTables t(key, cfg);
  Rng rng(key ^ 0x10ad);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string table, ip;
    size_t bucket = 0;
    uint32_t port = 0;
    uint64_t flags = 0;
    if (!(ss >> table >> bucket >> ip >> port >> flags) || port > 65535) {
      throw std::invalid_argument("addr dump line " + std::to_string(lineno) + ": malformed");
    }
    auto parsed = NetAddress::parse(ip);
    if (!parsed) throw std::invalid_argument("addr dump line " + std::to_string(lineno) + ": bad ip " + ip);
    NetAddress addr = parsed->with_port(static_cast<uint16_t>(port));
    int32_t id = t.entry_id(addr);
    t.m_entries[id].rec.services = flags;
    if (table == "new") {
      if (bucket >= cfg.new_buckets) throw std::invalid_argument("addr dump: new bucket out of range");
      if (t.m_entries[id].tried || t.m_entries[id].new_refs >= cfg.max_refs) continue;
      t.place_new(id, bucket, rng);
    } else if (table == "tried") {
      if (bucket >= cfg.tried_buckets) throw std::invalid_argument("addr dump: tried bucket out of range");
      if (t.m_entries[id].tried) continue;
      t.strip_new_refs(id);
      const size_t base = bucket * cfg.bucket_size;
      size_t i = 0;
      while (i < cfg.bucket_size && t.m_tried.cells[base + i] >= 0) ++i;
      if (i == cfg.bucket_size) {
        t.drop_if_orphan(id);
        continue;
      }
      t.m_tried.put(base + i, id);
      t.m_entries[id].tried = true;
      t.m_entries[id].tried_cell = static_cast<int64_t>(base + i);
    } else {
      throw std::invalid_argument("addr dump line " + std::to_string(lineno) + ": unknown table " + table);
    }
  }
  return t;
}

bool AddrTables::check_invariants() const {
  std::vector<uint32_t> new_refs(m_entries.size(), 0), tried_refs(m_entries.size(), 0);
  for (uint32_t c : m_new.occupied) ++new_refs[m_new.cells[c]];
  for (uint32_t c : m_tried.occupied) ++tried_refs[m_tried.cells[c]];
  size_t live = 0;
  for (size_t id = 0; id < m_entries.size(); ++id) {
    const Entry& e = m_entries[id];
    if (!e.live) {
      if (new_refs[id] || tried_refs[id]) return false;
      continue;
    }
    ++live;
    if (new_refs[id] != e.new_refs || e.new_cells.size() != e.new_refs) return false;
    if (e.new_refs > m_cfg.max_refs) return false;
    if (tried_refs[id] != (e.tried ? 1u : 0u)) return false;
    if (e.tried && e.new_refs) return false;
    if (!e.tried && !e.new_refs) return false;
  }
  if (live != m_index.size()) return false;
  return m_new.occupied.size() <= new_capacity();
}

bool outbound_eligible(const AddressRecord& candidate, const std::vector<NetAddress>& current_outbound,
                       uint64_t required_flags) {
  if (!candidate.addr.is_routable()) return false;
  if ((candidate.services & required_flags) != required_flags) return false;
  const NetGroup g = candidate.addr.group();
  for (const auto& a : current_outbound)
    if (a.group() == g) return false;
  return true;
}

}  // namespace v2net
