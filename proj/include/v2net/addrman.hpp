#pragma once

// Address manager: a bucketed "new" table of gossiped addresses (several
// references per address allowed) and a "tried" table of addresses that were
// connected to successfully.

#include <v2net/common.hpp>
#include <v2net/netaddr.hpp>

#include <functional>
#include <iosfwd>
#include <optional>
#include <unordered_map>
#include <vector>

namespace v2net {

struct AddressRecord {
  NetAddress addr;
  uint64_t services = 0;
  SimTime last_seen = 0;
};

enum class TableKind { New, Tried };
std::string_view to_string(TableKind t);

struct AddrmanConfig {
  size_t new_buckets = 1024;
  size_t tried_buckets = 256;
  size_t bucket_size = 64;
  size_t max_refs = 8;
};

enum class InsertResult { Added, AddedReference, AlreadyInBucket, RefCapReached, InTried, Unroutable };

struct Selection {
  AddressRecord record;
  TableKind table = TableKind::New;
};

class AddrTables {
 public:
  explicit AddrTables(uint64_t key = 0, AddrmanConfig cfg = {});

  /// Adds a reference in the new bucket determined by (address group,
  /// relayer group). A full bucket evicts a random resident reference.
  InsertResult insert_from_addr_msg(const AddressRecord& rec, NetGroup relayer, Rng& rng);

  /// Adds one reference in a uniformly random new bucket, without the
  /// routability check (simulation input only).
  InsertResult insert_random_bucket(const AddressRecord& rec, Rng& rng);

  /// Picks new or tried with equal probability (the non-empty one if only
  /// one has entries), then a uniformly random reference in it.
  std::optional<Selection> select_candidate(Rng& rng) const;
  std::optional<AddressRecord> random_new(Rng& rng) const;

  /// Moves the address to tried and deletes all its new references. Unknown
  /// addresses are inserted into tried directly.
  void mark_connected(const AddressRecord& rec, Rng& rng);

  /// Tests one random new-table address; promotes it if reachable. Returns
  /// the tested address.
  std::optional<NetAddress> feeler_tick(Rng& rng, const std::function<bool(const NetAddress&)>& reachable);

  /// Removes the address and every reference to it.
  bool remove(const NetAddress& addr);

  size_t new_ref_count() const { return m_new.occupied.size(); }
  size_t new_unique_count() const;
  size_t tried_count() const { return m_tried.occupied.size(); }
  size_t new_capacity() const { return m_cfg.new_buckets * m_cfg.bucket_size; }
  size_t tried_capacity() const { return m_cfg.tried_buckets * m_cfg.bucket_size; }
  size_t refs(const NetAddress& addr) const;
  bool in_tried(const NetAddress& addr) const;
  const AddressRecord* find(const NetAddress& addr) const;
  std::vector<AddressRecord> all_records() const;

  /// One line per reference: "<new|tried> <bucket> <ip> <port> <flags>".
  void dump(std::ostream& out) const;
  static AddrTables load(std::istream& in, uint64_t key = 0, AddrmanConfig cfg = {});

  /// Checks internal bookkeeping and the reference/exclusivity bounds.
  bool check_invariants() const;

  uint64_t key() const { return m_key; }
  const AddrmanConfig& config() const { return m_cfg; }

 private:
  struct Table {
    std::vector<int32_t> cells;          // entry id or -1
    std::vector<uint32_t> occupied;      // indices of filled cells
    std::vector<int32_t> occupied_pos;   // position in `occupied` per cell, or -1
    void init(size_t n);
    void put(size_t cell, int32_t id);
    int32_t clear(size_t cell);
  };
  struct Entry {
    AddressRecord rec;
    uint32_t new_refs = 0;
    std::vector<uint32_t> new_cells;
    int64_t tried_cell = -1;
    bool tried = false;
    bool live = false;
  };

  size_t new_bucket(const NetAddress& addr, NetGroup relayer) const;
  size_t tried_bucket(const NetAddress& addr) const;
  int32_t entry_id(const NetAddress& addr);
  void drop_if_orphan(int32_t id);
  void clear_new_cell(size_t cell);
  void strip_new_refs(int32_t id);
  void place_tried(int32_t id, Rng& rng);
  /// Places id in the given new bucket, evicting if full. Returns false if
  /// the address is already in that bucket.
  bool place_new(int32_t id, size_t bucket, Rng& rng);

  uint64_t m_key;
  AddrmanConfig m_cfg;
  Table m_new, m_tried;
  std::vector<Entry> m_entries;
  std::vector<int32_t> m_free_ids;
  std::unordered_map<NetAddress, int32_t, NetAddressHash> m_index;
};

/// True iff the candidate is routable, advertises every required flag, and
/// its group is not already among the outbound peers.
bool outbound_eligible(const AddressRecord& candidate, const std::vector<NetAddress>& current_outbound,
                       uint64_t required_flags);

}  // namespace v2net
