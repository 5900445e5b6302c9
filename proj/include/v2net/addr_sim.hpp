#pragma once

// Outbound address-selection simulator: how long until every outbound slot
// of a node holds an attacker address, given an address database, a number
// of injected attacker addresses and a connection-closing rate.

#include <v2net/addrman.hpp>

#include <string>

namespace v2net {

struct AddrSelSimParams {
  size_t n_attacker_addrs = 20;
  size_t closes_per_interval = 1;
  uint64_t seed = 1;
  size_t outbound_slots = 10;
  SimTime feeler_interval = 2 * kMinutes;
  SimTime close_interval = 4 * kMinutes;
  SimTime max_time = 2000 * kDays;
};

struct AddrSimResult {
  SimTime elapsed = 0;
  bool completed = false;
  uint64_t feelers = 0;
  uint64_t closes = 0;
  uint64_t attacker_in_tried = 0;  // attacker addresses promoted by feelers
  double days() const { return static_cast<double>(elapsed) / static_cast<double>(kDays); }
};

enum class AddrSimError { TooFewGroups, EmptyDatabase, BadCloseCount };
std::string_view to_string(AddrSimError e);

/// Attacker address i lives in 0.(i%255+1).(i/255).1, one /16 group each
/// for up to 255 addresses.
NetAddress attacker_sim_address(size_t i);

/// Runs on a copy of `db`.
Expected<AddrSimResult, AddrSimError> run_addr_selection_sim(const AddrTables& db, const AddrSelSimParams& params);

struct SyntheticDbSpec {
  /// Target number of new-table references (fraction of capacity).
  double new_fill = 0.98;
  /// Tried entries as a fraction of tried capacity.
  double tried_fill = 0.20;
  size_t groups = 4000;
  /// Probability that an address is relayed again by another peer.
  double extra_ref_prob = 0.15;
  uint64_t seed = 1;
  AddrmanConfig addrman;
  uint64_t key = 0x5eed;
};

AddrTables generate_synthetic_addrdb(const SyntheticDbSpec& spec);

/// Number of distinct /16 groups across both tables.
size_t distinct_groups(const AddrTables& t);

}  // namespace v2net
