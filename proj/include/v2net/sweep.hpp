#pragma once

// Grid and seed sweeps. Each kernel has a serial reference and an OpenMP
// version that must produce identical results.

#include <v2net/addr_sim.hpp>
#include <v2net/scenarios.hpp>

#include <vector>

namespace v2net {

struct AddrGridSpec {
  std::vector<size_t> attackers{20, 30, 40, 50};
  std::vector<size_t> closes{1, 2, 5, 10};
  size_t seeds = 64;
  uint64_t seed_base = 0;
  AddrSelSimParams base;
};

struct AddrGridCell {
  size_t attackers = 0;
  size_t closes = 0;
  double mean_days = 0;
  double min_days = 0;
  double max_days = 0;
  size_t completed = 0;
  std::vector<double> days;  // per seed, in seed order
};

/// Cells in row-major order: attackers outer, closes inner. Seed k of every
/// cell uses seed_base + k + 1.
Expected<std::vector<AddrGridCell>, AddrSimError> addr_grid_serial(const AddrTables& db, const AddrGridSpec& spec);
Expected<std::vector<AddrGridCell>, AddrSimError> addr_grid_parallel(const AddrTables& db, const AddrGridSpec& spec,
                                                                     int threads = 0);

const AddrGridCell* find_cell(const std::vector<AddrGridCell>& cells, size_t attackers, size_t closes);

/// Mean time is non-increasing along both axes.
bool grid_monotone(const std::vector<AddrGridCell>& cells, const AddrGridSpec& spec);

std::vector<RunReport> scenario_sweep_serial(const ScenarioConfig& base, const std::vector<uint64_t>& seeds);
std::vector<RunReport> scenario_sweep_parallel(const ScenarioConfig& base, const std::vector<uint64_t>& seeds,
                                               int threads = 0);

}  // namespace v2net
