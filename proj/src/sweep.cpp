#include <v2net/sweep.hpp>

#include <omp.h>

#include <algorithm>
#include <optional>

namespace v2net {

namespace {

struct Task {
  size_t cell;
  size_t seed;
};

std::vector<AddrGridCell> empty_cells(const AddrGridSpec& spec) {
  std::vector<AddrGridCell> cells;
  for (size_t a : spec.attackers) {
    for (size_t c : spec.closes) {
      AddrGridCell cell;
      cell.attackers = a;
      cell.closes = c;
      cell.days.assign(spec.seeds, 0.0);
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

AddrSelSimParams task_params(const AddrGridSpec& spec, const AddrGridCell& cell, size_t k) {
  AddrSelSimParams p = spec.base;
  p.n_attacker_addrs = cell.attackers;
  p.closes_per_interval = cell.closes;
  p.seed = spec.seed_base + k + 1;
  return p;
}

void finish(std::vector<AddrGridCell>& cells) {
  for (auto& c : cells) {
    if (c.days.empty()) continue;
    double sum = 0;
    for (double d : c.days) sum += d;
    c.mean_days = sum / static_cast<double>(c.days.size());
    c.min_days = *std::min_element(c.days.begin(), c.days.end());
    c.max_days = *std::max_element(c.days.begin(), c.days.end());
  }
}

int resolve_threads(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

}  // namespace

Expected<std::vector<AddrGridCell>, AddrSimError> addr_grid_serial(const AddrTables& db, const AddrGridSpec& spec) {
  auto cells = empty_cells(spec);
  for (auto& cell : cells) {
    for (size_t k = 0; k < spec.seeds; ++k) {
      auto r = run_addr_selection_sim(db, task_params(spec, cell, k));
      if (!r) return r.error();
      cell.days[k] = r->days();
      cell.completed += r->completed;
    }
  }
  finish(cells);
  return cells;
}

Expected<std::vector<AddrGridCell>, AddrSimError> addr_grid_parallel(const AddrTables& db, const AddrGridSpec& spec,
                                                                     int threads) {
  auto cells = empty_cells(spec);
  std::vector<Task> tasks;
  for (size_t i = 0; i < cells.size(); ++i)
    for (size_t k = 0; k < spec.seeds; ++k) tasks.push_back({i, k});
  std::vector<uint8_t> done(tasks.size(), 0);
  std::vector<std::optional<AddrSimError>> errors(tasks.size());

  const auto n = static_cast<std::ptrdiff_t>(tasks.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_threads(threads))
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const Task& task = tasks[static_cast<size_t>(t)];
    auto r = run_addr_selection_sim(db, task_params(spec, cells[task.cell], task.seed));
    if (!r) {
      errors[static_cast<size_t>(t)] = r.error();
      continue;
    }
    cells[task.cell].days[task.seed] = r->days();
    done[static_cast<size_t>(t)] = r->completed;
  }
  for (size_t t = 0; t < tasks.size(); ++t) {
    if (errors[t]) return *errors[t];
    cells[tasks[t].cell].completed += done[t];
  }
  finish(cells);
  return cells;
}

const AddrGridCell* find_cell(const std::vector<AddrGridCell>& cells, size_t attackers, size_t closes) {
  for (const auto& c : cells)
    if (c.attackers == attackers && c.closes == closes) return &c;
  return nullptr;
}

bool grid_monotone(const std::vector<AddrGridCell>& cells, const AddrGridSpec& spec) {
  auto a = spec.attackers;
  auto c = spec.closes;
  std::sort(a.begin(), a.end());
  std::sort(c.begin(), c.end());
  for (size_t i = 0; i < a.size(); ++i) {
    for (size_t j = 0; j < c.size(); ++j) {
      const AddrGridCell* here = find_cell(cells, a[i], c[j]);
      if (!here) return false;
      if (i + 1 < a.size()) {
        const AddrGridCell* next = find_cell(cells, a[i + 1], c[j]);
        if (!next || next->mean_days > here->mean_days) return false;
      }
      if (j + 1 < c.size()) {
        const AddrGridCell* next = find_cell(cells, a[i], c[j + 1]);
        if (!next || next->mean_days > here->mean_days) return false;
      }
    }
  }
  return true;
}

std::vector<RunReport> scenario_sweep_serial(const ScenarioConfig& base, const std::vector<uint64_t>& seeds) {
  std::vector<RunReport> out;
  for (uint64_t s : seeds) {
    ScenarioConfig c = base;
    c.seed = s;
    out.push_back(run_scenario(c));
  }
  return out;
}

std::vector<RunReport> scenario_sweep_parallel(const ScenarioConfig& base, const std::vector<uint64_t>& seeds,
                                               int threads) {
  std::vector<RunReport> out(seeds.size());
  const auto n = static_cast<std::ptrdiff_t>(seeds.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_threads(threads))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    ScenarioConfig c = base;
    c.seed = seeds[static_cast<size_t>(i)];
    out[static_cast<size_t>(i)] = run_scenario(c);
  }
  return out;
}

}  // namespace v2net
