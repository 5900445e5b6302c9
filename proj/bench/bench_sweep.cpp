#include <v2net/sweep.hpp>

#include <benchmark/benchmark.h>

using namespace v2net;

namespace {

const AddrTables& bench_db() {
  static const AddrTables db = generate_synthetic_addrdb(SyntheticDbSpec{});
  return db;
}

AddrGridSpec bench_spec() {
  AddrGridSpec s;
  s.attackers = {30, 50};
  s.closes = {5, 10};
  s.seeds = 4;
  return s;
}

void BM_AddrGridSerial(benchmark::State& st) {
  const auto& db = bench_db();
  for (auto _ : st) benchmark::DoNotOptimize(addr_grid_serial(db, bench_spec()));
}
BENCHMARK(BM_AddrGridSerial)->Unit(benchmark::kMillisecond);

void BM_AddrGridParallel(benchmark::State& st) {
  const auto& db = bench_db();
  for (auto _ : st) benchmark::DoNotOptimize(addr_grid_parallel(db, bench_spec(), static_cast<int>(st.range(0))));
}
BENCHMARK(BM_AddrGridParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

ScenarioConfig bench_scenario() {
  ScenarioConfig c = default_config(ScenarioKind::Downgrade);
  c.topology.honest_nodes = 20;
  c.log_events = false;
  return c;
}

void BM_SeedSweepSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(scenario_sweep_serial(bench_scenario(), {1, 2, 3, 4}));
}
BENCHMARK(BM_SeedSweepSerial)->Unit(benchmark::kMillisecond);

void BM_SeedSweepParallel(benchmark::State& st) {
  for (auto _ : st)
    benchmark::DoNotOptimize(scenario_sweep_parallel(bench_scenario(), {1, 2, 3, 4}, static_cast<int>(st.range(0))));
}
BENCHMARK(BM_SeedSweepParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
