// Microbenchmarks for the hot paths: uncontended lock traffic per mode,
// contended acquire under each wait scheme, formfactor evaluation, and raw
// simulator event throughput.
#include <benchmark/benchmark.h>

#include <atomic>
#include <thread>

#include "retrylock/lock.hpp"
#include "retrylock/model.hpp"
#include "retrylock/sim.hpp"

using namespace retrylock;

static void BM_UncontendedExclusive(benchmark::State& state) {
  Mutex m;
  for (auto _ : state) {
    m.acquire(MutexMode::Exclusive, 1);
    m.release(MutexMode::Exclusive, 1);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_UncontendedExclusive);

static void BM_UncontendedShared(benchmark::State& state) {
  Mutex m;
  for (auto _ : state) {
    m.acquire(MutexMode::Shared, 1);
    m.release(MutexMode::Shared, 1);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_UncontendedShared);

static void BM_TryGetBusy(benchmark::State& state) {
  Mutex m;
  m.try_get(MutexMode::Exclusive, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.try_get(MutexMode::Exclusive, 8));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TryGetBusy);

// Two threads trading one lock; the scheme argument selects who pays what
// price for the collisions.
template <typename Scheme>
static void BM_ContendedPair(benchmark::State& state) {
  static Mutex m;
  AcquireOptions opts;
  opts.scheme = Scheme{};
  opts.spin_count = 255;
  const std::uint32_t id = static_cast<std::uint32_t>(state.thread_index()) + 1;
  for (auto _ : state) {
    m.acquire(MutexMode::Exclusive, id, opts);
    benchmark::ClobberMemory();
    m.release(MutexMode::Exclusive, id);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK_TEMPLATE(BM_ContendedPair, TenG)->Threads(2)->UseRealTime();
BENCHMARK_TEMPLATE(BM_ContendedPair, Scheme2)->Threads(2)->UseRealTime();

static void BM_Formfactor(benchmark::State& state) {
  double y = 0.0;
  for (auto _ : state) {
    y += 1e-9;
    benchmark::DoNotOptimize(formfactor(1.0 + y));
  }
}
BENCHMARK(BM_Formfactor);

static void BM_SpinInefficiency(benchmark::State& state) {
  const HoldingDist d{Exponential{1.0}};
  double delta = 0.0;
  for (auto _ : state) {
    delta += 1e-9;
    benchmark::DoNotOptimize(spin_inefficiency_k0(d, 2.0 + delta));
  }
}
BENCHMARK(BM_SpinInefficiency);

static void BM_SimThroughput(benchmark::State& state) {
  SimConfig cfg;
  cfg.dist = HoldingDist(Exponential{1.0});
  cfg.delta = 2.0;
  cfg.lambda = 0.2;
  cfg.sleep = FixedSleep{100.0};
  cfg.horizon = static_cast<double>(state.range(0));
  std::uint64_t seed = 1;
  std::uint64_t arrivals = 0;
  for (auto _ : state) {
    cfg.seed = seed++;
    const SimReport r = run_sim(cfg);
    arrivals += r.arrivals;
    benchmark::DoNotOptimize(r.w);
  }
  state.SetItemsProcessed(static_cast<int64_t>(arrivals));
}
BENCHMARK(BM_SimThroughput)->Arg(100000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
