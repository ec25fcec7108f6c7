#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "retrylock/lock.hpp"
#include "retrylock/stats.hpp"

namespace retrylock {

struct ThreadSpawnError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BenchConfig {
  int threads = 2;
  MutexMode mode = MutexMode::Exclusive;
  WaitScheme scheme = TenG{};
  int spin_count = 255;
  double duration_s = 1.0;
  std::uint64_t hold_ns = 300;   // busy work inside the critical section
  std::uint64_t offcs_ns = 1000; // busy work between acquisitions
  bool pin_threads = false;
  std::uint64_t safety_cap = 0;  // wait episodes per acquire, 0 = none
  std::uint64_t sample_interval_us = 100;  // utilization sampler cadence
  std::uint64_t seed = 1;
};

struct BenchResult {
  std::uint64_t total_ops = 0;
  std::uint64_t gets = 0;
  std::uint64_t sleeps = 0;
  double elapsed_s = 0;
  double cpu_s = 0;  // summed worker thread CPU time
  double throughput = 0;
  double mean_wait_s = 0;  // loop time minus the configured work, per op

  UtilizationEstimate util;
  bool derived_ok = false;  // counter-delta estimation can fail at rho ~ 0
  DerivedStats derived;
  std::string derived_error;

  std::vector<std::uint64_t> per_thread_ops;
};

// Hammers one lock from `threads` workers for duration_s while a sampler
// thread estimates utilization. Per-thread op counts must add up to the
// lock's gets counter exactly; run_bench throws if they do not.
BenchResult run_bench(const BenchConfig& cfg);

struct CostPoint {
  int spin_count = 0;
  double episode_ns = 0;  // mean spin-plus-yield episode against a held lock
};

// Linear fit episode_ns = spin_count * poll_ns + yield_ns over a spin-count
// grid, measured against a lock held for the whole run. R^2 below 0.95
// flags the fit unreliable rather than hiding it.
struct CostModel {
  double poll_ns = 0;
  double yield_ns = 0;
  double r2 = 0;
  bool reliable = false;
  std::vector<CostPoint> points;
};

CostModel measure_costs(double seconds_per_point = 0.2);

}  // namespace retrylock
