#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "retrylock/holding_dist.hpp"
#include "retrylock/wait_scheme.hpp"

namespace retrylock {

// Discrete-event model of the lock: Poisson arrivals, one holder at a time,
// misses spin for a window delta, survivors of a release draw go to the
// orbit and retry later. Open system, abstract time units (the holding
// distribution sets the scale).

struct FixedSleep {
  double duration = 1.0;
};

struct ExponentialSleep {
  double mean = 1.0;
};

// Drive orbit visits by a wait scheme: yields become short visits of
// yield_cost units that do not count as sleeps, timed sleeps convert at
// units_per_ms. Episode indices advance per request exactly like the real
// acquire loop.
struct SchemeSleep {
  WaitScheme scheme = Patch6904068{};
  double yield_cost = 1.0;
  double units_per_ms = 1000.0;  // default: one unit is a microsecond
};

using SleepModel = std::variant<FixedSleep, ExponentialSleep, SchemeSleep>;

struct SimConfig {
  HoldingDist dist{Exponential{1.0}};
  double delta = 1.0;
  double lambda = 0.1;
  SleepModel sleep = FixedSleep{100.0};
  double horizon = 10000.0;
  double warmup = -1.0;  // negative: 10% of horizon
  std::uint64_t seed = 1;
  bool resume_spin_on_race = false;
  // When the winner of a release draw leaves losers behind, they go to the
  // orbit (default) or keep spinning on their remaining window.
  double util_sample_interval = 0.0;  // >0 turns on the sampling channel
};

struct SimReport {
  // Counts over the post-warmup window.
  std::uint64_t arrivals = 0;
  std::uint64_t gets = 0;    // == arrivals, one acquire per arrival
  std::uint64_t misses = 0;  // arrivals that found the lock busy
  std::uint64_t spin_episodes = 0;
  std::uint64_t sleeps = 0;  // timed orbit visits
  std::uint64_t yields = 0;  // yield visits (scheme sleep model only)
  std::uint64_t completions = 0;

  double rho = 0;    // busy time fraction
  double k = 0;      // sleeps / spin_episodes
  double kappa = 0;  // sleeps / misses
  double gamma = 0;  // mean spin elapsed per episode
  double mean_sleep = 0;

  // Waits per request (requests that arrived post-warmup and acquired).
  double w = 0;        // acquire - arrival
  double w_s = 0;      // spin part
  double w_orb = 0;    // orbit part
  double w_o = 0;      // wait minus the first spin
  double w_bar_o = 0;  // w_o normalized by requests that slept
  double throughput = 0;
  double mean_orbit = 0;  // time-average orbit population
  double spin_cpu = 0;    // total simulated spin time

  // Batch-means standard errors (20 batches).
  double se_rho = 0, se_k = 0, se_kappa = 0, se_w = 0, se_w_o = 0,
         se_w_bar_o = 0, se_throughput = 0;

  // Sampling channel (util_sample_interval > 0).
  std::uint64_t util_nonzero = 0;
  std::uint64_t util_total = 0;

  // Internal cross-checks.
  std::uint64_t single_spinner_releases = 0;
  std::uint64_t single_spinner_wins = 0;
  std::uint64_t requests_with_sleep = 0;
  bool unstable = false;  // orbit kept growing across the run

  double warmup_used = 0;
  double horizon_used = 0;
};

// Deterministic for a fixed (config, seed): same report, field for field.
SimReport run_sim(const SimConfig& cfg);

struct McResult {
  double estimate = 0;
  double std_error = 0;
  std::uint64_t trials = 0;
};

// Monte-Carlo oracle for formfactor(y): a tagged contender against
// N ~ Poisson(y) competitors wins a uniform draw with probability 1/(N+1).
McResult formfactor_mc(double y, std::uint64_t trials, std::uint64_t seed);

struct KRhoRow {
  double rho = 0;
  double lambda = 0;
  double k_measured = 0;
  double se_k = 0;
  double kappa_measured = 0;
  double k_linear = 0;
  double k_quadrature = 0;
};

// One run_sim per grid point (grid values in (0, 0.9]), analytic columns
// alongside. Seeds derive from cfg.seed and the point index.
std::vector<KRhoRow> k_vs_rho_sweep(const SimConfig& base,
                                    const std::vector<double>& rho_grid);

}  // namespace retrylock
