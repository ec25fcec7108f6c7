#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>

namespace retrylock {

class Mutex;

// Estimation from counter deltas, the way a monitoring view sees a lock:
// two snapshots, no per-event trace. Misses are not observable directly and
// enter through rho * gets; outputs that depend on that inference say so.

struct UtilSamples {
  std::uint64_t nonzero = 0;
  std::uint64_t total = 0;
};

struct StatSnapshot {
  std::uint64_t gets = 0;
  std::uint64_t sleeps = 0;
  double wall_time = 0;  // seconds
  UtilSamples util;
};

struct DerivedStats {
  double lambda = 0;  // gets per second
  double omega = 0;   // sleeps per second
  double rho = 0;     // pooled nonzero sample fraction
  double kappa = 0;   // omega / (lambda * rho)
  double k = 0;       // kappa / (1 + kappa * rho)
  double s = 0;       // rho / lambda, mean holding time in seconds
};

struct InsufficientActivity : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// kappa is undefined when the utilization estimate is zero (or absent).
struct ZeroUtilization : std::runtime_error {
  using std::runtime_error::runtime_error;
};

DerivedStats derive(const StatSnapshot& a, const StatSnapshot& b);

struct UtilizationEstimate {
  double rho = 0;
  double std_error = 0;  // binomial
  std::uint64_t samples = 0;
};

// Samples lock.read_sample() on the calling thread for `duration`, spacing
// samples by `interval` jittered +-25% so a periodic holder cannot phase-
// lock the sampler.
UtilizationEstimate estimate_utilization(const Mutex& lock,
                                         std::chrono::microseconds interval,
                                         std::chrono::milliseconds duration,
                                         std::uint64_t jitter_seed = 1);

}  // namespace retrylock
