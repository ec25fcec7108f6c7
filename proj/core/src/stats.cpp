#include "retrylock/stats.hpp"

#include <cmath>
#include <random>
#include <thread>

#include "retrylock/lock.hpp"
#include "retrylock/model.hpp"

namespace retrylock {

DerivedStats derive(const StatSnapshot& a, const StatSnapshot& b) {
  const double dt = b.wall_time - a.wall_time;
  if (!(dt > 0)) throw std::invalid_argument("snapshots must move forward");
  if (b.gets < a.gets || b.sleeps < a.sleeps || b.util.nonzero < a.util.nonzero ||
      b.util.total < a.util.total) {
    throw std::invalid_argument("counters ran backwards between snapshots");
  }
  const auto d_gets = b.gets - a.gets;
  if (d_gets == 0) {
    throw InsufficientActivity("no gets between the snapshots");
  }
  const auto d_total = b.util.total - a.util.total;
  DerivedStats out;
  out.lambda = static_cast<double>(d_gets) / dt;
  out.omega = static_cast<double>(b.sleeps - a.sleeps) / dt;
  if (d_total == 0) {
    throw ZeroUtilization("no utilization samples between the snapshots");
  }
  out.rho = static_cast<double>(b.util.nonzero - a.util.nonzero) /
            static_cast<double>(d_total);
  if (out.rho == 0) {
    throw ZeroUtilization("sampled utilization is zero, kappa is undefined");
  }
  out.kappa = out.omega / (out.lambda * out.rho);
  out.k = k_from_kappa(out.kappa, out.rho);
  out.s = out.rho / out.lambda;
  return out;
}

UtilizationEstimate estimate_utilization(const Mutex& lock,
                                         std::chrono::microseconds interval,
                                         std::chrono::milliseconds duration,
                                         std::uint64_t jitter_seed) {
  if (interval.count() <= 0 || duration.count() <= 0) {
    throw std::invalid_argument("sampling needs positive interval and duration");
  }
  std::mt19937 rng(static_cast<std::uint32_t>(jitter_seed));
  std::uniform_real_distribution<double> jitter(0.75, 1.25);

  UtilizationEstimate out;
  std::uint64_t nonzero = 0;
  const auto deadline = std::chrono::steady_clock::now() + duration;
  auto next = std::chrono::steady_clock::now();
  for (;;) {
    const auto sample = lock.read_sample();
    ++out.samples;
    if (!sample.word.free()) ++nonzero;
    next += std::chrono::microseconds(
        static_cast<long>(interval.count() * jitter(rng)));
    if (next >= deadline) break;
    std::this_thread::sleep_until(next);
  }
  const double n = static_cast<double>(out.samples);
  out.rho = static_cast<double>(nonzero) / n;
  out.std_error = std::sqrt(out.rho * (1.0 - out.rho) / n);
  return out;
}

}  // namespace retrylock
