#include "retrylock/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <mutex>
#include <system_error>
#include <thread>

#ifdef __linux__
#include <pthread.h>
#endif
#include <time.h>

namespace retrylock {

namespace {

using Clock = std::chrono::steady_clock;

volatile std::uint64_t burn_sink = 0;

void burn_iters(std::uint64_t iters) {
  std::uint64_t x = burn_sink;
  for (std::uint64_t i = 0; i < iters; ++i) x = x * 1664525u + 1013904223u;
  burn_sink = x;
}

// Iterations of the burn loop per nanosecond on this machine.
double calibrate_burn() {
  burn_iters(1u << 16);  // wake the clock governor up first
  const std::uint64_t n = 1u << 22;
  const auto t0 = Clock::now();
  burn_iters(n);
  const auto t1 = Clock::now();
  const double ns =
      std::chrono::duration<double, std::nano>(t1 - t0).count();
  return static_cast<double>(n) / std::max(ns, 1.0);
}

double thread_cpu_seconds() {
  timespec ts{};
  if (clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts) != 0) return 0.0;
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

void pin_to_core(unsigned core) {
#ifdef __linux__
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(core % std::max(1u, std::thread::hardware_concurrency()), &set);
  pthread_setaffinity_np(pthread_self(), sizeof set, &set);
#else
  (void)core;
#endif
}

}  // namespace

BenchResult run_bench(const BenchConfig& cfg) {
  if (cfg.threads < 1) throw std::invalid_argument("bench: threads must be >= 1");
  if (!(cfg.duration_s > 0)) {
    throw std::invalid_argument("bench: duration must be positive");
  }
  if (cfg.spin_count < 0) {
    throw std::invalid_argument("bench: spin_count must be >= 0");
  }
  validate_scheme(cfg.scheme);

  const double iters_per_ns = calibrate_burn();
  const auto burn_for = [iters_per_ns](std::uint64_t ns) {
    burn_iters(static_cast<std::uint64_t>(iters_per_ns * static_cast<double>(ns)));
  };

  Mutex lock;
  std::atomic<bool> go{false};
  std::atomic<bool> stop{false};
  std::vector<std::uint64_t> ops(static_cast<std::size_t>(cfg.threads), 0);
  std::vector<double> cpu(static_cast<std::size_t>(cfg.threads), 0.0);
  std::vector<double> wall(static_cast<std::size_t>(cfg.threads), 0.0);
  std::exception_ptr first_error;
  std::mutex error_mu;

  auto worker = [&](int idx) {
    if (cfg.pin_threads) pin_to_core(static_cast<unsigned>(idx));
    AcquireOptions opts;
    opts.spin_count = cfg.spin_count;
    opts.scheme = cfg.scheme;
    opts.wait_episode_cap = cfg.safety_cap;
    const std::uint32_t id = static_cast<std::uint32_t>(idx) + 1;
    while (!go.load(std::memory_order_acquire)) std::this_thread::yield();
    const auto t0 = Clock::now();
    try {
      while (!stop.load(std::memory_order_relaxed)) {
        lock.acquire(cfg.mode, id, opts);
        burn_for(cfg.hold_ns);
        lock.release(cfg.mode, id);
        burn_for(cfg.offcs_ns);
        ++ops[static_cast<std::size_t>(idx)];
      }
    } catch (...) {
      std::lock_guard<std::mutex> g(error_mu);
      if (!first_error) first_error = std::current_exception();
      stop.store(true, std::memory_order_relaxed);
    }
    wall[static_cast<std::size_t>(idx)] =
        std::chrono::duration<double>(Clock::now() - t0).count();
    cpu[static_cast<std::size_t>(idx)] = thread_cpu_seconds();
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(cfg.threads));
  try {
    for (int i = 0; i < cfg.threads; ++i) pool.emplace_back(worker, i);
  } catch (const std::system_error& e) {
    stop.store(true);
    go.store(true, std::memory_order_release);
    for (auto& t : pool) t.join();
    throw ThreadSpawnError(std::string("could not start workers: ") + e.what());
  }

  const auto t_start = Clock::now();
  go.store(true, std::memory_order_release);

  BenchResult out;
  const auto duration = std::chrono::milliseconds(
      std::max(1L, static_cast<long>(cfg.duration_s * 1e3)));
  if (cfg.sample_interval_us > 0) {
    out.util = estimate_utilization(
        lock, std::chrono::microseconds(cfg.sample_interval_us), duration,
        cfg.seed);
  } else {
    std::this_thread::sleep_for(duration);
  }
  stop.store(true, std::memory_order_relaxed);
  for (auto& t : pool) t.join();
  out.elapsed_s = std::chrono::duration<double>(Clock::now() - t_start).count();

  if (first_error) std::rethrow_exception(first_error);

  const auto sample = lock.read_sample();
  out.gets = sample.gets;
  out.sleeps = sample.sleeps;
  out.per_thread_ops = ops;
  for (auto o : ops) out.total_ops += o;
  if (out.total_ops != out.gets) {
    throw std::logic_error("bench: per-thread ops do not add up to gets");
  }
  for (double c : cpu) out.cpu_s += c;
  out.throughput = out.total_ops / out.elapsed_s;

  double thread_seconds = 0;
  for (double w : wall) thread_seconds += w;
  const double work_s = static_cast<double>(out.total_ops) *
                        static_cast<double>(cfg.hold_ns + cfg.offcs_ns) * 1e-9;
  out.mean_wait_s =
      out.total_ops
          ? std::max(0.0, (thread_seconds - work_s) /
                              static_cast<double>(out.total_ops))
          : 0.0;

  if (cfg.sample_interval_us > 0) {
    StatSnapshot a, b;
    b.gets = out.gets;
    b.sleeps = out.sleeps;
    b.wall_time = out.elapsed_s;
    b.util.total = out.util.samples;
    b.util.nonzero = static_cast<std::uint64_t>(
        std::llround(out.util.rho * static_cast<double>(out.util.samples)));
    try {
      out.derived = derive(a, b);
      out.derived_ok = true;
    } catch (const std::exception& e) {
      out.derived_error = e.what();
    }
  }
  return out;
}

CostModel measure_costs(double seconds_per_point) {
  if (!(seconds_per_point > 0)) {
    throw std::invalid_argument("measure_costs needs a positive budget");
  }
  Mutex lock;
  if (lock.try_get(MutexMode::Exclusive, 0xBEEF) != TryResult::Acquired) {
    throw std::logic_error("measure_costs: fresh lock was not free");
  }

  const int grid[] = {0, 255, 510, 1020, 2040, 4080};
  CostModel model;
  for (int spin : grid) {
    AcquireOptions opts;
    opts.spin_count = spin;
    opts.scheme = TenG{};

    // Pilot run to size the real one to the time budget.
    opts.wait_episode_cap = 64;
    auto t0 = Clock::now();
    try {
      lock.acquire(MutexMode::Exclusive, 7, opts);
      throw std::logic_error("measure_costs: held lock was acquired");
    } catch (const AttemptCapExceeded&) {
    }
    double per_ns = std::chrono::duration<double, std::nano>(Clock::now() - t0)
                        .count() /
                    64.0;

    const double want = seconds_per_point * 1e9 / std::max(per_ns, 1.0);
    const std::uint64_t episodes = static_cast<std::uint64_t>(
        std::min(5e6, std::max(64.0, want)));
    opts.wait_episode_cap = episodes;
    t0 = Clock::now();
    try {
      lock.acquire(MutexMode::Exclusive, 7, opts);
      throw std::logic_error("measure_costs: held lock was acquired");
    } catch (const AttemptCapExceeded&) {
    }
    per_ns = std::chrono::duration<double, std::nano>(Clock::now() - t0)
                 .count() /
             static_cast<double>(episodes);
    model.points.push_back(CostPoint{spin, per_ns});
  }
  lock.release(MutexMode::Exclusive, 0xBEEF);

  // Ordinary least squares for episode_ns = spin * poll_ns + yield_ns.
  const double n = static_cast<double>(model.points.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : model.points) {
    sx += p.spin_count;
    sy += p.episode_ns;
    sxx += static_cast<double>(p.spin_count) * p.spin_count;
    sxy += p.spin_count * p.episode_ns;
  }
  const double denom = n * sxx - sx * sx;
  model.poll_ns = (n * sxy - sx * sy) / denom;
  model.yield_ns = (sy - model.poll_ns * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / n;
  for (const auto& p : model.points) {
    const double fit = model.poll_ns * p.spin_count + model.yield_ns;
    ss_res += (p.episode_ns - fit) * (p.episode_ns - fit);
    ss_tot += (p.episode_ns - ybar) * (p.episode_ns - ybar);
  }
  model.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 0.0;
  model.reliable = model.r2 >= 0.95 && model.poll_ns > 0;
  return model;
}

}  // namespace retrylock
