#include "retrylock/validate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>
#include <utility>
#include <vector>

#include "retrylock/bench.hpp"
#include "retrylock/csv.hpp"
#include "retrylock/lock.hpp"
#include "retrylock/model.hpp"
#include "retrylock/sim.hpp"
#include "retrylock/stats.hpp"

namespace retrylock {

namespace {

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(CriterionResult&, std::uint64_t seed)> run;
};

// 1. Quadrature k0 and Gamma against exponential / deterministic closed
//    forms at five spin windows, to 1e-8.
void crit_closed_forms(CriterionResult& r, std::uint64_t) {
  const HoldingDist expo{Exponential{1.0}};
  const HoldingDist det{Deterministic{1.0}};
  const double deltas[] = {0.1, 0.5, 1.0, 2.0, 5.0};
  double worst = 0;
  for (double d : deltas) {
    const double k0e = std::exp(-d);
    const double ge = 1.0 - std::exp(-d);
    const double k0d = std::max(0.0, 1.0 - d);
    const double gd = d <= 1.0 ? d - 0.5 * d * d : 0.5;
    worst = std::max(worst, std::abs(spin_inefficiency_k0(expo, d) - k0e));
    worst = std::max(worst, std::abs(spin_cpu_gamma(expo, d) - ge));
    worst = std::max(worst, std::abs(spin_inefficiency_k0(det, d) - k0d));
    worst = std::max(worst, std::abs(spin_cpu_gamma(det, d) - gd));
  }
  r.status = worst <= 1e-8 ? CriterionStatus::Pass : CriterionStatus::Fail;
  r.details = fmt("max closed-form error %.3g (tol 1e-8) over 20 cases", worst);
}

HoldingDist random_dist(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
    case 0:
      return HoldingDist(Deterministic{0.1 + 9.9 * u(rng)});
    case 1:
      return HoldingDist(Exponential{0.1 + 9.9 * u(rng)});
    case 2: {
      const double lo = 5.0 * u(rng);
      return HoldingDist(Uniform{lo, lo + 0.1 + 9.9 * u(rng)});
    }
    default: {
      if (u(rng) < 0.25) {
        return HoldingDist(TruncatedPareto{
            2.2 + 3.8 * u(rng), 0.1 + 4.9 * u(rng),
            std::numeric_limits<double>::infinity()});
      }
      const double alpha = 0.3 + 4.7 * u(rng);
      const double x_min = 0.1 + 4.9 * u(rng);
      return HoldingDist(TruncatedPareto{alpha, x_min,
                                         x_min * (2.0 + 48.0 * u(rng))});
    }
  }
}

// 2. Both integral routes agree on 100 random (dist, delta) cases, with the
//    Gamma bound and T_r >= 0 holding everywhere.
void crit_dual_form(CriterionResult& r, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0xC2C2C2C2ull);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int bad = 0;
  std::string first_bad;
  for (int i = 0; i < 100; ++i) {
    const HoldingDist d = random_dist(rng);
    const double delta = 10.0 * d.mean() * u(rng);
    try {
      const auto rs = residual_stats(d);
      const double k0 = spin_inefficiency_k0(d, delta);
      const double g = spin_cpu_gamma(d, delta);
      const double t_r = residual_after_spin(d, delta);
      const bool ok = k0 >= 0 && k0 <= 1 &&
                      g <= std::min(rs.s_r, delta) + 1e-9 &&
                      t_r >= 0 && std::abs(rs.s_r - g - t_r) <= 1e-8;
      if (!ok) {
        ++bad;
        if (first_bad.empty()) {
          first_bad = fmt("case %d (%s, delta=%.4g): k0=%.6g gamma=%.6g "
                          "t_r=%.6g s_r=%.6g",
                          i, d.describe().c_str(), delta, k0, g, t_r, rs.s_r);
        }
      }
    } catch (const std::exception& e) {
      ++bad;
      if (first_bad.empty()) {
        first_bad = fmt("case %d (%s, delta=%.4g) threw: %s", i,
                        d.describe().c_str(), delta, e.what());
      }
    }
  }
  r.status = bad == 0 ? CriterionStatus::Pass : CriterionStatus::Fail;
  r.details = bad == 0
                  ? "100/100 cases: routes agree, gamma bound and t_r >= 0 hold"
                  : fmt("%d/100 cases failed; first: %s", bad,
                        first_bad.c_str());
}

// 3. Formfactor against the Monte-Carlo oracle (3 sigma) plus both
//    asymptotic anchors.
void crit_formfactor(CriterionResult& r, std::uint64_t seed) {
  std::ostringstream det;
  bool ok = true;
  const double ys[] = {0.1, 1.0, 5.0};
  for (int i = 0; i < 3; ++i) {
    const double f = formfactor(ys[i]);
    const McResult mc = formfactor_mc(ys[i], 1000000, seed + 31 * i);
    const double z = std::abs(f - mc.estimate) / mc.std_error;
    det << fmt("y=%g |z|=%.2f  ", ys[i], z);
    if (z > 3.0) ok = false;
  }
  const double near0 = formfactor(1e-3);
  if (std::abs(near0 - (1.0 - 5e-4)) > 1e-6) ok = false;
  const double tail = std::abs(8.0 * formfactor(8.0) - 1.0);
  if (tail >= 0.2) ok = false;
  det << fmt("F(1e-3)=%.9f tail|8F(8)-1|=%.3f", near0, tail);
  r.status = ok ? CriterionStatus::Pass : CriterionStatus::Fail;
  r.details = det.str();
}

// 4. Simulator in the near-zero-contention limit reproduces kappa = e^-2
//    for Exponential(1), delta = 2, within three standard errors on at
//    least 1e5 misses.
void crit_contention_free(CriterionResult& r, std::uint64_t seed) {
  SimConfig cfg;
  cfg.dist = HoldingDist(Exponential{1.0});
  cfg.delta = 2.0;
  cfg.lambda = 0.002;  // rho = 0.002, well under the 0.02 ceiling
  cfg.sleep = FixedSleep{100.0};
  cfg.horizon = 2.8e10;
  cfg.warmup = 1e8;
  cfg.seed = seed;
  const SimReport rep = run_sim(cfg);
  const double target = std::exp(-2.0);
  const double sigma = std::sqrt(rep.kappa * (1.0 - rep.kappa) /
                                 std::max<double>(1, rep.misses));
  const double z = std::abs(rep.kappa - target) / sigma;
  const bool ok = rep.misses >= 100000 && z <= 3.0;
  r.status = ok ? CriterionStatus::Pass : CriterionStatus::Fail;
  r.details = fmt("kappa=%.6f target=%.6f |z|=%.2f sigma=%.2e misses=%llu",
                  rep.kappa, target, z, sigma,
                  static_cast<unsigned long long>(rep.misses));
}

// 5. Simulated k(rho) tracks the linear approximation within 15% and the
//    full quadrature within 10% across rho in {0.05 .. 0.3}.
void crit_k_linearity(CriterionResult& r, std::uint64_t seed) {
  SimConfig base;
  base.dist = HoldingDist(Exponential{1.0});
  base.delta = 2.0;
  base.sleep = ExponentialSleep{100.0};
  base.seed = seed;
  std::ostringstream det;
  bool ok = true;
  for (double rho : {0.05, 0.1, 0.15, 0.2, 0.25, 0.3}) {
    SimConfig cfg = base;
    cfg.lambda = rho;
    cfg.horizon = std::max(1e6, 2e4 / (rho * rho));
    cfg.seed = seed + static_cast<std::uint64_t>(rho * 1000);
    const SimReport rep = run_sim(cfg);
    const double lin = k_linear(base.dist, base.delta, cfg.lambda).k;
    const double quad = k_contended(base.dist, base.delta, cfg.lambda);
    const double e_lin = rel_err(rep.k, lin);
    const double e_quad = rel_err(rep.k, quad);
    det << fmt("rho=%.2f k=%.4f lin%+.1f%% quad%+.1f%%  ", rho, rep.k,
               100 * (rep.k - lin) / lin, 100 * (rep.k - quad) / quad);
    if (e_lin > 0.15 || e_quad > 0.10) ok = false;
  }
  r.status = ok ? CriterionStatus::Pass : CriterionStatus::Fail;
  r.details = det.str();
}

// 6. Simulated W and w_bar_o against the mean-value analysis at
//    exponential sleeps T = 100 S and k rho <= 0.1, both within 20%.
void crit_mva(CriterionResult& r, std::uint64_t seed) {
  ModelParams mp{HoldingDist(Exponential{1.0}), 2.0, 0.3, 100.0,
                 MvaVariant::Base};
  const ModelOutput model = evaluate_model(mp);

  SimConfig cfg;
  cfg.dist = mp.dist;
  cfg.delta = mp.delta;
  cfg.lambda = mp.lambda;
  cfg.sleep = ExponentialSleep{mp.sleep_mean};
  cfg.horizon = 4e6;
  cfg.seed = seed;
  const SimReport rep = run_sim(cfg);

  const double w_bar_target =
      (mp.sleep_mean + model.t_r) / (1.0 - model.k * model.rho);
  const double e_w = rel_err(rep.w, model.waits.w);
  const double e_wbo = rel_err(rep.w_bar_o, w_bar_target);
  const bool ok = model.k * model.rho <= 0.1 && e_w <= 0.2 && e_wbo <= 0.2;
  r.status = ok ? CriterionStatus::Pass : CriterionStatus::Fail;
  r.details = fmt(
      "k*rho=%.3f  W sim=%.3f model=%.3f (%+.1f%%)  w_bar_o sim=%.1f "
      "target=%.1f (%+.1f%%)",
      model.k * model.rho, rep.w, model.waits.w,
      100 * (rep.w - model.waits.w) / model.waits.w, rep.w_bar_o,
      w_bar_target, 100 * (rep.w_bar_o - w_bar_target) / w_bar_target);
}

// 7. With the sleep budget matched at 10 ms, scheme2 < scheme1 < patch in
//    simulated mean wait, and the ratios sit within a factor two of k and
//    k squared.
void crit_scheme_ordering(CriterionResult& r, std::uint64_t seed) {
  // Microsecond units: S = 5, delta = 10, rho = 0.1, so every timed sleep
  // of 10 ms is 1e4 units. Load is kept moderate: the k^2 chain prediction
  // ignores how misses cluster inside busy bursts, and that correlation
  // alone eats most of the factor-2 allowance at rho beyond ~0.2.
  const HoldingDist dist{Exponential{5.0}};
  const double delta = 10.0, lambda = 0.02;
  const double k = k_contended(dist, delta, lambda);

  const auto run_with = [&](const WaitScheme& scheme) {
    SimConfig cfg;
    cfg.dist = dist;
    cfg.delta = delta;
    cfg.lambda = lambda;
    cfg.sleep = SchemeSleep{scheme, 1.0, 1000.0};
    cfg.horizon = 4e7;
    cfg.seed = seed;
    return run_sim(cfg);
  };
  const double w_patch = run_with(Patch6904068{std::chrono::milliseconds(10)}).w;
  const double w_1 = run_with(Scheme1{std::chrono::milliseconds(10)}).w;
  const double w_2 = run_with(Scheme2{1}).w;

  const double r1 = w_1 / w_patch;
  const double r2 = w_2 / w_patch;
  bool ok = k <= 0.3 && w_2 < w_1 && w_1 < w_patch;
  if (!(r1 >= 0.5 * k && r1 <= 2.0 * k)) ok = false;
  if (!(r2 >= 0.5 * k * k && r2 <= 2.0 * k * k)) ok = false;
  r.status = ok ? CriterionStatus::Pass : CriterionStatus::Fail;
  r.details = fmt(
      "k=%.3f  W patch=%.1f s1=%.1f s2=%.1f  W1/W=%.3f (k=%.3f)  "
      "W2/W=%.4f (k^2=%.4f)",
      k, w_patch, w_1, w_2, r1, k, r2, k * k);
}

// 8. Doubling the spin window squares the sleep ratio: kappa(2)/kappa(1)^2
//    in [0.8, 1.2] at rho = 0.02.
void crit_spin_doubling(CriterionResult& r, std::uint64_t seed) {
  SimConfig cfg;
  cfg.dist = HoldingDist(Exponential{1.0});
  cfg.lambda = 0.02;
  cfg.sleep = FixedSleep{100.0};
  cfg.horizon = 1e8;
  cfg.seed = seed;

  cfg.delta = 1.0;
  const SimReport one = run_sim(cfg);
  cfg.delta = 2.0;
  cfg.seed = seed + 777;
  const SimReport two = run_sim(cfg);

  const double ratio = two.kappa / (one.kappa * one.kappa);
  const bool ok = ratio >= 0.8 && ratio <= 1.2;
  r.status = ok ? CriterionStatus::Pass : CriterionStatus::Fail;
  r.details = fmt(
      "kappa(1)=%.4f (misses %llu) kappa(2)=%.4f (misses %llu) "
      "ratio=%.3f in [0.8, 1.2]",
      one.kappa, static_cast<unsigned long long>(one.misses), two.kappa,
      static_cast<unsigned long long>(two.misses), ratio);
}

// 9. Multi-threaded stress of the real lock word under three mode mixes
//    with shadow-state assertions.
struct StressOutcome {
  std::uint64_t violations = 0;
  std::uint64_t ops = 0;
  bool word_free = false;
  std::string error;
};

template <typename Body>
StressOutcome run_stress(int threads, std::uint64_t iters_per_thread,
                         Body&& body) {
  Mutex lock;
  std::atomic<std::uint64_t> violations{0};
  std::atomic<bool> go{false};
  std::exception_ptr first_error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (int i = 0; i < threads; ++i) {
    pool.emplace_back([&, i] {
      while (!go.load(std::memory_order_acquire)) std::this_thread::yield();
      try {
        for (std::uint64_t n = 0; n < iters_per_thread; ++n) {
          body(lock, static_cast<std::uint32_t>(i) + 1, n, violations);
        }
      } catch (...) {
        std::lock_guard<std::mutex> g(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  go.store(true, std::memory_order_release);
  for (auto& t : pool) t.join();
  StressOutcome out;
  out.violations = violations.load();
  out.ops = iters_per_thread * static_cast<std::uint64_t>(threads);
  out.word_free = lock.read_sample().word.free();
  if (first_error) {
    try {
      std::rethrow_exception(first_error);
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  }
  return out;
}

void crit_lock_stress(CriterionResult& r, std::uint64_t) {
  constexpr int kThreads = 8;
  constexpr std::uint64_t kIters = 1000000 / kThreads;
  AcquireOptions opts;
  opts.spin_count = 64;
  opts.scheme = TenG{};
  opts.wait_episode_cap = 50000000;
  std::ostringstream det;
  bool ok = true;

  {  // exclusive-only: strict mutual exclusion over a plain counter
    std::atomic<std::uint32_t> owner{0};
    std::uint64_t counter = 0;
    const auto out = run_stress(
        kThreads, kIters,
        [&](Mutex& lock, std::uint32_t id, std::uint64_t,
            std::atomic<std::uint64_t>& viol) {
          lock.acquire(MutexMode::Exclusive, id, opts);
          if (owner.exchange(id, std::memory_order_relaxed) != 0) ++viol;
          ++counter;
          owner.store(0, std::memory_order_relaxed);
          lock.release(MutexMode::Exclusive, id);
        });
    const bool good = out.violations == 0 && out.word_free &&
                      counter == out.ops && out.error.empty();
    det << fmt("X-only: %llu viol, counter %s, word %s%s%s  ",
               static_cast<unsigned long long>(out.violations),
               counter == out.ops ? "exact" : "LOST UPDATES",
               out.word_free ? "free" : "LEAKED", out.error.empty() ? "" : " ",
               out.error.c_str());
    if (!good) ok = false;
  }

  {  // shared-heavy with a periodic examine holder
    std::atomic<std::uint32_t> examiner{0};
    std::atomic<int> readers{0};
    const auto out = run_stress(
        kThreads, kIters,
        [&](Mutex& lock, std::uint32_t id, std::uint64_t n,
            std::atomic<std::uint64_t>& viol) {
          if (n % 64 == 63) {
            lock.acquire(MutexMode::Examine, id, opts);
            if (examiner.exchange(id, std::memory_order_relaxed) != 0) ++viol;
            examiner.store(0, std::memory_order_relaxed);
            lock.release(MutexMode::Examine, id);
            return;
          }
          lock.acquire(MutexMode::Shared, id, opts);
          readers.fetch_add(1, std::memory_order_relaxed);
          if (readers.load(std::memory_order_relaxed) <= 0) ++viol;
          readers.fetch_sub(1, std::memory_order_relaxed);
          lock.release(MutexMode::Shared, id);
        });
    const bool good =
        out.violations == 0 && out.word_free && out.error.empty();
    det << fmt("S+E: %llu viol, word %s%s%s  ",
               static_cast<unsigned long long>(out.violations),
               out.word_free ? "free" : "LEAKED", out.error.empty() ? "" : " ",
               out.error.c_str());
    if (!good) ok = false;
  }

  {  // pin cycle: shared get, convert to examine, drain to exclusive
    std::atomic<std::uint32_t> examiner{0};
    std::atomic<int> readers{0};
    const auto out = run_stress(
        kThreads, kIters / 4,
        [&](Mutex& lock, std::uint32_t id, std::uint64_t n,
            std::atomic<std::uint64_t>& viol) {
          lock.acquire(MutexMode::Shared, id, opts);
          readers.fetch_add(1, std::memory_order_relaxed);
          readers.fetch_sub(1, std::memory_order_relaxed);
          if (lock.convert(MutexMode::Shared, MutexMode::Examine, id) !=
              ConvertResult::Converted) {
            lock.release(MutexMode::Shared, id);  // examine slot was taken
            return;
          }
          if (examiner.exchange(id, std::memory_order_relaxed) != 0) ++viol;
          if (n % 2 == 0) {
            // wait until every foreign shared ref drains, then take X
            while (lock.convert(MutexMode::Examine, MutexMode::Exclusive,
                                id) != ConvertResult::Converted) {
              std::this_thread::yield();
            }
            examiner.store(0, std::memory_order_relaxed);
            lock.release(MutexMode::Exclusive, id);
          } else {
            examiner.store(0, std::memory_order_relaxed);
            if (lock.convert(MutexMode::Examine, MutexMode::Shared, id) !=
                ConvertResult::Converted) {
              ++viol;
              return;
            }
            lock.release(MutexMode::Shared, id);
          }
        });
    const bool good =
        out.violations == 0 && out.word_free && out.error.empty();
    det << fmt("pin-cycle: %llu viol, word %s%s%s",
               static_cast<unsigned long long>(out.violations),
               out.word_free ? "free" : "LEAKED", out.error.empty() ? "" : " ",
               out.error.c_str());
    if (!good) ok = false;
  }

  r.status = ok ? CriterionStatus::Pass : CriterionStatus::Fail;
  r.details = det.str();
}

// 10. Counter-delta statistics identities and the kappa round trip on 1000
//     random snapshots.
void crit_stats_algebra(CriterionResult& r, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x57A7ull);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_identity = 0, worst_round = 0;
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    StatSnapshot a, b;
    b.gets = 1 + static_cast<std::uint64_t>(u(rng) * 1e9);
    b.wall_time = 0.001 + u(rng) * 1e4;
    b.util.total = 1 + static_cast<std::uint64_t>(u(rng) * 1e6);
    b.util.nonzero =
        1 + static_cast<std::uint64_t>(u(rng) * 0.95 * (b.util.total - 1));
    const double rho = static_cast<double>(b.util.nonzero) /
                       static_cast<double>(b.util.total);
    const double max_sleeps =
        static_cast<double>(b.gets) * rho / std::max(1e-9, 1.0 - rho);
    b.sleeps = static_cast<std::uint64_t>(u(rng) * max_sleeps);
    try {
      const DerivedStats d = derive(a, b);
      worst_identity =
          std::max({worst_identity, rel_err(d.omega, d.kappa * d.rho * d.lambda),
                    rel_err(d.k, d.kappa / (1.0 + d.kappa * d.rho)),
                    rel_err(d.s, d.rho / d.lambda)});
      if (d.kappa > 0) {
        const double back = kappa_from_k(k_from_kappa(d.kappa, d.rho), d.rho);
        worst_round = std::max(worst_round, rel_err(back, d.kappa));
      }
    } catch (const std::exception&) {
      ++bad;
    }
  }
  const bool ok = bad == 0 && worst_identity <= 1e-12 && worst_round <= 1e-13;
  r.status = ok ? CriterionStatus::Pass : CriterionStatus::Fail;
  r.details = fmt("max identity err %.2e (tol 1e-12), max round-trip err "
                  "%.2e (tol 1e-13), %d exceptions",
                  worst_identity, worst_round, bad);
}

// 11. Same config and seed, twice: byte-identical CSV and field-identical
//     reports.
void crit_determinism(CriterionResult& r, std::uint64_t seed) {
  SimConfig cfg;
  cfg.dist = HoldingDist(Exponential{1.0});
  cfg.delta = 2.0;
  cfg.lambda = 0.2;
  cfg.sleep = ExponentialSleep{50.0};
  cfg.horizon = 2e5;
  cfg.util_sample_interval = 7.3;
  cfg.seed = seed;

  const auto to_csv = [](const SimReport& rep) {
    CsvRow row;
    row.scenario = "determinism";
    row.scheme = "fixed";
    row.threads_or_lambda = 0.2;
    row.rho = rep.rho;
    row.k = rep.k;
    row.kappa = rep.kappa;
    row.gamma = rep.gamma;
    row.w = rep.w;
    row.w_o = rep.w_o;
    row.w_bar_o = rep.w_bar_o;
    row.throughput = rep.throughput;
    row.source = "sim";
    return format_csv_row(row);
  };
  const SimReport one = run_sim(cfg);
  const SimReport two = run_sim(cfg);
  const std::string csv1 = to_csv(one);
  const std::string csv2 = to_csv(two);
  const bool fields_equal =
      one.arrivals == two.arrivals && one.misses == two.misses &&
      one.sleeps == two.sleeps && one.completions == two.completions &&
      one.rho == two.rho && one.k == two.k && one.kappa == two.kappa &&
      one.w == two.w && one.w_o == two.w_o && one.w_bar_o == two.w_bar_o &&
      one.util_nonzero == two.util_nonzero && one.util_total == two.util_total;
  const bool ok = csv1 == csv2 && fields_equal;
  r.status = ok ? CriterionStatus::Pass : CriterionStatus::Fail;
  r.details = ok ? "two runs, byte-identical CSV: " + csv1
                 : "runs diverged: [" + csv1 + "] vs [" + csv2 + "]";
}

// 12. Oversubscription hurts the yield scheme but not the backoff scheme.
//     Needs real parallelism; skipped below four cores.
void crit_bench_qualitative(CriterionResult& r, std::uint64_t seed) {
  const unsigned cores = std::thread::hardware_concurrency();
  if (cores < 4) {
    r.status = CriterionStatus::Skip;
    r.details = fmt("needs >= 4 cores, this host has %u", cores);
    return;
  }
  const auto run_pair = [&](const WaitScheme& scheme) {
    BenchConfig cfg;
    cfg.scheme = scheme;
    cfg.duration_s = 1.5;
    cfg.hold_ns = 300;
    cfg.offcs_ns = 1000;
    cfg.pin_threads = true;
    cfg.seed = seed;
    cfg.threads = static_cast<int>(cores);
    const double at_cores = run_bench(cfg).throughput;
    cfg.threads = static_cast<int>(2 * cores);
    const double oversub = run_bench(cfg).throughput;
    return std::pair<double, double>(at_cores, oversub);
  };
  const auto teng = run_pair(TenG{});
  const auto s2 = run_pair(Scheme2{1});
  const double s2_step = std::abs(s2.second - s2.first) / s2.first;
  const bool ok = teng.second < teng.first && s2_step <= 0.25;
  r.status = ok ? CriterionStatus::Pass : CriterionStatus::Fail;
  r.details = fmt(
      "10g: %.0f -> %.0f ops/s (%s), scheme2: %.0f -> %.0f (step %.1f%%)",
      teng.first, teng.second, teng.second < teng.first ? "drop" : "NO DROP",
      s2.first, s2.second, 100 * s2_step);
}

const std::vector<Criterion>& all_criteria() {
  static const std::vector<Criterion> c = {
      {1, "closed-forms", crit_closed_forms},
      {2, "dual-form-identity", crit_dual_form},
      {3, "formfactor", crit_formfactor},
      {4, "contention-free-limit", crit_contention_free},
      {5, "k-linearity", crit_k_linearity},
      {6, "mva-validation", crit_mva},
      {7, "scheme-ordering", crit_scheme_ordering},
      {8, "spin-doubling", crit_spin_doubling},
      {9, "lock-stress", crit_lock_stress},
      {10, "stats-algebra", crit_stats_algebra},
      {11, "determinism", crit_determinism},
      {12, "bench-qualitative", crit_bench_qualitative},
  };
  return c;
}

bool selected(const Criterion& c, const std::vector<std::string>& only) {
  if (only.empty()) return true;
  for (const auto& pick : only) {
    if (pick == std::to_string(c.id)) return true;
    if (std::string(c.name).find(pick) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const ValidateOptions& opts) {
  std::vector<CriterionResult> results;
  for (const Criterion& c : all_criteria()) {
    if (!selected(c, opts.only)) continue;
    CriterionResult r;
    r.id = c.id;
    r.name = c.name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(r, opts.seed);
    } catch (const std::exception& e) {
      r.status = CriterionStatus::Fail;
      r.details = std::string("exception: ") + e.what();
    }
    r.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (opts.log) *opts.log << format_result_line(r) << std::endl;
    results.push_back(std::move(r));
  }
  return results;
}

int acceptance_exit_code(const std::vector<CriterionResult>& results) {
  for (const auto& r : results) {
    if (r.status == CriterionStatus::Fail) return 1;
  }
  return 0;
}

std::string format_result_line(const CriterionResult& r) {
  const char* tag = r.status == CriterionStatus::Pass
                        ? "PASS"
                        : r.status == CriterionStatus::Fail ? "FAIL" : "SKIP";
  return fmt("%s %2d %-22s %7.2fs  %s", tag, r.id, r.name.c_str(), r.seconds,
             r.details.c_str());
}

}  // namespace retrylock
