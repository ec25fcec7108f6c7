// Command line front end: analytic model, discrete-event simulator, thread
// benchmark, scheme comparison, and the acceptance checklist, all emitting
// the same CSV schema on stdout with human summaries on stderr.
//
// Exit codes: 0 success, 1 acceptance failure, 2 configuration or domain
// error, 3 benchmark thread spawn failure.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "retrylock/bench.hpp"
#include "retrylock/csv.hpp"
#include "retrylock/model.hpp"
#include "retrylock/sim.hpp"
#include "retrylock/validate.hpp"

using namespace retrylock;

namespace {

std::uint64_t env_seed() {
  if (const char* env = std::getenv("RETRYLOCK_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 1;
}

// Per-scheme tunables, spelled as dotted options so each knob names the
// scheme it belongs to.
struct SchemeFlags {
  std::string name = "patch6904068";
  int patch_timeout_ms = 10;
  int s0_yields = 99;
  int s0_sleep_ms = 1;
  int s1_wait_ms = 1;
  int s2_max_wait_cs = 1;

  void attach(CLI::App* cmd, const std::string& default_name) {
    name = default_name;
    cmd->add_option("--scheme", name,
                    "wait scheme: 10g, patch6904068, scheme0, scheme1, "
                    "scheme2")
        ->capture_default_str();
    cmd->add_option("--patch.timeout_ms", patch_timeout_ms,
                    "patch6904068 sleep timeout")
        ->capture_default_str();
    cmd->add_option("--scheme0.yields_per_cycle", s0_yields,
                    "scheme0 yields before each timed sleep")
        ->capture_default_str();
    cmd->add_option("--scheme0.sleep_ms", s0_sleep_ms, "scheme0 sleep length")
        ->capture_default_str();
    cmd->add_option("--scheme1.wait_time_ms", s1_wait_ms,
                    "scheme1 sleep length after the first yield")
        ->capture_default_str();
    cmd->add_option("--scheme2.max_wait_cs", s2_max_wait_cs,
                    "scheme2 backoff cap in centiseconds")
        ->capture_default_str();
  }

  WaitScheme build() const {
    auto parsed = parse_scheme(name);
    if (!parsed) throw std::invalid_argument("unknown scheme: " + name);
    if (auto* p = std::get_if<Patch6904068>(&*parsed)) {
      p->timeout = std::chrono::milliseconds(patch_timeout_ms);
    } else if (auto* s0 = std::get_if<Scheme0>(&*parsed)) {
      s0->yields_per_cycle = s0_yields;
      s0->sleep = std::chrono::milliseconds(s0_sleep_ms);
    } else if (auto* s1 = std::get_if<Scheme1>(&*parsed)) {
      s1->wait_time = std::chrono::milliseconds(s1_wait_ms);
    } else if (auto* s2 = std::get_if<Scheme2>(&*parsed)) {
      s2->max_wait_cs = s2_max_wait_cs;
    }
    validate_scheme(*parsed);
    return *parsed;
  }
};

HoldingDist dist_from(const std::string& text) {
  auto d = parse_dist(text);
  if (!d) {
    throw std::invalid_argument("bad --dist, want det:S | exp:S | uni:a,b | "
                                "pareto:alpha,lo,hi (got " + text + ")");
  }
  return *d;
}

struct SweepSpec {
  std::string axis;  // delta | lambda | rho
  std::vector<double> values;
};

SweepSpec parse_sweep(const std::string& text) {
  const auto eq = text.find('=');
  const auto c1 = text.find(':');
  const auto c2 = text.find(':', c1 + 1);
  if (eq == std::string::npos || c1 == std::string::npos ||
      c2 == std::string::npos || c1 < eq) {
    throw std::invalid_argument("bad --sweep, want axis=from:to:points");
  }
  SweepSpec s;
  s.axis = text.substr(0, eq);
  if (s.axis != "delta" && s.axis != "lambda" && s.axis != "rho") {
    throw std::invalid_argument("sweep axis must be delta, lambda or rho");
  }
  const double a = std::stod(text.substr(eq + 1, c1 - eq - 1));
  const double b = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
  const int n = std::stoi(text.substr(c2 + 1));
  if (n < 1 || n > 10000) {
    throw std::invalid_argument("sweep points must be in [1, 10000]");
  }
  for (int i = 0; i < n; ++i) {
    s.values.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
  }
  return s;
}

// All emitting commands share one writer so --out behaves identically.
class CsvOut {
 public:
  explicit CsvOut(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::invalid_argument("cannot open --out " + path);
    }
  }
  void row(const CsvRow& r) {
    std::ostream& os = file_.is_open() ? file_ : std::cout;
    if (!header_done_) {
      os << kCsvHeader << '\n';
      header_done_ = true;
    }
    os << format_csv_row(r) << '\n';
  }

 private:
  std::ofstream file_;
  bool header_done_ = false;
};

MvaVariant variant_for(const WaitScheme& scheme) {
  if (std::holds_alternative<Scheme1>(scheme)) return MvaVariant::Scheme1;
  if (std::holds_alternative<Scheme2>(scheme)) return MvaVariant::Scheme2;
  return MvaVariant::Base;
}

// Mean sleep in model units. 10g never sleeps; its orbit visits are yields,
// so the caller-supplied yield cost stands in for T. Scheme0's cadence has
// no single-T reduction and is rejected.
double sleep_units_for(const WaitScheme& scheme, double ms_units,
                       double yield_cost) {
  if (std::holds_alternative<TenG>(scheme)) return yield_cost;
  const auto ms = scheme_sleep_ms(scheme);
  if (!ms) {
    throw std::invalid_argument(
        "scheme0 mixes yields and sleeps; the model needs a single mean "
        "sleep, pick another scheme");
  }
  return *ms * ms_units;
}

struct ModelArgs {
  std::string dist = "exp:1";
  double delta = -1;
  int spin_count = -1;
  double lambda = -1;
  double rho = -1;
  double ms_units = 1000.0;
  double yield_cost = 1.0;
  std::string sweep;
  std::string out;
  SchemeFlags scheme;
};

int cmd_model(const ModelArgs& a) {
  const HoldingDist dist = dist_from(a.dist);
  const WaitScheme scheme = a.scheme.build();

  double delta = a.delta;
  if (a.spin_count >= 0) {
    if (delta >= 0) {
      throw std::invalid_argument("--delta and --spin-count are exclusive");
    }
    std::fprintf(stderr, "measuring poll cost for --spin-count %d...\n",
                 a.spin_count);
    const CostModel costs = measure_costs();
    if (!costs.reliable) {
      std::fprintf(stderr,
                   "warning: cost fit unreliable (R^2 %.3f), delta from it "
                   "anyway\n",
                   costs.r2);
    }
    delta = a.spin_count * costs.poll_ns * a.ms_units / 1e6;
    std::fprintf(stderr, "poll %.1f ns, yield %.1f ns -> delta %.4g units\n",
                 costs.poll_ns, costs.yield_ns, delta);
  }
  if (delta < 0) {
    throw std::invalid_argument("need --delta or --spin-count");
  }
  if ((a.lambda < 0) == (a.rho < 0)) {
    throw std::invalid_argument("need exactly one of --lambda or --rho");
  }

  CsvOut out(a.out);
  std::vector<std::pair<std::string, double>> points;
  if (a.sweep.empty()) {
    points.emplace_back("model", 0.0);  // single point, axis unused
  }
  SweepSpec sweep;
  if (!a.sweep.empty()) sweep = parse_sweep(a.sweep);

  const auto run_point = [&](double delta_pt, double lambda_pt,
                             const char* scenario) {
    ModelParams p{dist, delta_pt, lambda_pt,
                  sleep_units_for(scheme, a.ms_units, a.yield_cost),
                  variant_for(scheme)};
    const ModelOutput o = evaluate_model(p);
    CsvRow row;
    row.scenario = scenario;
    row.scheme = scheme_name(scheme);
    if (a.spin_count >= 0) row.spin_count = a.spin_count;
    row.threads_or_lambda = lambda_pt;
    row.rho = o.rho;
    row.k = o.k;
    row.kappa = o.kappa;
    row.gamma = o.gamma;
    row.w = o.waits.w;
    row.w_o = o.waits.w_o;
    row.w_bar_o = o.waits.w_bar_o;
    row.throughput = lambda_pt;  // stable by construction: rho < 1 enforced
    row.source = "model";
    out.row(row);
    std::fprintf(stderr,
                 "%s: S=%.4g rho=%.4g k0=%.4g k=%.4g gamma=%.4g t_r=%.4g "
                 "W=%.6g w_bar_o=%.6g\n",
                 scenario, o.s, o.rho, o.k0, o.k, o.gamma, o.t_r, o.waits.w,
                 o.waits.w_bar_o);
  };

  const double s = dist.mean();
  if (a.sweep.empty()) {
    run_point(delta, a.lambda >= 0 ? a.lambda : a.rho / s, "model");
  } else {
    for (double v : sweep.values) {
      double d = delta, l = a.lambda >= 0 ? a.lambda : a.rho / s;
      if (sweep.axis == "delta") d = v;
      if (sweep.axis == "lambda") l = v;
      if (sweep.axis == "rho") l = v / s;
      run_point(d, l, "model-sweep");
    }
  }
  return 0;
}

struct SimArgs {
  std::string dist = "exp:1";
  double delta = 1.0;
  double lambda = -1;
  double rho = -1;
  std::string sleep = "fixed:100";
  double horizon = 1e6;
  double warmup = -1;
  std::uint64_t seed = 1;
  bool resume_spin = false;
  double util_interval = 0;
  double ms_units = 1000.0;
  double yield_cost = 1.0;
  std::string sweep;
  std::string out;
  SchemeFlags scheme;
};

SleepModel sleep_model_from(const SimArgs& a) {
  const std::string& t = a.sleep;
  if (t.rfind("fixed:", 0) == 0) {
    return FixedSleep{std::stod(t.substr(6))};
  }
  if (t.rfind("exp:", 0) == 0) {
    return ExponentialSleep{std::stod(t.substr(4))};
  }
  if (t == "scheme") {
    return SchemeSleep{a.scheme.build(), a.yield_cost, a.ms_units};
  }
  throw std::invalid_argument(
      "bad --sleep, want fixed:T | exp:T | scheme (got " + t + ")");
}

const char* sleep_label(const SleepModel& m) {
  if (std::holds_alternative<FixedSleep>(m)) return "fixed";
  if (std::holds_alternative<ExponentialSleep>(m)) return "exp";
  return nullptr;  // scheme name is more informative
}

int cmd_sim(const SimArgs& a) {
  SimConfig cfg;
  cfg.dist = dist_from(a.dist);
  cfg.delta = a.delta;
  cfg.sleep = sleep_model_from(a);
  cfg.horizon = a.horizon;
  cfg.warmup = a.warmup;
  cfg.seed = a.seed;
  cfg.resume_spin_on_race = a.resume_spin;
  cfg.util_sample_interval = a.util_interval;

  if ((a.lambda < 0) == (a.rho < 0)) {
    throw std::invalid_argument("need exactly one of --lambda or --rho");
  }
  const double s = cfg.dist.mean();
  cfg.lambda = a.lambda >= 0 ? a.lambda : a.rho / s;

  const std::string scheme_col =
      sleep_label(cfg.sleep) ? sleep_label(cfg.sleep)
                             : scheme_name(a.scheme.build());

  CsvOut out(a.out);
  const auto run_point = [&](const SimConfig& point, const char* scenario) {
    const SimReport r = run_sim(point);
    CsvRow row;
    row.scenario = scenario;
    row.scheme = scheme_col;
    row.threads_or_lambda = point.lambda;
    row.rho = r.rho;
    row.k = r.k;
    row.kappa = r.kappa;
    row.gamma = r.gamma;
    row.w = r.w;
    row.w_o = r.w_o;
    row.w_bar_o = r.w_bar_o;
    row.throughput = r.throughput;
    row.source = "sim";
    out.row(row);
    std::fprintf(stderr,
                 "%s: lambda=%.4g arrivals=%llu misses=%llu sleeps=%llu "
                 "rho=%.4g k=%.4g+-%.2g kappa=%.4g W=%.6g%s\n",
                 scenario, point.lambda,
                 static_cast<unsigned long long>(r.arrivals),
                 static_cast<unsigned long long>(r.misses),
                 static_cast<unsigned long long>(r.sleeps), r.rho, r.k,
                 r.se_k, r.kappa, r.w, r.unstable ? "  UNSTABLE" : "");
  };

  if (a.sweep.empty()) {
    run_point(cfg, "sim");
    return 0;
  }
  const SweepSpec sweep = parse_sweep(a.sweep);
  int i = 0;
  for (double v : sweep.values) {
    SimConfig point = cfg;
    if (sweep.axis == "delta") point.delta = v;
    if (sweep.axis == "lambda") point.lambda = v;
    if (sweep.axis == "rho") point.lambda = v / s;
    point.seed = cfg.seed + static_cast<std::uint64_t>(i++);
    run_point(point, "sim-sweep");
  }
  return 0;
}

struct BenchArgs {
  int threads = 2;
  std::string mode = "X";
  int spin_count = 255;
  double duration = 1.0;
  long hold_ns = 300;
  long offcs_ns = 1000;
  bool pin = false;
  std::uint64_t safety_cap = 0;
  long sample_us = 100;
  std::uint64_t seed = 1;
  bool measure_only = false;
  std::string out;
  SchemeFlags scheme;
};

int cmd_bench(const BenchArgs& a) {
  if (a.measure_only) {
    const CostModel costs = measure_costs();
    std::fprintf(stderr, "spin-count grid fit (R^2 %.4f%s):\n", costs.r2,
                 costs.reliable ? "" : ", UNRELIABLE");
    for (const CostPoint& p : costs.points) {
      std::fprintf(stderr, "  spin %5d: %.1f ns per episode\n", p.spin_count,
                   p.episode_ns);
    }
    std::fprintf(stderr, "poll %.2f ns, yield %.2f ns\n", costs.poll_ns,
                 costs.yield_ns);
    return 0;
  }

  BenchConfig cfg;
  cfg.threads = a.threads;
  if (a.mode == "X") cfg.mode = MutexMode::Exclusive;
  else if (a.mode == "S") cfg.mode = MutexMode::Shared;
  else if (a.mode == "E") cfg.mode = MutexMode::Examine;
  else throw std::invalid_argument("bad --mode, want S, X or E");
  cfg.scheme = a.scheme.build();
  cfg.spin_count = a.spin_count;
  cfg.duration_s = a.duration;
  cfg.hold_ns = a.hold_ns;
  cfg.offcs_ns = a.offcs_ns;
  cfg.pin_threads = a.pin;
  cfg.safety_cap = a.safety_cap;
  cfg.sample_interval_us = a.sample_us;
  cfg.seed = a.seed;

  const BenchResult r = run_bench(cfg);
  CsvRow row;
  row.scenario = "bench";
  row.scheme = scheme_name(cfg.scheme);
  row.spin_count = cfg.spin_count;
  row.threads_or_lambda = cfg.threads;
  row.rho = r.util.rho;
  if (r.derived_ok) {
    row.k = r.derived.k;
    row.kappa = r.derived.kappa;
  }
  row.w = r.mean_wait_s;
  row.throughput = r.throughput;
  row.cpu_s = r.cpu_s;
  row.source = "bench";
  CsvOut out(a.out);
  out.row(row);
  std::fprintf(stderr,
               "bench: %llu ops in %.3f s (%.0f ops/s), cpu %.3f s, rho "
               "%.3f, sleeps %llu%s%s\n",
               static_cast<unsigned long long>(r.total_ops), r.elapsed_s,
               r.throughput, r.cpu_s, r.util.rho,
               static_cast<unsigned long long>(r.sleeps),
               r.derived_ok ? "" : ", derived stats unavailable: ",
               r.derived_ok ? "" : r.derived_error.c_str());
  return 0;
}

struct CompareArgs {
  std::string dist = "exp:1";
  double delta = 1.0;
  double lambda = -1;
  double rho = -1;
  double ms_units = 1000.0;
  double yield_cost = 1.0;
  double t_ms = 10.0;
  std::string out;
};

int cmd_compare(const CompareArgs& a) {
  const HoldingDist dist = dist_from(a.dist);
  if ((a.lambda < 0) == (a.rho < 0)) {
    throw std::invalid_argument("need exactly one of --lambda or --rho");
  }
  const double lambda = a.lambda >= 0 ? a.lambda : a.rho / dist.mean();

  // One sleep budget across the board, so the table isolates what the
  // schemes do with it rather than how long they happen to sleep. The
  // scheme2 cap rounds to its centisecond grain.
  if (!(a.t_ms > 0)) throw std::invalid_argument("--t-ms must be positive");
  const auto t = std::chrono::milliseconds(std::llround(a.t_ms));
  const int cap_cs =
      std::max(1, static_cast<int>(std::llround(a.t_ms / 10.0)));
  if (cap_cs * 10 != std::llround(a.t_ms)) {
    std::fprintf(stderr,
                 "note: scheme2 cap rounded to %d0 ms (its grain is 10 ms)\n",
                 cap_cs);
  }
  const WaitScheme schemes[] = {TenG{}, Patch6904068{t}, Scheme1{t},
                                Scheme2{cap_cs}};
  CsvOut out(a.out);
  for (const WaitScheme& scheme : schemes) {
    ModelParams p{dist, a.delta, lambda,
                  sleep_units_for(scheme, a.ms_units, a.yield_cost),
                  variant_for(scheme)};
    const ModelOutput o = evaluate_model(p);
    CsvRow row;
    row.scenario = "compare";
    row.scheme = scheme_name(scheme);
    row.threads_or_lambda = lambda;
    row.rho = o.rho;
    row.k = o.k;
    row.kappa = o.kappa;
    row.gamma = o.gamma;
    row.w = o.waits.w;
    row.w_o = o.waits.w_o;
    row.w_bar_o = o.waits.w_bar_o;
    row.throughput = lambda;
    row.source = "model";
    out.row(row);
    std::fprintf(stderr, "%-13s W=%.6g  w_s=%.4g  w_bar_o=%.6g\n",
                 scheme_name(scheme), o.waits.w, o.waits.w_s,
                 o.waits.w_bar_o);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"retrial spinlock laboratory"};
  app.require_subcommand(1);

  ModelArgs margs;
  CLI::App* model = app.add_subcommand(
      "model", "analytic pipeline for one operating point or a sweep");
  model->add_option("--dist", margs.dist, "holding time distribution")
      ->capture_default_str();
  model->add_option("--delta", margs.delta, "spin window in time units");
  model->add_option("--spin-count", margs.spin_count,
                    "derive delta from a measured per-poll cost");
  model->add_option("--lambda", margs.lambda, "arrival rate");
  model->add_option("--rho", margs.rho, "offered load (alternative)");
  model->add_option("--ms-units", margs.ms_units,
                    "time units per millisecond")
      ->capture_default_str();
  model->add_option("--yield-cost", margs.yield_cost,
                    "orbit visit cost for 10g, in units")
      ->capture_default_str();
  model->add_option("--sweep", margs.sweep, "axis=from:to:points");
  model->add_option("--out", margs.out, "write CSV here instead of stdout");
  margs.scheme.attach(model, "patch6904068");

  SimArgs sargs;
  CLI::App* sim = app.add_subcommand("sim", "discrete-event simulation");
  sim->add_option("--dist", sargs.dist)->capture_default_str();
  sim->add_option("--delta", sargs.delta)->capture_default_str();
  sim->add_option("--lambda", sargs.lambda, "arrival rate");
  sim->add_option("--rho", sargs.rho, "offered load (alternative)");
  sim->add_option("--sleep", sargs.sleep, "fixed:T | exp:T | scheme")
      ->capture_default_str();
  sim->add_option("--horizon", sargs.horizon)->capture_default_str();
  sim->add_option("--warmup", sargs.warmup,
                  "discard window; negative = a tenth of the horizon");
  sim->add_option("--seed", sargs.seed)->default_val(env_seed());
  sim->add_flag("--resume-spin-on-race", sargs.resume_spin,
                "keep spinning on a lost install race");
  sim->add_option("--util-interval", sargs.util_interval,
                  "sampling channel spacing, 0 = off");
  sim->add_option("--ms-units", sargs.ms_units)->capture_default_str();
  sim->add_option("--yield-cost", sargs.yield_cost)->capture_default_str();
  sim->add_option("--sweep", sargs.sweep, "axis=from:to:points");
  sim->add_option("--out", sargs.out);
  sargs.scheme.attach(sim, "patch6904068");

  BenchArgs bargs;
  CLI::App* bench =
      app.add_subcommand("bench", "threaded benchmark on the real lock");
  bench->add_option("--threads", bargs.threads)->capture_default_str();
  bench->add_option("--mode", bargs.mode, "S, X or E")->capture_default_str();
  bench->add_option("--spin-count", bargs.spin_count)->capture_default_str();
  bench->add_option("--duration", bargs.duration, "seconds")
      ->capture_default_str();
  bench->add_option("--hold-ns", bargs.hold_ns)->capture_default_str();
  bench->add_option("--offcs-ns", bargs.offcs_ns)->capture_default_str();
  bench->add_flag("--pin", bargs.pin, "pin workers to cores");
  bench->add_option("--safety-cap", bargs.safety_cap,
                    "abort after this many wait episodes, 0 = never");
  bench->add_option("--sample-us", bargs.sample_us,
                    "utilization sampling interval");
  bench->add_option("--seed", bargs.seed)->default_val(env_seed());
  bench->add_flag("--measure-costs", bargs.measure_only,
                  "only fit poll and yield costs, no bench run");
  bench->add_option("--out", bargs.out);
  bargs.scheme.attach(bench, "10g");

  CompareArgs cargs;
  CLI::App* compare = app.add_subcommand(
      "compare-schemes", "model all wait schemes at one operating point");
  compare->add_option("--dist", cargs.dist)->capture_default_str();
  compare->add_option("--delta", cargs.delta)->capture_default_str();
  compare->add_option("--lambda", cargs.lambda);
  compare->add_option("--rho", cargs.rho);
  compare->add_option("--ms-units", cargs.ms_units)->capture_default_str();
  compare->add_option("--t-ms", cargs.t_ms, "sleep budget shared by all schemes")
      ->capture_default_str();
  compare->add_option("--yield-cost", cargs.yield_cost)
      ->capture_default_str();
  compare->add_option("--out", cargs.out);

  std::vector<std::string> only;
  std::uint64_t vseed = env_seed();
  CLI::App* validate =
      app.add_subcommand("validate", "run the acceptance checklist");
  validate->add_option("--only", only,
                       "criteria to run, by number or name fragment");
  validate->add_option("--seed", vseed)->default_val(env_seed());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help exits clean, bad flags are config errors
  }

  try {
    if (model->parsed()) return cmd_model(margs);
    if (sim->parsed()) return cmd_sim(sargs);
    if (bench->parsed()) return cmd_bench(bargs);
    if (compare->parsed()) return cmd_compare(cargs);
    if (validate->parsed()) {
      ValidateOptions opts;
      opts.only = only;
      opts.seed = vseed;
      opts.log = &std::cout;
      return acceptance_exit_code(run_acceptance(opts));
    }
  } catch (const ThreadSpawnError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;  // unreachable: a subcommand is required
}
