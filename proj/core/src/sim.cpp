#include "retrylock/sim.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <stdexcept>

#include "retrylock/model.hpp"

namespace retrylock {

namespace {

constexpr std::uint32_t kNone = 0xFFFFFFFFu;
constexpr int kBatches = 20;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

enum class Ev : std::uint8_t { Arrival, Release, SpinExpiry, Wake, Sample };

struct Event {
  double t;
  std::uint64_t tie;  // hashed sequence number: same-time events land in a
                      // seeded shuffle instead of insertion order
  std::uint64_t seq;
  Ev kind;
  std::uint32_t req;
  std::uint64_t gen;
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    if (a.t != b.t) return a.t > b.t;
    if (a.tie != b.tie) return a.tie > b.tie;
    return a.seq > b.seq;
  }
};

struct Request {
  double arrival = 0;
  double spin_start = 0;
  double spin_total = 0;
  double first_spin = -1;  // elapsed of the first episode, < 0 while unset
  std::uint64_t episodes = 0;
  std::uint64_t gen = 0;         // pending events carry the gen they were
                                 // scheduled under; a bump orphans them
  std::uint32_t spin_pos = kNone;
  bool slept = false;
  bool tracked = false;  // arrived after warmup: contributes wait stats
};

struct Batch {
  double busy = 0;
  double orbit_area = 0;
  double spin_elapsed = 0;
  double sum_w = 0, sum_ws = 0, sum_owi = 0;
  std::uint64_t sleeps = 0, episodes = 0, misses = 0, completions = 0;
  std::uint64_t n_req = 0, n_sleepers = 0;
};

double se_of(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  if (n < 2) return 0.0;
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(n);
  double var = 0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n - 1);
  return std::sqrt(var / static_cast<double>(n));
}

void validate_config(const SimConfig& cfg) {
  if (!(cfg.horizon > 0) || !std::isfinite(cfg.horizon)) {
    throw std::invalid_argument("sim: horizon must be positive and finite");
  }
  if (!(cfg.delta >= 0) || !std::isfinite(cfg.delta)) {
    throw std::invalid_argument("sim: delta must be finite and >= 0");
  }
  if (!(cfg.lambda > 0) || !std::isfinite(cfg.lambda)) {
    throw std::invalid_argument("sim: lambda must be finite and positive");
  }
  if (!(cfg.util_sample_interval >= 0)) {
    throw std::invalid_argument("sim: util_sample_interval must be >= 0");
  }
  struct V {
    void operator()(const FixedSleep& s) const {
      if (!(s.duration > 0)) {
        throw std::invalid_argument("sim: fixed sleep must be positive");
      }
    }
    void operator()(const ExponentialSleep& s) const {
      if (!(s.mean > 0)) {
        throw std::invalid_argument("sim: sleep mean must be positive");
      }
    }
    void operator()(const SchemeSleep& s) const {
      validate_scheme(s.scheme);
      if (!(s.yield_cost > 0)) {
        throw std::invalid_argument("sim: yield cost must be positive");
      }
      if (!(s.units_per_ms > 0)) {
        throw std::invalid_argument("sim: units_per_ms must be positive");
      }
    }
  };
  std::visit(V{}, cfg.sleep);
}

class Sim {
 public:
  explicit Sim(const SimConfig& cfg)
      : cfg_(cfg),
        rng_(cfg.seed),
        tie_salt_(splitmix64(cfg.seed ^ 0xA5A5A5A5DEADBEEFull)),
        w0_(cfg.warmup < 0 ? 0.1 * cfg.horizon : cfg.warmup),
        bin_len_((cfg.horizon - w0_) / kBatches) {
    if (!(w0_ < cfg.horizon)) {
      throw std::invalid_argument("sim: warmup must end before the horizon");
    }
    bins_.resize(kBatches);
  }

  SimReport run();

 private:
  // -- event plumbing -------------------------------------------------
  void schedule(double t, Ev kind, std::uint32_t req, std::uint64_t gen) {
    const std::uint64_t seq = seq_++;
    heap_.push(Event{t, splitmix64(seq ^ tie_salt_), seq, kind, req, gen});
  }

  std::uint32_t alloc_request() {
    std::uint32_t slot;
    if (!free_.empty()) {
      slot = free_.back();
      free_.pop_back();
    } else {
      slot = static_cast<std::uint32_t>(pool_.size());
      pool_.emplace_back();
    }
    Request& r = pool_[slot];
    const std::uint64_t keep = r.gen;
    r = Request{};
    r.gen = keep;
    return slot;
  }

  void free_request(std::uint32_t slot) {
    ++pool_[slot].gen;
    free_.push_back(slot);
  }

  // -- clock / integration --------------------------------------------
  int bin_of(double t) const {
    const int i = static_cast<int>((t - w0_) / bin_len_);
    return std::min(kBatches - 1, std::max(0, i));
  }

  void add_area(double a, double b, double weight, bool busy_channel) {
    // Clip [a, b] to the measurement window and spread it over the bins.
    a = std::max(a, w0_);
    b = std::min(b, cfg_.horizon);
    if (!(b > a)) return;
    int i = bin_of(a);
    double cursor = a;
    while (cursor < b) {
      const double edge = std::min(b, w0_ + bin_len_ * (i + 1));
      const double span = edge - cursor;
      if (busy_channel) {
        bins_[i].busy += span * weight;
      } else {
        bins_[i].orbit_area += span * weight;
      }
      cursor = edge;
      ++i;
      if (i >= kBatches) break;
    }
  }

  void advance_clock(double t) {
    if (t > last_t_) {
      if (holder_ != kNone) add_area(last_t_, t, 1.0, true);
      if (orbit_count_ > 0) {
        add_area(last_t_, t, static_cast<double>(orbit_count_), false);
      }
      last_t_ = t;
    }
  }

  // -- RNG draws -------------------------------------------------------
  double uniform01() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
  }

  double exp_draw(double mean) { return -mean * std::log(1.0 - uniform01()); }

  // -- lock actions ----------------------------------------------------
  void acquire(std::uint32_t slot, double t) {
    holder_ = slot;
    Request& r = pool_[slot];
    if (r.tracked) record_wait(r, t);
    schedule(t + cfg_.dist.draw(rng_), Ev::Release, slot, r.gen);
  }

  void record_wait(const Request& r, double t) {
    const double wait = t - r.arrival;
    const double fs = std::max(r.first_spin, 0.0);
    Batch& b = bins_[bin_of(t)];
    ++b.n_req;
    b.sum_w += wait;
    b.sum_ws += r.spin_total;
    b.sum_owi += wait - fs;
    if (r.slept) ++b.n_sleepers;
  }

  void end_episode(std::uint32_t slot, double t) {
    Request& r = pool_[slot];
    const double elapsed = t - r.spin_start;
    r.spin_total += elapsed;
    if (r.first_spin < 0) r.first_spin = elapsed;
    ++r.episodes;
    if (t >= w0_) {
      Batch& b = bins_[bin_of(t)];
      ++b.episodes;
      b.spin_elapsed += elapsed;
    }
  }

  void start_spin(std::uint32_t slot, double t) {
    Request& r = pool_[slot];
    r.spin_start = t;
    r.spin_pos = static_cast<std::uint32_t>(spinners_.size());
    spinners_.push_back(slot);
    schedule(t + cfg_.delta, Ev::SpinExpiry, slot, r.gen);
  }

  void drop_spinner(std::uint32_t slot) {
    Request& r = pool_[slot];
    const std::uint32_t pos = r.spin_pos;
    const std::uint32_t moved = spinners_.back();
    spinners_[pos] = moved;
    pool_[moved].spin_pos = pos;
    spinners_.pop_back();
    r.spin_pos = kNone;
  }

  void enter_orbit(std::uint32_t slot, double t) {
    Request& r = pool_[slot];
    double visit = 0;
    bool timed = true;
    struct V {
      Sim* sim;
      Request* r;
      double* visit;
      bool* timed;
      void operator()(const FixedSleep& s) const { *visit = s.duration; }
      void operator()(const ExponentialSleep& s) const {
        *visit = sim->exp_draw(s.mean);
      }
      void operator()(const SchemeSleep& s) const {
        // The request's completed-episode count doubles as the wait index,
        // exactly like the acquire loop's episode counter.
        const WaitAction act = plan_action(s.scheme, r->episodes - 1);
        if (act.is_sleep()) {
          *visit =
              static_cast<double>(act.duration.count()) * s.units_per_ms;
        } else {
          *visit = s.yield_cost;
          *timed = false;
        }
      }
    };
    std::visit(V{this, &r, &visit, &timed}, cfg_.sleep);
    if (t >= w0_) {
      if (timed) {
        ++sleeps_;
        ++bins_[bin_of(t)].sleeps;
        sleep_time_ += visit;
      } else {
        ++yields_;
      }
    }
    if (timed) r.slept = true;
    ++orbit_count_;
    schedule(t + visit, Ev::Wake, slot, r.gen);
  }

  // -- event handlers ----------------------------------------------------
  void on_arrival(double t) {
    ++arrivals_all_;
    if (cfg_.lambda > 0) {
      schedule(t + exp_draw(1.0 / cfg_.lambda), Ev::Arrival, kNone, 0);
    }
    const bool counted = t >= w0_;
    if (counted) ++arrivals_;
    const std::uint32_t slot = alloc_request();
    Request& r = pool_[slot];
    r.arrival = t;
    r.tracked = counted;
    if (holder_ == kNone) {
      acquire(slot, t);
      return;
    }
    if (counted) {
      ++misses_;
      ++bins_[bin_of(t)].misses;
    }
    start_spin(slot, t);
  }

  void on_release(double t, std::uint32_t slot) {
    ++completions_all_;
    if (t >= w0_) {
      ++completions_;
      ++bins_[bin_of(t)].completions;
    }
    free_request(slot);
    holder_ = kNone;
    if (spinners_.empty()) return;

    const std::size_t n = spinners_.size();
    if (n == 1) ++single_spinner_releases_;
    const std::size_t pick =
        std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
    if (n == 1 && pick == 0) ++single_spinner_wins_;
    const std::uint32_t winner = spinners_[pick];

    end_episode(winner, t);
    ++pool_[winner].gen;  // orphan the winner's pending expiry
    drop_spinner(winner);

    if (!cfg_.resume_spin_on_race) {
      // Losers give up the episode and retreat to the orbit.
      while (!spinners_.empty()) {
        const std::uint32_t loser = spinners_.back();
        end_episode(loser, t);
        ++pool_[loser].gen;
        drop_spinner(loser);
        enter_orbit(loser, t);
      }
    }
    acquire(winner, t);
  }

  void on_spin_expiry(double t, std::uint32_t slot) {
    end_episode(slot, t);
    drop_spinner(slot);
    enter_orbit(slot, t);
  }

  void on_wake(double t, std::uint32_t slot) {
    --orbit_count_;
    if (holder_ == kNone) {
      // A wake into a free lock is a plain get, not a spin episode.
      acquire(slot, t);
    } else {
      start_spin(slot, t);
    }
  }

  void on_sample(double t) {
    if (t >= w0_) {
      ++util_total_;
      if (holder_ != kNone) ++util_nonzero_;
    }
    const double jitter =
        std::uniform_real_distribution<double>(0.75, 1.25)(rng_);
    schedule(t + cfg_.util_sample_interval * jitter, Ev::Sample, kNone, 0);
  }

  // -- members -----------------------------------------------------------
  SimConfig cfg_;
  std::mt19937_64 rng_;
  std::uint64_t tie_salt_;
  double w0_;
  double bin_len_;

  std::priority_queue<Event, std::vector<Event>, EventLater> heap_;
  std::uint64_t seq_ = 0;
  std::vector<Request> pool_;
  std::vector<std::uint32_t> free_;
  std::vector<std::uint32_t> spinners_;
  std::uint32_t holder_ = kNone;
  std::uint64_t orbit_count_ = 0;
  double last_t_ = 0;

  std::vector<Batch> bins_;
  std::uint64_t arrivals_all_ = 0, completions_all_ = 0;
  std::uint64_t arrivals_ = 0, misses_ = 0, completions_ = 0;
  std::uint64_t sleeps_ = 0, yields_ = 0;
  double sleep_time_ = 0;
  std::uint64_t util_nonzero_ = 0, util_total_ = 0;
  std::uint64_t single_spinner_releases_ = 0, single_spinner_wins_ = 0;
};

SimReport Sim::run() {
  if (cfg_.lambda > 0) {
    schedule(exp_draw(1.0 / cfg_.lambda), Ev::Arrival, kNone, 0);
  }
  if (cfg_.util_sample_interval > 0) {
    const double jitter =
        std::uniform_real_distribution<double>(0.75, 1.25)(rng_);
    schedule(cfg_.util_sample_interval * jitter, Ev::Sample, kNone, 0);
  }

  while (!heap_.empty()) {
    const Event e = heap_.top();
    if (e.t > cfg_.horizon) break;
    heap_.pop();
    if (e.req != kNone && pool_[e.req].gen != e.gen) continue;  // orphaned
    advance_clock(e.t);
    switch (e.kind) {
      case Ev::Arrival:
        on_arrival(e.t);
        break;
      case Ev::Release:
        on_release(e.t, e.req);
        break;
      case Ev::SpinExpiry:
        on_spin_expiry(e.t, e.req);
        break;
      case Ev::Wake:
        on_wake(e.t, e.req);
        break;
      case Ev::Sample:
        on_sample(e.t);
        break;
    }
  }
  advance_clock(cfg_.horizon);

  const std::uint64_t open = static_cast<std::uint64_t>(spinners_.size()) +
                             orbit_count_ + (holder_ != kNone ? 1 : 0);
  if (arrivals_all_ != completions_all_ + open) {
    throw std::logic_error("sim: request census does not balance");
  }

  SimReport rep;
  rep.warmup_used = w0_;
  rep.horizon_used = cfg_.horizon;
  const double window = cfg_.horizon - w0_;

  rep.arrivals = arrivals_;
  rep.gets = arrivals_;
  rep.misses = misses_;
  rep.sleeps = sleeps_;
  rep.yields = yields_;
  rep.completions = completions_;

  double busy = 0, orbit_area = 0, spin_cpu = 0;
  double sum_w = 0, sum_ws = 0, sum_owi = 0;
  std::uint64_t episodes = 0, n_req = 0, n_sleepers = 0;
  for (const Batch& b : bins_) {
    busy += b.busy;
    orbit_area += b.orbit_area;
    spin_cpu += b.spin_elapsed;
    episodes += b.episodes;
    sum_w += b.sum_w;
    sum_ws += b.sum_ws;
    sum_owi += b.sum_owi;
    n_req += b.n_req;
    n_sleepers += b.n_sleepers;
  }
  rep.spin_episodes = episodes;
  rep.rho = busy / window;
  rep.k = episodes ? static_cast<double>(sleeps_) / episodes : 0.0;
  rep.kappa = misses_ ? static_cast<double>(sleeps_) / misses_ : 0.0;
  rep.gamma = episodes ? spin_cpu / static_cast<double>(episodes) : 0.0;
  rep.mean_sleep = sleeps_ ? sleep_time_ / static_cast<double>(sleeps_) : 0.0;
  rep.spin_cpu = spin_cpu;
  rep.mean_orbit = orbit_area / window;
  rep.throughput = static_cast<double>(completions_) / window;
  if (n_req) {
    const double n = static_cast<double>(n_req);
    rep.w = sum_w / n;
    rep.w_s = sum_ws / n;
    rep.w_orb = rep.w - rep.w_s;
    rep.w_o = sum_owi / n;
  }
  rep.w_bar_o = n_sleepers ? sum_owi / static_cast<double>(n_sleepers) : 0.0;
  rep.requests_with_sleep = n_sleepers;

  std::vector<double> v_rho, v_k, v_kappa, v_w, v_wo, v_wbo, v_thr;
  for (const Batch& b : bins_) {
    v_rho.push_back(b.busy / bin_len_);
    v_thr.push_back(static_cast<double>(b.completions) / bin_len_);
    if (b.episodes) {
      v_k.push_back(static_cast<double>(b.sleeps) /
                    static_cast<double>(b.episodes));
    }
    if (b.misses) {
      v_kappa.push_back(static_cast<double>(b.sleeps) /
                        static_cast<double>(b.misses));
    }
    if (b.n_req) {
      v_w.push_back(b.sum_w / static_cast<double>(b.n_req));
      v_wo.push_back(b.sum_owi / static_cast<double>(b.n_req));
    }
    if (b.n_sleepers) {
      v_wbo.push_back(b.sum_owi / static_cast<double>(b.n_sleepers));
    }
  }
  rep.se_rho = se_of(v_rho);
  rep.se_k = se_of(v_k);
  rep.se_kappa = se_of(v_kappa);
  rep.se_w = se_of(v_w);
  rep.se_w_o = se_of(v_wo);
  rep.se_w_bar_o = se_of(v_wbo);
  rep.se_throughput = se_of(v_thr);

  rep.util_nonzero = util_nonzero_;
  rep.util_total = util_total_;
  rep.single_spinner_releases = single_spinner_releases_;
  rep.single_spinner_wins = single_spinner_wins_;

  // A stationary orbit fluctuates; one that keeps growing marks an
  // overloaded configuration whose averages mean nothing.
  const double quarter = window / 4.0;
  double q0 = 0, q3 = 0;
  for (int i = 0; i < 5; ++i) q0 += bins_[i].orbit_area;
  for (int i = 15; i < kBatches; ++i) q3 += bins_[i].orbit_area;
  rep.unstable = q3 / quarter > 2.0 * (q0 / quarter) + 1.0;

  return rep;
}

}  // namespace

SimReport run_sim(const SimConfig& cfg) {
  validate_config(cfg);
  Sim sim(cfg);
  return sim.run();
}

McResult formfactor_mc(double y, std::uint64_t trials, std::uint64_t seed) {
  if (!(y >= 0)) throw std::domain_error("formfactor_mc needs y >= 0");
  if (trials == 0) throw std::invalid_argument("formfactor_mc needs trials");
  std::mt19937_64 rng(seed);
  std::poisson_distribution<std::uint64_t> competitors(y);
  std::uint64_t wins = 0;
  for (std::uint64_t i = 0; i < trials; ++i) {
    const std::uint64_t n = y > 0 ? competitors(rng) : 0;
    const std::uint64_t slot =
        std::uniform_int_distribution<std::uint64_t>(0, n)(rng);
    if (slot == 0) ++wins;
  }
  McResult out;
  out.trials = trials;
  out.estimate = static_cast<double>(wins) / static_cast<double>(trials);
  out.std_error =
      std::sqrt(out.estimate * (1.0 - out.estimate) /
                static_cast<double>(trials));
  return out;
}

std::vector<KRhoRow> k_vs_rho_sweep(const SimConfig& base,
                                    const std::vector<double>& rho_grid) {
  std::vector<KRhoRow> rows;
  const double s = base.dist.mean();
  for (std::size_t i = 0; i < rho_grid.size(); ++i) {
    const double rho = rho_grid[i];
    if (!(rho > 0) || !(rho <= 0.9)) {
      throw std::invalid_argument("k_vs_rho_sweep: rho grid must sit in (0, 0.9]");
    }
    SimConfig cfg = base;
    cfg.lambda = rho / s;
    cfg.seed = splitmix64(base.seed + i);
    const SimReport rep = run_sim(cfg);
    KRhoRow row;
    row.rho = rho;
    row.lambda = cfg.lambda;
    row.k_measured = rep.k;
    row.se_k = rep.se_k;
    row.kappa_measured = rep.kappa;
    row.k_linear = k_linear(base.dist, base.delta, cfg.lambda).k;
    row.k_quadrature = k_contended(base.dist, base.delta, cfg.lambda);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace retrylock
