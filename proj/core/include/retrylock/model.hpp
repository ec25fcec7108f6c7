#pragma once

#include "retrylock/holding_dist.hpp"
#include "retrylock/wait_scheme.hpp"

namespace retrylock {

// Analytic model of a spin-then-sleep lock under Poisson arrivals. Time is
// whatever unit the distribution uses; every output is in the same unit.
// Throughout: S mean holding time, S_r mean residual, Delta spin window,
// lambda arrival rate, rho = lambda * S, k probability a miss ends its spin
// in a sleep, kappa mean sleeps per miss, Gamma mean CPU burned per spin
// episode, T mean sleep, T_r mean residual still ahead after a failed spin.

struct ResidualStats {
  double s;    // mean holding time
  double s_r;  // mean residual seen by a random miss, E(t^2) / 2S
};

ResidualStats residual_stats(const HoldingDist& d);

// Density of the residual holding time, Q(x) / S.
double residual_density(const HoldingDist& d, double x);

// P(miss survives a spin window of delta). Evaluated through two
// independent integral routes that must agree to 1e-8:
//   1 - delta/S + (1/S) int_0^delta (delta - t) p(t) dt
//   (1/S) int_delta^inf (t - delta) p(t) dt
double spin_inefficiency_k0(const HoldingDist& d, double delta);

// Mean spin CPU per episode, again via two routes cross-checked to 1e-8:
//   delta - delta^2/2S + (1/2S) int_0^delta (delta - t)^2 p(t) dt
//   S_r - (1/2S) int_delta^inf (t - delta)^2 p(t) dt
// Always <= min(S_r, delta).
double spin_cpu_gamma(const HoldingDist& d, double delta);

// Mean residual ahead of a spinner that just gave up: T_r = S_r - Gamma,
// cross-checked against (1/2S) int_delta^inf (t - delta)^2 p(t) dt.
double residual_after_spin(const HoldingDist& d, double delta);

// Probability that a tagged contender wins a serve-in-random-order draw
// against Poisson(y) competitors arriving over the same window:
// E[1/(N+1)] = (1 - e^-y)/y. Tends to 1 at 0 (expansion 1 - y/2 + O(y^2))
// and to 1/y at infinity.
double formfactor(double y);

// Spin inefficiency with contention folded in:
//   k = 1 - (1/S) int_0^inf min(x, delta) p(x) F(lambda min(x, delta)) dx
// Reduces to k0 as lambda -> 0.
double k_contended(const HoldingDist& d, double delta, double lambda);

struct LinearK {
  double k;      // k0 + rho * slope
  double k0;
  double slope;  // (1/S^2) int_0^delta x Q(x) dx
  bool valid;    // the expansion is only trusted for lambda*delta <= 0.1
};

LinearK k_linear(const HoldingDist& d, double delta, double lambda);

// kappa = k / (1 - k rho) and its inverse k = kappa / (1 + kappa rho).
double kappa_from_k(double k, double rho);
double k_from_kappa(double kappa, double rho);

enum class MvaVariant { Base, Scheme1, Scheme2 };

struct MvaInput {
  double k = 0;       // spin inefficiency in [0, 1]
  double rho = 0;     // utilization in [0, 1)
  double gamma = 0;   // spin CPU per episode
  double t = 0;       // mean sleep
  double t_r = 0;     // residual after a failed spin
  double s_r = 0;     // mean residual
  double lambda = 0;  // arrival rate; only used for the L diagnostics
};

// Mean-value estimates per request. w is the full wait (spin + orbit), w_o
// the wait with the first spin excluded, w_bar_o that wait normalized by
// the probability k*rho of registering one. Scheme1/Scheme2 replace the
// orbit term of w by their tail approximations k*T and k^2*T; the spin
// decomposition (w_s, w_orb, w_b) always comes from the base balance.
struct MvaWaits {
  double w_s = 0;      // rho Gamma / (1 - k rho)
  double w_orb = 0;    // w - w_s
  double w_b = 0;      // rho (S_r + w_orb) - (1 - rho) w_s
  double w = 0;
  double w_o = 0;      // w - rho Gamma
  double w_bar_o = 0;  // w_o / (k rho), ~ (T + T_r) / (1 - k rho)
  double l_s = 0;      // lambda * w_s
  double l_orb = 0;
  double l_b = 0;
};

MvaWaits mva_waits(const MvaInput& in, MvaVariant variant);

// Effect of doubling the spin window. With an exponential survival tail
// Q(t) ~ C e^{-t/tau} and an already efficient spin, k(2D) = k(D)^2 / C and
// the extra spin CPU is tau * (k(D) - k(2D)). With an inefficient spin
// (delta well under the holding scale) k(2D) ~ 2 k(D) - 1 and
// Gamma(2D) ~ 2 Gamma(D).
enum class SpinRegime { LowEfficiency, HighEfficiency };

struct ExpTail {
  double c = 1.0;
  double tau = 1.0;
};

struct DoublingRule {
  SpinRegime regime;
  bool regime_consistent;  // false when delta contradicts the stated regime
  double k_ratio;          // high efficiency: predicted k(2D)/k(D)^2 == 1/C

  double predict_k(double k_at_delta) const;
  double predict_gamma(double gamma_at_delta, double k_at_delta) const;

  double c = 1.0;
  double tau = 1.0;
};

DoublingRule spin_doubling_prediction(const ExpTail& tail, double delta,
                                      SpinRegime regime);

// Whole pipeline for one operating point.
struct ModelParams {
  HoldingDist dist;
  double delta = 0;
  double lambda = 0;
  double sleep_mean = 0;  // T
  MvaVariant variant = MvaVariant::Base;
};

struct ModelOutput {
  double s = 0, s_r = 0;
  double k0 = 0, k = 0;
  double gamma = 0, t_r = 0;
  double rho = 0, kappa = 0;
  MvaWaits waits;
};

ModelOutput evaluate_model(const ModelParams& p);

// Mean sleep the scheme settles into, in milliseconds: the patch sleeps its
// timeout every time, scheme1 its wait_time, scheme2 its backoff cap; 10g
// never takes a timed sleep, so its stand-in is the yield cost supplied by
// the caller. Scheme0 mixes yields and sleeps in a fixed cadence the model
// does not cover; callers must reject it.
std::optional<double> scheme_sleep_ms(const WaitScheme& scheme);

}  // namespace retrylock
