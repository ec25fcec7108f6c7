#include "retrylock/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace retrylock {

namespace {

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

// The dual integral routes protect against silent quadrature drift: both are
// computed, compared, and the better conditioned one is returned.
double check_agree(double a, double b, const char* what) {
  const double tol = 1e-8 * std::max({1.0, std::abs(a), std::abs(b)});
  if (!(std::abs(a - b) <= tol)) {
    std::ostringstream msg;
    msg << what << ": integral routes disagree (" << a << " vs " << b << ")";
    throw QuadratureFailure(msg.str());
  }
  return b;
}

void require_delta(double delta) {
  if (!(delta >= 0) || !std::isfinite(delta)) {
    throw std::domain_error("spin window must be finite and >= 0");
  }
}

// int_0^delta x Q(x) dx, split at the distribution's lower edge where the
// survival kinks off the constant 1.
double xq_below(const HoldingDist& d, double delta) {
  const double lo = d.lower();
  const double flat = std::min(delta, lo);
  double acc = 0.5 * flat * flat;
  const double hi = std::min(delta, d.upper());
  if (hi > lo) {
    acc += integrate([&](double x) { return x * d.survival(x); }, lo, hi);
  }
  return acc;
}

}  // namespace

ResidualStats residual_stats(const HoldingDist& d) {
  const double s = d.mean();
  return {s, d.second_moment() / (2.0 * s)};
}

double residual_density(const HoldingDist& d, double x) {
  if (x < 0) return 0.0;
  return d.survival(x) / d.mean();
}

double spin_inefficiency_k0(const HoldingDist& d, double delta) {
  require_delta(delta);
  const double s = d.mean();
  const double a =
      1.0 - delta / s +
      d.expect_below(delta, [&](double t) { return delta - t; }) / s;
  const double b =
      d.expect_above(delta, [&](double t) { return t - delta; }) / s;
  return clamp01(check_agree(a, b, "k0"));
}

double spin_cpu_gamma(const HoldingDist& d, double delta) {
  require_delta(delta);
  const auto rs = residual_stats(d);
  const double s2 = 2.0 * rs.s;
  const double a =
      delta - delta * delta / s2 +
      d.expect_below(delta, [&](double t) {
        return (delta - t) * (delta - t);
      }) / s2;
  const double b = rs.s_r - d.expect_above(delta, [&](double t) {
                     return (t - delta) * (t - delta);
                   }) / s2;
  const double g = check_agree(a, b, "gamma");
  const double bound = std::min(rs.s_r, delta);
  if (g > bound + 1e-9 * std::max(1.0, bound)) {
    std::ostringstream msg;
    msg << "gamma " << g << " exceeds its bound min(S_r, delta) = " << bound;
    throw QuadratureFailure(msg.str());
  }
  return std::min(bound, std::max(0.0, g));
}

double residual_after_spin(const HoldingDist& d, double delta) {
  require_delta(delta);
  const auto rs = residual_stats(d);
  const double a = rs.s_r - spin_cpu_gamma(d, delta);
  const double b = d.expect_above(delta, [&](double t) {
                     return (t - delta) * (t - delta);
                   }) / (2.0 * rs.s);
  return std::max(0.0, check_agree(a, b, "t_r"));
}

double formfactor(double y) {
  if (!(y >= 0)) throw std::domain_error("formfactor needs y >= 0");
  if (y == 0) return 1.0;
  // expm1 keeps the y -> 0 limit exact; no series split is needed.
  return -std::expm1(-y) / y;
}

double k_contended(const HoldingDist& d, double delta, double lambda) {
  require_delta(delta);
  if (!(lambda >= 0)) throw std::domain_error("lambda must be >= 0");
  const double s = d.mean();
  const double below =
      d.expect_below(delta, [&](double x) { return x * formfactor(lambda * x); });
  const double above = delta * formfactor(lambda * delta) * d.survival(delta);
  return clamp01(1.0 - (below + above) / s);
}

LinearK k_linear(const HoldingDist& d, double delta, double lambda) {
  require_delta(delta);
  if (!(lambda >= 0)) throw std::domain_error("lambda must be >= 0");
  const double s = d.mean();
  LinearK out;
  out.k0 = spin_inefficiency_k0(d, delta);
  out.slope = xq_below(d, delta) / (s * s);
  out.k = out.k0 + lambda * s * out.slope;
  out.valid = lambda * delta <= 0.1;
  return out;
}

double kappa_from_k(double k, double rho) {
  if (!(k >= 0) || !(k <= 1) || !(rho >= 0)) {
    throw std::domain_error("kappa_from_k needs k in [0,1], rho >= 0");
  }
  const double denom = 1.0 - k * rho;
  if (!(denom > 0)) throw std::domain_error("kappa diverges: k * rho >= 1");
  return k / denom;
}

double k_from_kappa(double kappa, double rho) {
  if (!(kappa >= 0) || !(rho >= 0)) {
    throw std::domain_error("k_from_kappa needs kappa >= 0, rho >= 0");
  }
  return kappa / (1.0 + kappa * rho);
}

MvaWaits mva_waits(const MvaInput& in, MvaVariant variant) {
  if (!(in.k >= 0) || !(in.k <= 1)) {
    throw std::domain_error("mva: k must lie in [0, 1]");
  }
  if (!(in.rho >= 0) || !(in.rho < 1)) {
    throw std::domain_error("mva: rho must lie in [0, 1)");
  }
  const double denom = 1.0 - in.k * in.rho;

  MvaWaits out;
  out.w_s = in.rho * in.gamma / denom;
  const double w_base =
      in.rho / denom *
      ((1.0 - in.k * in.k * in.rho) / denom * in.gamma +
       in.k * (in.t + in.t_r));
  out.w_orb = w_base - out.w_s;
  out.w_b = in.rho * (in.s_r + out.w_orb) - (1.0 - in.rho) * out.w_s;

  switch (variant) {
    case MvaVariant::Base:
      out.w = w_base;
      break;
    case MvaVariant::Scheme1:
      out.w = in.k * in.rho / denom * (in.k * in.t + in.t_r);
      break;
    case MvaVariant::Scheme2:
      out.w = in.k * in.rho / denom * (in.k * in.k * in.t + in.t_r);
      break;
  }

  out.w_o = std::max(0.0, out.w - in.rho * in.gamma);
  out.w_bar_o = in.k * in.rho > 0 ? out.w_o / (in.k * in.rho) : 0.0;
  out.l_s = in.lambda * out.w_s;
  out.l_orb = in.lambda * out.w_orb;
  out.l_b = in.lambda * out.w_b;
  return out;
}

double DoublingRule::predict_k(double k_at_delta) const {
  if (regime == SpinRegime::HighEfficiency) {
    return clamp01(k_at_delta * k_at_delta / c);
  }
  return std::max(0.0, 2.0 * k_at_delta - 1.0);
}

double DoublingRule::predict_gamma(double gamma_at_delta,
                                   double k_at_delta) const {
  if (regime == SpinRegime::HighEfficiency) {
    return gamma_at_delta + tau * (k_at_delta - predict_k(k_at_delta));
  }
  return 2.0 * gamma_at_delta;
}

DoublingRule spin_doubling_prediction(const ExpTail& tail, double delta,
                                      SpinRegime regime) {
  if (!(tail.c > 0) || !(tail.tau > 0)) {
    throw std::domain_error("exp tail needs c > 0 and tau > 0");
  }
  require_delta(delta);
  DoublingRule rule;
  rule.regime = regime;
  rule.c = tail.c;
  rule.tau = tail.tau;
  rule.k_ratio = 1.0 / tail.c;
  if (regime == SpinRegime::HighEfficiency) {
    // Efficient spinning presumes the window already absorbs most misses.
    rule.regime_consistent = tail.c * std::exp(-delta / tail.tau) <= 0.5;
  } else {
    rule.regime_consistent = delta <= 0.5 * tail.tau;
  }
  return rule;
}

ModelOutput evaluate_model(const ModelParams& p) {
  ModelOutput out;
  const auto rs = residual_stats(p.dist);
  out.s = rs.s;
  out.s_r = rs.s_r;
  out.k0 = spin_inefficiency_k0(p.dist, p.delta);
  out.gamma = spin_cpu_gamma(p.dist, p.delta);
  out.t_r = residual_after_spin(p.dist, p.delta);
  out.rho = p.lambda * rs.s;
  out.k = k_contended(p.dist, p.delta, p.lambda);
  out.kappa = kappa_from_k(out.k, out.rho);
  MvaInput in;
  in.k = out.k;
  in.rho = out.rho;
  in.gamma = out.gamma;
  in.t = p.sleep_mean;
  in.t_r = out.t_r;
  in.s_r = out.s_r;
  in.lambda = p.lambda;
  out.waits = mva_waits(in, p.variant);
  return out;
}

std::optional<double> scheme_sleep_ms(const WaitScheme& scheme) {
  struct V {
    std::optional<double> operator()(const TenG&) const { return std::nullopt; }
    std::optional<double> operator()(const Patch6904068& p) const {
      return static_cast<double>(p.timeout.count());
    }
    std::optional<double> operator()(const Scheme0&) const {
      return std::nullopt;
    }
    std::optional<double> operator()(const Scheme1& s) const {
      return static_cast<double>(s.wait_time.count());
    }
    std::optional<double> operator()(const Scheme2& s) const {
      return 10.0 * s.max_wait_cs;
    }
  };
  return std::visit(V{}, scheme);
}

}  // namespace retrylock
