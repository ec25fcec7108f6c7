#include "retrylock/holding_dist.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace retrylock {

namespace {

constexpr double kAbsTol = 1e-10;
constexpr double kRelTol = 1e-8;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_quadrature(double value, double err_estimate, const char* what) {
  if (!(err_estimate <= std::max(kAbsTol, kRelTol * std::abs(value)))) {
    std::ostringstream msg;
    msg << what << ": error estimate " << err_estimate
        << " misses tolerance for value " << value;
    throw QuadratureFailure(msg.str());
  }
}

// Near the removable singularities of the truncated-Pareto moment formulas
// the closed forms lose all precision, so alpha within this band of 1 or 2
// takes the logarithmic branch.
constexpr double kAlphaBand = 1e-9;

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b) {
  if (!(a <= b)) throw std::invalid_argument("integrate: need a <= b");
  if (a == b) return 0.0;
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, 18, 1e-12, &err);
  check_quadrature(v, err, "integrate");
  return v;
}

namespace {

// For tails folded through u = Q(t): the integrand can carry a log blowup
// at u = 0, which tanh_sinh absorbs without fuss.
double integrate_endpoint(const std::function<double(double)>& f, double a,
                          double b) {
  if (a == b) return 0.0;
  boost::math::quadrature::tanh_sinh<double> quad;
  double err = 0.0;
  double l1 = 0.0;
  const double v = quad.integrate(f, a, b, 1e-10, &err, &l1);
  // tanh_sinh reports relative error against L1.
  if (!(err * std::max(l1, 1.0) <=
        std::max(kAbsTol, kRelTol * std::abs(v)) * 10.0 + kAbsTol)) {
    std::ostringstream msg;
    msg << "tail quadrature: relative error " << err << " for value " << v;
    throw QuadratureFailure(msg.str());
  }
  return v;
}

}  // namespace

HoldingDist::HoldingDist(Deterministic d) : v_(d) {
  if (!(d.value > 0) || !std::isfinite(d.value)) {
    throw std::domain_error("deterministic holding time must be positive");
  }
}

HoldingDist::HoldingDist(Exponential e) : v_(e) {
  if (!(e.mean > 0) || !std::isfinite(e.mean)) {
    throw std::domain_error("exponential mean must be positive");
  }
}

HoldingDist::HoldingDist(Uniform u) : v_(u) {
  if (!(u.lo >= 0) || !(u.hi > u.lo) || !std::isfinite(u.hi)) {
    throw std::domain_error("uniform needs 0 <= lo < hi < inf");
  }
}

HoldingDist::HoldingDist(TruncatedPareto p) : v_(p) {
  if (!(p.alpha > 0) || !(p.x_min > 0) || !(p.x_max > p.x_min)) {
    throw std::domain_error("pareto needs alpha > 0, 0 < x_min < x_max");
  }
  if (std::isinf(p.x_max) && !(p.alpha > 2)) {
    throw NonFiniteMoment(
        "pareto second moment diverges: unbounded tail needs alpha > 2");
  }
}

bool HoldingDist::point_mass() const {
  return std::holds_alternative<Deterministic>(v_);
}

double HoldingDist::lower() const {
  struct V {
    double operator()(const Deterministic& d) const { return d.value; }
    double operator()(const Exponential&) const { return 0.0; }
    double operator()(const Uniform& u) const { return u.lo; }
    double operator()(const TruncatedPareto& p) const { return p.x_min; }
  };
  return std::visit(V{}, v_);
}

double HoldingDist::upper() const {
  struct V {
    double operator()(const Deterministic& d) const { return d.value; }
    double operator()(const Exponential&) const { return kInf; }
    double operator()(const Uniform& u) const { return u.hi; }
    double operator()(const TruncatedPareto& p) const { return p.x_max; }
  };
  return std::visit(V{}, v_);
}

double HoldingDist::mean() const {
  struct V {
    double operator()(const Deterministic& d) const { return d.value; }
    double operator()(const Exponential& e) const { return e.mean; }
    double operator()(const Uniform& u) const { return 0.5 * (u.lo + u.hi); }
    double operator()(const TruncatedPareto& p) const {
      const double r =
          std::isinf(p.x_max) ? 0.0 : std::pow(p.x_min / p.x_max, p.alpha);
      const double norm = 1.0 - r;
      const double scale = p.alpha * std::pow(p.x_min, p.alpha) / norm;
      if (std::abs(p.alpha - 1.0) < kAlphaBand) {
        return scale * std::log(p.x_max / p.x_min);
      }
      const double hi_term =
          std::isinf(p.x_max) ? 0.0 : std::pow(p.x_max, 1.0 - p.alpha);
      return scale * (std::pow(p.x_min, 1.0 - p.alpha) - hi_term) /
             (p.alpha - 1.0);
    }
  };
  return std::visit(V{}, v_);
}

double HoldingDist::second_moment() const {
  struct V {
    double operator()(const Deterministic& d) const { return d.value * d.value; }
    double operator()(const Exponential& e) const { return 2.0 * e.mean * e.mean; }
    double operator()(const Uniform& u) const {
      return (u.lo * u.lo + u.lo * u.hi + u.hi * u.hi) / 3.0;
    }
    double operator()(const TruncatedPareto& p) const {
      const double r =
          std::isinf(p.x_max) ? 0.0 : std::pow(p.x_min / p.x_max, p.alpha);
      const double norm = 1.0 - r;
      const double scale = p.alpha * std::pow(p.x_min, p.alpha) / norm;
      if (std::abs(p.alpha - 2.0) < kAlphaBand) {
        return scale * std::log(p.x_max / p.x_min);
      }
      const double hi_term =
          std::isinf(p.x_max) ? 0.0 : std::pow(p.x_max, 2.0 - p.alpha);
      return scale * (hi_term - std::pow(p.x_min, 2.0 - p.alpha)) /
             (2.0 - p.alpha);
    }
  };
  return std::visit(V{}, v_);
}

double HoldingDist::pdf(double t) const {
  struct V {
    double t;
    double operator()(const Deterministic&) const {
      throw std::logic_error("point mass has no density");
    }
    double operator()(const Exponential& e) const {
      return t < 0 ? 0.0 : std::exp(-t / e.mean) / e.mean;
    }
    double operator()(const Uniform& u) const {
      return (t < u.lo || t > u.hi) ? 0.0 : 1.0 / (u.hi - u.lo);
    }
    double operator()(const TruncatedPareto& p) const {
      if (t < p.x_min || t > p.x_max) return 0.0;
      const double r =
          std::isinf(p.x_max) ? 0.0 : std::pow(p.x_min / p.x_max, p.alpha);
      return p.alpha * std::pow(p.x_min, p.alpha) *
             std::pow(t, -p.alpha - 1.0) / (1.0 - r);
    }
  };
  return std::visit(V{t}, v_);
}

double HoldingDist::survival(double t) const {
  struct V {
    double t;
    double operator()(const Deterministic& d) const {
      return t < d.value ? 1.0 : 0.0;
    }
    double operator()(const Exponential& e) const {
      return t <= 0 ? 1.0 : std::exp(-t / e.mean);
    }
    double operator()(const Uniform& u) const {
      if (t < u.lo) return 1.0;
      if (t >= u.hi) return 0.0;
      return (u.hi - t) / (u.hi - u.lo);
    }
    double operator()(const TruncatedPareto& p) const {
      if (t < p.x_min) return 1.0;
      if (t >= p.x_max) return 0.0;
      const double r =
          std::isinf(p.x_max) ? 0.0 : std::pow(p.x_min / p.x_max, p.alpha);
      return (std::pow(p.x_min / t, p.alpha) - r) / (1.0 - r);
    }
  };
  return std::visit(V{t}, v_);
}

double HoldingDist::inverse_survival(double u) const {
  if (!(u > 0.0) || !(u <= 1.0)) {
    throw std::domain_error("inverse_survival needs u in (0, 1]");
  }
  struct V {
    double u;
    double operator()(const Deterministic&) const {
      throw std::logic_error("point mass has no inverse survival");
    }
    double operator()(const Exponential& e) const {
      return -e.mean * std::log(u);
    }
    double operator()(const Uniform& uni) const {
      return uni.hi - u * (uni.hi - uni.lo);
    }
    double operator()(const TruncatedPareto& p) const {
      const double r =
          std::isinf(p.x_max) ? 0.0 : std::pow(p.x_min / p.x_max, p.alpha);
      return p.x_min * std::pow(u * (1.0 - r) + r, -1.0 / p.alpha);
    }
  };
  return std::visit(V{u}, v_);
}

double HoldingDist::expect_below(double cut,
                                 const std::function<double(double)>& g) const {
  if (const auto* d = std::get_if<Deterministic>(&v_)) {
    return d->value <= cut ? g(d->value) : 0.0;
  }
  const double a = lower();
  const double b = std::min(cut, upper());
  if (!(b > a)) return 0.0;
  return integrate([&](double t) { return g(t) * pdf(t); }, a, b);
}

double HoldingDist::expect_above(double cut,
                                 const std::function<double(double)>& g) const {
  if (const auto* d = std::get_if<Deterministic>(&v_)) {
    return d->value > cut ? g(d->value) : 0.0;
  }
  const double a = std::max(cut, lower());
  const double b = upper();
  if (!(a < b)) return 0.0;
  if (std::isinf(b)) {
    const double q = survival(a);
    if (q <= 0.0) return 0.0;
    // u = Q(t) turns int_a^inf g p dt into int_0^q g(Qinv(u)) du.
    return integrate_endpoint([&](double u) { return g(inverse_survival(u)); },
                              0.0, q);
  }
  return integrate([&](double t) { return g(t) * pdf(t); }, a, b);
}

double HoldingDist::draw(std::mt19937_64& rng) const {
  if (const auto* d = std::get_if<Deterministic>(&v_)) return d->value;
  // 1 - U keeps u in (0, 1] so the log branch never sees zero.
  const double u =
      1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return inverse_survival(u);
}

std::string HoldingDist::describe() const {
  char buf[96];
  struct V {
    char* buf;
    std::size_t n;
    void operator()(const Deterministic& d) const {
      std::snprintf(buf, n, "det:%g", d.value);
    }
    void operator()(const Exponential& e) const {
      std::snprintf(buf, n, "exp:%g", e.mean);
    }
    void operator()(const Uniform& u) const {
      std::snprintf(buf, n, "uni:%g,%g", u.lo, u.hi);
    }
    void operator()(const TruncatedPareto& p) const {
      if (std::isinf(p.x_max)) {
        std::snprintf(buf, n, "pareto:%g,%g,inf", p.alpha, p.x_min);
      } else {
        std::snprintf(buf, n, "pareto:%g,%g,%g", p.alpha, p.x_min, p.x_max);
      }
    }
  };
  std::visit(V{buf, sizeof buf}, v_);
  return buf;
}

std::optional<HoldingDist> parse_dist(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) return std::nullopt;
  const std::string kind = text.substr(0, colon);
  const std::string args = text.substr(colon + 1);

  double p[3] = {0, 0, 0};
  int count = 0;
  std::size_t pos = 0;
  while (pos <= args.size() && count < 3) {
    const auto comma = args.find(',', pos);
    const std::string tok = args.substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (tok.empty()) return std::nullopt;
    if (tok == "inf") {
      p[count++] = kInf;
    } else {
      try {
        std::size_t used = 0;
        p[count] = std::stod(tok, &used);
        if (used != tok.size()) return std::nullopt;
        ++count;
      } catch (const std::exception&) {
        return std::nullopt;
      }
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }

  try {
    if (kind == "det" && count == 1) return HoldingDist(Deterministic{p[0]});
    if (kind == "exp" && count == 1) return HoldingDist(Exponential{p[0]});
    if ((kind == "uni" || kind == "uniform") && count == 2) {
      return HoldingDist(Uniform{p[0], p[1]});
    }
    if (kind == "pareto" && count == 3) {
      return HoldingDist(TruncatedPareto{p[0], p[1], p[2]});
    }
  } catch (const std::domain_error&) {
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace retrylock
