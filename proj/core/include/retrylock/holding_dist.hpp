#pragma once

#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>

namespace retrylock {

// Raised when an adaptive quadrature cannot certify the module tolerances
// (1e-10 absolute, 1e-8 relative), or when two integral routes that must
// agree do not. Never downgraded to a silent result.
struct QuadratureFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A distribution whose second moment diverges cannot feed the residual-time
// machinery; such parameters are refused up front.
struct NonFiniteMoment : std::domain_error {
  using std::domain_error::domain_error;
};

struct Deterministic {
  double value = 1.0;
};

struct Exponential {
  double mean = 1.0;
};

struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};

// Pareto body restricted to [x_min, x_max]. x_max may be +inf, in which
// case alpha must exceed 2 so both moments stay finite; anything else is
// rejected at construction rather than surfacing as a diverging integral.
struct TruncatedPareto {
  double alpha = 3.0;
  double x_min = 1.0;
  double x_max = 10.0;
};

// Holding-time distribution of the lock: how long one owner keeps it.
// Closed forms cover the moments and survival; expectations over regions
// run through adaptive quadrature, with infinite tails folded onto a finite
// interval by the survival substitution u = Q(t).
class HoldingDist {
 public:
  using Variant =
      std::variant<Deterministic, Exponential, Uniform, TruncatedPareto>;

  HoldingDist(Deterministic d);
  HoldingDist(Exponential e);
  HoldingDist(Uniform u);
  HoldingDist(TruncatedPareto p);

  double mean() const;
  double second_moment() const;

  double pdf(double t) const;       // density; no density for Deterministic
  double survival(double t) const;  // P(X > t), right-continuous
  double lower() const;
  double upper() const;  // +inf for unbounded tails
  bool point_mass() const;

  // Inverse of survival on (0, 1]; continuous variants only.
  double inverse_survival(double u) const;

  // E[g(X); X <= cut] and E[g(X); X > cut]. The point mass evaluates g
  // directly, so callers never touch a delta density.
  double expect_below(double cut, const std::function<double(double)>& g) const;
  double expect_above(double cut, const std::function<double(double)>& g) const;

  double draw(std::mt19937_64& rng) const;

  std::string describe() const;  // "exp:1", "det:2", "uni:0,2", "pareto:3,1,10"
  const Variant& variant() const { return v_; }

 private:
  Variant v_;
};

// Accepts the describe() spellings: det:S, exp:S, uni:a,b, pareto:a,lo,hi
// (hi may be "inf").
std::optional<HoldingDist> parse_dist(const std::string& text);

// Adaptive Gauss-Kronrod over [a, b] at the module tolerances.
double integrate(const std::function<double(double)>& f, double a, double b);

}  // namespace retrylock
