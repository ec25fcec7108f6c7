#include "doctest.h"
#include "retrylock/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

using namespace retrylock;
using doctest::Approx;

TEST_CASE("residual moments") {
  CHECK(residual_stats(HoldingDist(Exponential{1.0})).s_r == Approx(1.0));
  CHECK(residual_stats(HoldingDist(Deterministic{1.0})).s_r == Approx(0.5));
  CHECK(residual_stats(HoldingDist(Uniform{0.0, 2.0})).s_r ==
        Approx(2.0 / 3.0));
  // S_r = E[X^2] / 2 E[X], so exp(2) doubles det(2)'s residual twice over
  CHECK(residual_stats(HoldingDist(Exponential{2.0})).s_r == Approx(2.0));
}

TEST_CASE("spin inefficiency and spin cpu against closed forms") {
  const HoldingDist e{Exponential{1.0}};
  const HoldingDist d{Deterministic{1.0}};
  for (double delta : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    CHECK(spin_inefficiency_k0(e, delta) ==
          Approx(std::exp(-delta)).epsilon(1e-9));
    CHECK(spin_cpu_gamma(e, delta) ==
          Approx(1.0 - std::exp(-delta)).epsilon(1e-9));
    CHECK(spin_inefficiency_k0(d, delta) ==
          Approx(std::max(0.0, 1.0 - delta)).epsilon(1e-9));
    const double gd = delta <= 1.0 ? delta - 0.5 * delta * delta : 0.5;
    CHECK(spin_cpu_gamma(d, delta) == Approx(gd).epsilon(1e-9));
  }
  CHECK(spin_cpu_gamma(d, 0.5) == Approx(0.375));
  CHECK(residual_after_spin(d, 0.5) == Approx(0.125));
  CHECK(residual_after_spin(e, 2.0) == Approx(std::exp(-2.0)).epsilon(1e-9));

  CHECK_THROWS_AS(spin_inefficiency_k0(e, -0.1), std::domain_error);
  CHECK_THROWS_AS(spin_cpu_gamma(e, -1.0), std::domain_error);
}

TEST_CASE("formfactor values and asymptotics") {
  CHECK(formfactor(0.0) == Approx(1.0));
  CHECK(formfactor(0.1) == Approx(0.951626).epsilon(1e-6));
  CHECK(formfactor(1.0) == Approx(0.632121).epsilon(1e-6));
  CHECK(formfactor(5.0) == Approx(0.198652).epsilon(1e-6));
  // small-y expansion 1 - y/2 + y^2/6
  CHECK(formfactor(1e-3) == Approx(1.0 - 5e-4 + 1e-6 / 6.0).epsilon(1e-10));
  // 1/y tail
  CHECK(50.0 * formfactor(50.0) == Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(formfactor(-1.0), std::domain_error);
}

TEST_CASE("contended k against closed forms") {
  const HoldingDist e{Exponential{1.0}};
  for (double delta : {0.5, 1.0, 2.0}) {
    for (double lambda : {0.0, 0.05, 0.1, 0.3}) {
      const double a = 1.0 + lambda;  // (1 + lambda S) / S at S = 1
      const double want = 1.0 - (1.0 - std::exp(-a * delta)) / a;
      CHECK(k_contended(e, delta, lambda) == Approx(want).epsilon(1e-8));
    }
  }
  // lambda = 0 reduces to the pure inefficiency
  CHECK(k_contended(e, 2.0, 0.0) == Approx(std::exp(-2.0)).epsilon(1e-9));
  CHECK(k_contended(e, 2.0, 0.1) == Approx(0.1916388).epsilon(1e-6));

  const HoldingDist d{Deterministic{1.0}};
  for (double delta : {0.5, 1.0, 3.0}) {
    for (double lambda : {0.05, 0.2}) {
      const double m = std::min(1.0, delta);
      const double want = 1.0 - (1.0 - std::exp(-lambda * m)) / lambda;
      CHECK(k_contended(d, delta, lambda) == Approx(want).epsilon(1e-8));
    }
  }
  CHECK_THROWS_AS(k_contended(e, 1.0, -0.1), std::domain_error);
}

TEST_CASE("linear k approximation") {
  const HoldingDist e{Exponential{1.0}};
  const LinearK le = k_linear(e, 2.0, 0.1);
  // slope = 1 - 3 e^-2 for exp(1) at delta 2
  CHECK(le.k == Approx(std::exp(-2.0) + 0.1 * (1.0 - 3.0 * std::exp(-2.0)))
                    .epsilon(1e-8));
  CHECK(le.k == Approx(0.1947347).epsilon(1e-6));
  CHECK_FALSE(le.valid);  // lambda * delta = 0.2 exceeds the 0.1 window
  CHECK(k_linear(e, 2.0, 0.05).valid);

  const HoldingDist d{Deterministic{1.0}};
  const LinearK ld = k_linear(d, 0.5, 0.2);
  CHECK(ld.k == Approx(0.525).epsilon(1e-9));
}

TEST_CASE("kappa and k convert both ways") {
  CHECK(kappa_from_k(0.1, 0.3) == Approx(0.1 / 0.97));
  CHECK(k_from_kappa(0.05, 0.2) == Approx(0.05 / 1.01));
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double k = u(rng);
    const double rho = 0.95 * u(rng);
    CHECK(k_from_kappa(kappa_from_k(k, rho), rho) == Approx(k).epsilon(1e-12));
  }
  CHECK(kappa_from_k(0.0, 0.5) == Approx(0.0));
  CHECK_THROWS_AS(kappa_from_k(1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(kappa_from_k(2.0, 0.6), std::domain_error);
}

TEST_CASE("mean-value waits, frozen point") {
  MvaInput in;
  in.k = 0.1;
  in.rho = 0.3;
  in.gamma = 1.0;
  in.t = 1e4;
  in.t_r = 0.14;
  in.s_r = 1.0;
  in.lambda = 0.3;

  const MvaWaits base = mva_waits(in, MvaVariant::Base);
  CHECK(base.w == Approx(309.6006).epsilon(1e-4));
  CHECK(base.w_s == Approx(0.3 / 0.97).epsilon(1e-9));
  CHECK(base.w_orb == Approx(base.w - base.w_s).epsilon(1e-9));
  CHECK(base.w_o == Approx(base.w - 0.3).epsilon(1e-9));
  CHECK(base.w_bar_o == Approx(base.w_o / 0.03).epsilon(1e-9));
  CHECK(base.w_b ==
        Approx(0.3 * (1.0 + base.w_orb) - 0.7 * base.w_s).epsilon(1e-9));
  CHECK(base.l_s == Approx(0.3 * base.w_s).epsilon(1e-9));

  const MvaWaits s1 = mva_waits(in, MvaVariant::Scheme1);
  CHECK(s1.w == Approx(0.03 / 0.97 * (0.1 * 1e4 + 0.14)).epsilon(1e-9));
  const MvaWaits s2 = mva_waits(in, MvaVariant::Scheme2);
  CHECK(s2.w == Approx(3.0971).epsilon(1e-4));
  CHECK(s2.w == Approx(0.03 / 0.97 * (0.01 * 1e4 + 0.14)).epsilon(1e-9));
  // spin decomposition stays the base one across variants
  CHECK(s1.w_s == Approx(base.w_s).epsilon(1e-12));
  CHECK(s2.w_s == Approx(base.w_s).epsilon(1e-12));

  // k = 0: no failed spins, the wait collapses to the spin term
  MvaInput zero = in;
  zero.k = 0.0;
  const MvaWaits w0 = mva_waits(zero, MvaVariant::Base);
  CHECK(w0.w == Approx(zero.rho * zero.gamma).epsilon(1e-12));
  CHECK(w0.w_o == Approx(0.0));

  MvaInput bad = in;
  bad.k = 1.0;
  bad.rho = 1.0;
  CHECK_THROWS_AS(mva_waits(bad, MvaVariant::Base), std::domain_error);
}

TEST_CASE("spin doubling rules") {
  const DoublingRule high =
      spin_doubling_prediction(ExpTail{1.0, 1.0}, 3.0, SpinRegime::HighEfficiency);
  CHECK(high.k_ratio == Approx(1.0));
  CHECK(high.predict_k(0.1) == Approx(0.01));
  CHECK(high.regime_consistent);  // e^-3 is well under 1/2

  const DoublingRule half =
      spin_doubling_prediction(ExpTail{2.0, 1.0}, 3.0, SpinRegime::HighEfficiency);
  CHECK(half.k_ratio == Approx(0.5));
  CHECK(half.predict_k(0.1) == Approx(0.005));
  CHECK(half.predict_k(2.0) == Approx(1.0));  // clamped to a probability

  // spin CPU grows by tau times the k drop in the efficient regime
  CHECK(high.predict_gamma(0.9, 0.1) == Approx(0.9 + 1.0 * (0.1 - 0.01)));

  const DoublingRule low =
      spin_doubling_prediction(ExpTail{1.0, 1.0}, 0.1, SpinRegime::LowEfficiency);
  CHECK(low.regime_consistent);  // delta = 0.1 is well under tau / 2
  CHECK(low.predict_k(0.9) == Approx(0.8));
  CHECK(low.predict_k(0.4) == Approx(0.0));
  CHECK(low.predict_gamma(0.095, 0.9) == Approx(0.19));

  // deterministic(1), delta 0.1 -> 0.2: rule vs exact
  const HoldingDist d{Deterministic{1.0}};
  CHECK(low.predict_k(spin_inefficiency_k0(d, 0.1)) ==
        Approx(spin_inefficiency_k0(d, 0.2)).epsilon(1e-9));
  CHECK(low.predict_gamma(spin_cpu_gamma(d, 0.1), 0.9) == Approx(0.19));
  CHECK(spin_cpu_gamma(d, 0.2) == Approx(0.18));  // exact trails the rule

  // contradictory regime claims get flagged, not rejected
  const DoublingRule off =
      spin_doubling_prediction(ExpTail{1.0, 1.0}, 0.1, SpinRegime::HighEfficiency);
  CHECK_FALSE(off.regime_consistent);
  const DoublingRule off2 =
      spin_doubling_prediction(ExpTail{1.0, 1.0}, 3.0, SpinRegime::LowEfficiency);
  CHECK_FALSE(off2.regime_consistent);
}

TEST_CASE("whole-model evaluation is consistent with its parts") {
  ModelParams p{HoldingDist(Exponential{1.0}), 2.0, 0.1, 100.0,
                MvaVariant::Base};
  const ModelOutput out = evaluate_model(p);
  CHECK(out.s == Approx(1.0));
  CHECK(out.rho == Approx(0.1));
  CHECK(out.s_r == Approx(1.0).epsilon(1e-9));
  CHECK(out.k0 == Approx(std::exp(-2.0)).epsilon(1e-9));
  CHECK(out.k == Approx(k_contended(p.dist, p.delta, p.lambda)).epsilon(1e-12));
  CHECK(out.kappa == Approx(kappa_from_k(out.k, out.rho)).epsilon(1e-12));
  CHECK(out.gamma + out.t_r == Approx(out.s_r).epsilon(1e-9));

  MvaInput in;
  in.k = out.k;
  in.rho = out.rho;
  in.gamma = out.gamma;
  in.t = p.sleep_mean;
  in.t_r = out.t_r;
  in.s_r = out.s_r;
  in.lambda = p.lambda;
  CHECK(out.waits.w == Approx(mva_waits(in, MvaVariant::Base).w).epsilon(1e-12));
}

TEST_CASE("scheme mean sleep mapping") {
  CHECK(scheme_sleep_ms(Patch6904068{}) == 10.0);
  CHECK(scheme_sleep_ms(Patch6904068{std::chrono::milliseconds(25)}) == 25.0);
  CHECK(scheme_sleep_ms(Scheme1{std::chrono::milliseconds(7)}) == 7.0);
  CHECK(scheme_sleep_ms(Scheme2{3}) == 30.0);
  CHECK_FALSE(scheme_sleep_ms(TenG{}).has_value());
  CHECK_FALSE(scheme_sleep_ms(Scheme0{}).has_value());
}
