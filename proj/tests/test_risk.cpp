#include <doctest.h>

#include <cmath>

#include "eigenrisk/errors.hpp"
#include "eigenrisk/risk.hpp"
#include "eigenrisk/rng.hpp"

using namespace eigenrisk;

namespace {

TaskEigenstructure small_spectrum() {
  TaskEigenstructure ts;
  ts.eigenvalues = {1.0, 0.5, 0.25, 0.125};
  ts.coeffs_sq = {1.0, 0.5, 0.25, 0.125};
  ts.noise_var = 0.1;
  return ts;
}

PowerlawTask plaw(double a, double b, double s2 = 0.0) {
  PowerlawTask t;
  t.alpha = a;
  t.beta = b;
  t.s_rel_sq = s2;
  return t;
}

TaskEigenstructure random_powerlaw_task(Xoshiro256& rng, std::int64_t modes = 256) {
  PowerlawTask t = plaw(1.2 + 1.8 * rng.uniform_pos(), 0.0);
  t.beta = 1.1 + (2.0 * t.alpha - 0.2) * rng.uniform_pos();
  TaskEigenstructure ts = make_powerlaw_structure(t, modes);
  ts.noise_var = 0.3 * rng.uniform_pos();
  return ts;
}

}  // namespace

TEST_CASE("rf risk reproduces the high-precision reference on a small spectrum") {
  // Reference values from an independent 40-digit solve of the same formulas.
  RiskReport r = rf_risk(small_spectrum(), 3.0, 5.0, 0.1);
  CHECK(r.constants.kappa == doctest::Approx(0.139044556305493011).epsilon(1e-9));
  CHECK(r.constants.gamma == doctest::Approx(0.255672379782110284).epsilon(1e-9));
  CHECK(r.constants.z == doctest::Approx(2.28080607643285737).epsilon(1e-9));
  CHECK(r.constants.q == doctest::Approx(1.42427508200765659).epsilon(1e-9));
  CHECK(r.e_test == doctest::Approx(0.889174042338904788).epsilon(1e-8));
  CHECK(r.e_train == doctest::Approx(0.0511018102746193261).epsilon(1e-8));
  CHECK(r.bias_d == doctest::Approx(0.406219469791855841).epsilon(1e-8));
  CHECK(r.bias_df == doctest::Approx(0.318991317701828522).epsilon(1e-8));
  CHECK(r.var_d == doctest::Approx(r.e_test - r.bias_d).epsilon(1e-12));
  CHECK(r.var_df == doctest::Approx(r.e_test - r.bias_df).epsilon(1e-12));
  CHECK(!r.threshold_proximity);
}

TEST_CASE("krr risk reproduces the high-precision reference") {
  RiskReport r = krr_risk(small_spectrum(), 2.0, 0.5);
  CHECK(r.constants.kappa == doctest::Approx(0.766155214226388819).epsilon(1e-9));
  CHECK(r.constants.q == doctest::Approx(0.556730829155879072).epsilon(1e-9));
  CHECK(r.overfitting_coeff == doctest::Approx(1.38574289564452168).epsilon(1e-8));
  CHECK(r.e_test == doctest::Approx(0.978013270194968965).epsilon(1e-8));
  CHECK(r.e_train == doctest::Approx(0.104133686093055064).epsilon(1e-8));
  CHECK(r.bias_d == doctest::Approx(0.705768200774420033).epsilon(1e-8));
  CHECK(r.bias_d == r.bias_df);
  CHECK(r.var_d == r.var_df);
}

TEST_CASE("infinite ridge recovers total power and a fitting ratio of one") {
  TaskEigenstructure ts = small_spectrum();
  const double power = total_power(ts);
  RiskReport rf = rf_risk(ts, 7.0, 11.0, 1e10);
  CHECK(rf.e_test == doctest::Approx(power).epsilon(1e-6));
  CHECK(rf.e_train / rf.e_test == doctest::Approx(1.0).epsilon(1e-4));
  RiskReport kr = krr_risk(ts, 7.0, 1e10);
  CHECK(kr.e_test == doctest::Approx(power).epsilon(1e-6));
}

TEST_CASE("large n at finite k leaves the single-projection bias") {
  TaskEigenstructure ts = make_powerlaw_structure(plaw(1.5, 1.8), 512);
  ts.noise_var = 0.2;
  const double k = 24.0;
  RiskReport r = rf_risk(ts, 1e9, k, 1e-4);
  ImplicitConstants c = solve_ridgeless(ts, 2.0 * k, k);  // gamma with z(gamma) = k
  double expected = sum_unlearned_v2(ts, c.gamma) + ts.noise_var;
  CHECK(r.e_test == doctest::Approx(expected).epsilon(1e-3));
  CHECK(r.overfitting_coeff == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("fitting ratio identities") {
  TaskEigenstructure ts = make_powerlaw_structure(plaw(1.7, 1.4), 512);
  SUBCASE("rf: ratio = (delta/(n kappa))^2 exactly") {
    RiskReport r = rf_risk(ts, 40.0, 90.0, 0.03);
    double root = 0.03 / (40.0 * r.constants.kappa);
    CHECK(r.fitting_ratio == doctest::Approx(root * root).epsilon(1e-12));
    CHECK(r.e_train == doctest::Approx(r.fitting_ratio * r.e_test).epsilon(1e-12));
  }
  SUBCASE("krr: ratio = (1 - z/n)^2 through the constraint") {
    RiskReport r = krr_risk(ts, 40.0, 0.03);
    double root = 1.0 - r.constants.z / 40.0;
    CHECK(r.fitting_ratio == doctest::Approx(root * root).epsilon(1e-8));
  }
  SUBCASE("ridgeless overparametrized: ratio = (1 - k/n)^2") {
    RiskReport r = rf_risk(ts, 100.0, 25.0, 0.0);
    CHECK(r.fitting_ratio == doctest::Approx(0.75 * 0.75).epsilon(1e-9));
    CHECK(r.constants.kappa_is_zero);
  }
  SUBCASE("ridgeless underparametrized interpolates") {
    RiskReport r = rf_risk(ts, 25.0, 100.0, 0.0);
    CHECK(r.fitting_ratio == 0.0);
    CHECK(r.e_train == 0.0);
  }
}

TEST_CASE("rf agrees with krr at huge k across a random grid") {
  Xoshiro256 rng(31337);
  for (int rep = 0; rep < 20; ++rep) {
    TaskEigenstructure ts = random_powerlaw_task(rng);
    double n = 10.0 + 150.0 * rng.uniform_pos();
    double delta = std::pow(10.0, -6.0 + 7.0 * rng.uniform_pos());
    RiskReport rf = rf_risk(ts, n, 1e9, delta);
    RiskReport kr = krr_risk(ts, n, delta);
    INFO("rep=", rep, " n=", n, " delta=", delta);
    CHECK(rf.e_test == doctest::Approx(kr.e_test).epsilon(1e-4));
    CHECK(rf.e_train == doctest::Approx(kr.e_train).epsilon(1e-4));
    CHECK(rf.bias_d == doctest::Approx(kr.bias_d).epsilon(1e-4));
  }
}

TEST_CASE("ridgeless risk is monotone beyond the double-descent peak") {
  Xoshiro256 rng(99);
  for (int rep = 0; rep < 5; ++rep) {
    TaskEigenstructure ts = random_powerlaw_task(rng);
    SUBCASE("") {}
    double n = 32.0 + std::floor(64.0 * rng.uniform_pos());
    double prev = std::numeric_limits<double>::infinity();
    for (double f : {1.25, 1.6, 2.0, 3.0, 5.0, 9.0}) {
      double e = rf_risk(ts, n, f * n, 1e-10).e_test;
      CHECK(e <= prev * (1.0 + 1e-9));
      prev = e;
    }
    prev = std::numeric_limits<double>::infinity();
    for (double f : {1.25, 1.6, 2.0, 3.0, 5.0, 9.0}) {
      double e = rf_risk(ts, f * n, n, 1e-10).e_test;
      CHECK(e <= prev * (1.0 + 1e-9));
      prev = e;
    }
  }
}

TEST_CASE("both bias splits shrink when n or k grow at fixed ridge") {
  Xoshiro256 rng(4242);
  for (int rep = 0; rep < 8; ++rep) {
    TaskEigenstructure ts = random_powerlaw_task(rng);
    double n = 16.0 + 100.0 * rng.uniform_pos();
    double k = 16.0 + 100.0 * rng.uniform_pos();
    double delta = std::pow(10.0, -3.0 + 4.0 * rng.uniform_pos());
    RiskReport base = rf_risk(ts, n, k, delta);
    RiskReport more_n = rf_risk(ts, 1.3 * n, k, delta);
    RiskReport more_k = rf_risk(ts, n, 1.3 * k, delta);
    INFO("rep=", rep);
    CHECK(more_n.bias_d <= base.bias_d * (1.0 + 1e-8));
    CHECK(more_n.bias_df <= base.bias_df * (1.0 + 1e-8));
    CHECK(more_k.bias_d <= base.bias_d * (1.0 + 1e-8));
    CHECK(more_k.bias_df <= base.bias_df * (1.0 + 1e-8));
    CHECK(base.var_d >= -1e-10);
    CHECK(base.var_df >= -1e-10);
    CHECK(base.bias_df >= ts.noise_var - 1e-12);
  }
}

TEST_CASE("learnabilities: conservation and simple values") {
  TaskEigenstructure ts = make_powerlaw_structure(plaw(1.6, 1.6), 512);
  SUBCASE("budget saturates at delta = 0 with n < k") {
    ImplicitConstants c = solve_ridgeless(ts, 40.0, 120.0);
    Learnabilities l = learnabilities(c, ts);
    CHECK(l.budget == doctest::Approx(40.0));
    CHECK(l.total == doctest::Approx(40.0).epsilon(1e-8));
    CHECK(std::abs(l.slack) <= 1e-6);
  }
  SUBCASE("huge gamma kills every mode") {
    ImplicitConstants c;
    c.gamma = 1e12;
    c.n = 10;
    c.k = 20;
    Learnabilities l = learnabilities(c, ts);
    CHECK(l.total <= 1e-9);
  }
  SUBCASE("unit eigenvalue at gamma = 1 is half learned") {
    TaskEigenstructure single;
    single.eigenvalues = {1.0};
    single.coeffs_sq = {1.0};
    ImplicitConstants c;
    c.gamma = 1.0;
    c.n = 1;
    c.k = 1;
    Learnabilities l = learnabilities(c, single);
    CHECK(l.per_mode[0] == doctest::Approx(0.5));
  }
  SUBCASE("positive ridge leaves positive slack") {
    auto c = solve_rf_constants(ts, 40.0, 120.0, 0.5);
    Learnabilities l = learnabilities(c, ts);
    CHECK(l.slack > 0.0);
  }
}

TEST_CASE("interpolation threshold diverges and is flagged, not clamped") {
  TaskEigenstructure ts = make_powerlaw_structure(plaw(1.5, 1.5), 2048);
  RiskReport r = rf_risk(ts, 64.0, 64.0, 1e-9);
  CHECK(r.threshold_proximity);
  CHECK(r.e_test > 10.0 * total_power(ts));  // the double-descent spike is real
}

TEST_CASE("optimal ridge search: basic geometry") {
  SUBCASE("more is better at optimal ridge (spot check)") {
    Xoshiro256 rng(2718);
    for (int rep = 0; rep < 5; ++rep) {
      TaskEigenstructure ts = random_powerlaw_task(rng, 192);
      double n = 16.0 + std::floor(80.0 * rng.uniform_pos());
      double k = 16.0 + std::floor(80.0 * rng.uniform_pos());
      auto base = optimal_ridge(ts, n, k);
      auto more_n = optimal_ridge(ts, 2.0 * n, k);
      auto more_k = optimal_ridge(ts, n, 2.0 * k);
      INFO("rep=", rep, " n=", n, " k=", k);
      CHECK(more_n.report.e_test < base.report.e_test - 1e-8);
      CHECK(more_k.report.e_test < base.report.e_test - 1e-8);
      CHECK(!base.non_unimodal_warning);
    }
  }
  SUBCASE("pure noise pushes the search to the top of the bracket") {
    TaskEigenstructure noise;
    noise.eigenvalues = {1.0, 0.5, 0.25};
    noise.coeffs_sq = {0.0, 0.0, 0.0};
    noise.noise_var = 1.0;
    auto r = optimal_ridge(noise, 10.0, 20.0);
    CHECK(r.at_upper_bound);
    CHECK(r.report.e_test == doctest::Approx(1.0).epsilon(1e-3));
  }
  SUBCASE("easy powerlaw task prefers (near-)zero ridge") {
    TaskEigenstructure ts = make_powerlaw_structure(plaw(1.5, 2.5), 4096);
    auto r = optimal_ridge(ts, 4096.0, 1e9);
    CHECK(r.report.fitting_ratio < 1e-3);
  }
}
