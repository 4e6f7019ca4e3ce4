#include "eigenrisk/risk.hpp"

#include <algorithm>
#include <cmath>

#include "eigenrisk/errors.hpp"

namespace eigenrisk {

namespace {

// Assembles the test-risk estimate from solved constants. Handles the
// ridgeless overparametrized case (kappa = 0) transparently: the kappa term
// of the bracket vanishes and the prefactor reduces to n/(n-k).
RiskReport assemble_rf(const TaskEigenstructure& ts, double n, double k,
                       const ImplicitConstants& c) {
  const double z = c.z, q = c.q, gamma = c.gamma, kappa = c.kappa;
  if (k - q <= 0.0) {
    throw SingularThreshold("rf_risk: k - q <= 0 (features fully saturated)");
  }
  const double den = 1.0 - (q * (k - 2.0 * z) + z * z) / (n * (k - q));
  if (den <= 0.0) {
    throw SingularThreshold(
        "rf_risk: prefactor denominator <= 0 at the interpolation threshold");
  }

  RiskReport r;
  r.constants = c;
  r.overfitting_coeff = 1.0 / den;
  r.threshold_proximity = den < 1e-3;

  const double unlearned = sum_unlearned_v2(ts, gamma);
  const double peak = (kappa == 0.0) ? 0.0 : kappa * sum_mode_peak_v2(ts, gamma);
  r.bias_d = unlearned - peak * k / (k - q) + ts.noise_var;
  r.e_test = r.overfitting_coeff * r.bias_d;
  r.var_d = r.e_test - r.bias_d;
  r.bias_df = sum_unlearned_sq_v2(ts, gamma) + ts.noise_var;
  r.var_df = r.e_test - r.bias_df;

  const double root_ratio = c.delta_over_kappa / n;
  r.fitting_ratio = root_ratio * root_ratio;
  r.e_train = r.fitting_ratio * r.e_test;
  return r;
}

}  // namespace

RiskReport rf_risk(const TaskEigenstructure& ts, double n, double k, double ridge,
                   const SolverOptions& opts) {
  ImplicitConstants c = (ridge == 0.0) ? solve_ridgeless(ts, n, k, opts)
                                       : solve_rf_constants(ts, n, k, ridge, opts);
  return assemble_rf(ts, n, k, c);
}

RiskReport krr_risk(const TaskEigenstructure& ts, double n, double ridge,
                    const SolverOptions& opts) {
  ImplicitConstants c = solve_krr_kappa(ts, n, ridge, opts);
  if (n - c.q <= 0.0) {
    throw SingularThreshold("krr_risk: n - q <= 0");
  }
  RiskReport r;
  r.constants = c;
  r.overfitting_coeff = n / (n - c.q);
  r.threshold_proximity = (n - c.q) < 1e-3 * n;
  // At gamma = kappa the data- and feature-averaged splits coincide.
  r.bias_d = sum_unlearned_sq_v2(ts, c.kappa) + ts.noise_var;
  r.bias_df = r.bias_d;
  r.e_test = r.overfitting_coeff * r.bias_d;
  r.var_d = r.e_test - r.bias_d;
  r.var_df = r.var_d;
  const double root_ratio = c.delta_over_kappa / n;
  r.fitting_ratio = root_ratio * root_ratio;
  r.e_train = r.fitting_ratio * r.e_test;
  return r;
}

Learnabilities learnabilities(const ImplicitConstants& constants,
                              const TaskEigenstructure& ts) {
  Learnabilities out;
  out.per_mode.reserve(ts.modes());
  double explicit_sum = 0.0;
  for (double l : ts.eigenvalues) {
    double li = (l > 0.0) ? l / (l + constants.gamma) : 0.0;
    out.per_mode.push_back(li);
    explicit_sum += li;
  }
  if (ts.tail) {
    out.tail_sum = resolvent_tail_sum(1, 0.0, ts.tail->alpha, constants.gamma,
                                      static_cast<double>(ts.tail->start));
  }
  out.total = explicit_sum + out.tail_sum;
  out.budget = std::min(constants.n, constants.k);
  out.slack = out.budget - out.total;
  return out;
}

OptimalRidgeResult optimal_ridge(const TaskEigenstructure& ts, double n, double k,
                                 const SolverOptions& opts) {
  ts.validate();
  double top = 0.0;
  for (double l : ts.eigenvalues) top = std::max(top, l);
  if (top <= 0.0) top = 1.0;

  const double lo = 1e-12 * top;
  const double hi = 1e6 * top * n;
  auto objective = [&](double log_delta) {
    // A threshold singularity inside the scan is a worst-possible ridge, not
    // a failure of the search.
    try {
      return rf_risk(ts, n, k, std::exp(log_delta), opts).e_test;
    } catch (const SingularThreshold&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  // Coarse scan: brackets the global minimum and detects non-unimodality.
  const int scan_points = 49;
  const double llo = std::log(lo), lhi = std::log(hi);
  std::vector<double> ld(scan_points), val(scan_points);
  for (int i = 0; i < scan_points; ++i) {
    ld[static_cast<std::size_t>(i)] = llo + (lhi - llo) * i / (scan_points - 1);
    val[static_cast<std::size_t>(i)] = objective(ld[static_cast<std::size_t>(i)]);
  }
  int best = 0;
  int local_minima = 0;
  for (int i = 0; i < scan_points; ++i) {
    auto ui = static_cast<std::size_t>(i);
    if (val[ui] < val[static_cast<std::size_t>(best)]) best = i;
    bool left_up = (i == 0) || val[static_cast<std::size_t>(i - 1)] > val[ui] * (1.0 + 1e-12);
    bool right_up = (i == scan_points - 1) ||
                    val[static_cast<std::size_t>(i + 1)] > val[ui] * (1.0 + 1e-12);
    if (i > 0 && i < scan_points - 1 && left_up && right_up) ++local_minima;
  }

  OptimalRidgeResult result;
  result.non_unimodal_warning = local_minima > 1;

  // Golden section inside the bracketing neighbours of the scan minimum.
  double a = ld[static_cast<std::size_t>(std::max(best - 1, 0))];
  double b = ld[static_cast<std::size_t>(std::min(best + 1, scan_points - 1))];
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = objective(c), fd = objective(d);
  for (int it = 0; it < 120 && (b - a) > 1e-8; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = objective(d);
    }
  }
  double log_delta_star = 0.5 * (a + b);
  double delta_star = std::exp(log_delta_star);
  RiskReport at_star = rf_risk(ts, n, k, delta_star, opts);

  result.at_upper_bound = best == scan_points - 1;

  // Endpoint handling: compare with the exact delta -> 0+ limit when the
  // search ran into the bottom of the bracket.
  if (best == 0 && n != k) {
    RiskReport ridgeless = rf_risk(ts, n, k, 0.0, opts);
    if (ridgeless.e_test <= at_star.e_test) {
      result.delta_star = 0.0;
      result.report = ridgeless;
      result.ridgeless_optimum = true;
      return result;
    }
  }
  result.delta_star = delta_star;
  result.report = at_star;
  return result;
}

}  // namespace eigenrisk
