#pragma once

#include <vector>

#include "eigenrisk/eigensolver.hpp"
#include "eigenrisk/spectrum.hpp"

namespace eigenrisk {

struct RiskReport {
  double e_test = 0.0;
  double e_train = 0.0;
  double fitting_ratio = 0.0;      // e_train / e_test = (delta/(n kappa))^2
  double overfitting_coeff = 1.0;  // test-risk prefactor; n/(n-q) in the KRR limit
  double bias_d = 0.0;             // data-averaged split
  double var_d = 0.0;
  double bias_df = 0.0;            // data-and-feature-averaged split
  double var_df = 0.0;
  ImplicitConstants constants;
  // Set when the prefactor denominator drops below 1e-3 (the estimate sits on
  // the double-descent spike): the divergence near n ~ k at small ridge is
  // real model behavior, returned as-is rather than clamped.
  bool threshold_proximity = false;
};

struct Learnabilities {
  std::vector<double> per_mode;  // lambda_i/(lambda_i + gamma) for explicit modes
  double tail_sum = 0.0;
  double total = 0.0;            // explicit + tail
  double budget = 0.0;           // min(n, k)
  double slack = 0.0;            // budget - total; >= -tol, ~0 at delta = 0
};

// Omniscient test/train risk for random-feature regression.
RiskReport rf_risk(const TaskEigenstructure& ts, double n, double k, double ridge,
                   const SolverOptions& opts = {});

// Same for kernel ridge regression (the infinite-feature entry point).
RiskReport krr_risk(const TaskEigenstructure& ts, double n, double ridge,
                    const SolverOptions& opts = {});

Learnabilities learnabilities(const ImplicitConstants& constants,
                              const TaskEigenstructure& ts);

struct OptimalRidgeResult {
  double delta_star = 0.0;
  RiskReport report;
  bool ridgeless_optimum = false;    // minimum sits at the delta -> 0+ endpoint
  bool at_upper_bound = false;       // golden section converged to the top of the bracket
  bool non_unimodal_warning = false; // coarse scan saw more than one local minimum
};

// argmin over delta in [0, inf) of rf_risk e_test: coarse log-grid scan for
// bracketing (and unimodality detection), then golden-section on log delta.
OptimalRidgeResult optimal_ridge(const TaskEigenstructure& ts, double n, double k,
                                 const SolverOptions& opts = {});

}  // namespace eigenrisk
