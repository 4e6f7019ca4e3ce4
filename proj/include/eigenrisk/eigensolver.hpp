#pragma once

#include <array>
#include <limits>

#include "eigenrisk/spectrum.hpp"

namespace eigenrisk {

struct SolverOptions {
  double tol = 1e-10;   // relative residual target for each implicit equation
  int max_iter = 200;   // bisection steps per bracket
};

// Solved implicit constants of the risk framework plus the derived sums.
// gamma == kappa in the KRR (infinite-feature) limit. delta_over_kappa is
// carried explicitly so the delta -> 0+ limits stay well-defined when
// kappa -> 0 (overparametrized ridgeless case).
struct ImplicitConstants {
  double kappa = 0.0;
  double gamma = 0.0;
  double z = 0.0;  // sum_i lambda_i / (lambda_i + gamma)
  double q = 0.0;  // sum_i (lambda_i / (lambda_i + gamma))^2
  std::array<double, 2> residuals{0.0, 0.0};  // left minus right of each equation
  double delta_over_kappa = 0.0;
  bool kappa_is_zero = false;

  // Config echo.
  double n = 0.0;
  double k = std::numeric_limits<double>::infinity();
  double delta = 0.0;
};

// kappa for kernel ridge regression: sum_i lambda_i/(lambda_i + kappa) + delta/kappa = n.
// Bisection on log kappa; the left side decreases strictly in kappa.
ImplicitConstants solve_krr_kappa(const TaskEigenstructure& ts, double n, double ridge,
                                  const SolverOptions& opts = {});

// Coupled (kappa, gamma) for random-feature regression:
//   n = z(gamma) + delta/kappa,   k = z(gamma) + k*kappa/gamma.
// Inner loop solves gamma at fixed kappa, outer loop drives the k-equation
// residual to zero; both are monotone, so brackets are certified.
ImplicitConstants solve_rf_constants(const TaskEigenstructure& ts, double n, double k,
                                     double ridge, const SolverOptions& opts = {});

// delta -> 0+ limit. n < k: gamma solves z(gamma) = n, kappa = (k-n)/k * gamma.
// n > k: gamma solves z(gamma) = k, kappa = 0 (kappa_is_zero set,
// delta_over_kappa = n - k). n == k is excluded.
ImplicitConstants solve_ridgeless(const TaskEigenstructure& ts, double n, double k,
                                  const SolverOptions& opts = {});

}  // namespace eigenrisk
