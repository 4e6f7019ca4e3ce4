#pragma once

#include <optional>
#include <vector>

#include "eigenrisk/spectrum.hpp"

namespace eigenrisk {

// Closed-form large-n theory for powerlaw tasks. All leading-order values
// carry the error exponent min(1, 2*alpha + 1 - beta) through
// error_exponent(); tolerances in callers scale against it.

struct ContinuumSums {
  double learnability = 0.0;       // sum l/(l+kappa)      ~ kappa^(-1/alpha)
  double learnability_sq = 0.0;    // sum (l/(l+kappa))^2  ~ kappa^(-1/alpha)
  std::optional<double> unlearned_sq_v2;  // sum (kappa/(l+kappa))^2 v^2
};

// Continuum (integral) approximations of the three framework eigensums for a
// pure powerlaw spectrum; valid for kappa << 1. The beta = alpha + 1 removable
// singularity is resolved by its limit value.
ContinuumSums continuum_sums(double alpha, double kappa,
                             std::optional<double> beta = std::nullopt);

// (alpha - beta + 1)/sin(pi (beta-1)/alpha); limit alpha/pi at beta = alpha+1.
double singular_fraction(double alpha, double beta);

// kappa at zero ridge: (pi/(alpha sin(pi/alpha)))^alpha * n^-alpha.
double null_kappa(double alpha, double n);

// Test risk at zero noise and zero ridge (leading order); also the normalizer
// that converts the relative noise s^2 into an absolute sigma^2.
double null_risk(const PowerlawTask& task, double n);

// sigma^2 = s_rel_sq * null_risk(task, n).
double scaled_noise(const PowerlawTask& task, double n);

// Leading-order test risk as a function of the fitting ratio R in [0, 1).
double risk_of_ratio(const PowerlawTask& task, double n, double ratio,
                     double prefactor_scale = 1.0);

// Exact inverses of each other (leading order): the ridge drops out and the
// ratio determines kappa through the zero-ridge constraint.
double kappa_of_ratio(double alpha, double n, double ratio);
double ratio_of_kappa(double alpha, double n, double kappa);

enum class OptimalRatioBranch { interior_root, boundary_zero };

struct OptimalRatioResult {
  double r_star = 0.0;      // root in [0, 1) of the optimality equation
  double ratio_star = 0.0;  // R* = r*^2
  OptimalRatioBranch branch = OptimalRatioBranch::boundary_zero;
  double error_exponent = 0.0;  // min(1, 2*alpha + 1 - beta)
};

// Optimal fitting ratio: the unique root of
//   alpha - beta - (alpha-1) beta r + alpha (alpha-1) (1-r)^beta s^2 = 0
// on [0,1), or the boundary value 0 when no root exists. The left side is
// verified to decrease across the bracket at runtime.
OptimalRatioResult optimal_ratio(const PowerlawTask& task);

// Noise threshold (beta - alpha)/(alpha (alpha - 1)) below which the optimal
// ratio vanishes; negative means interpolation is never optimal.
double interpolation_threshold(double alpha, double beta);

// 1 + (alpha-1)^2/(2 alpha^2) * (sqrt(R) - sqrt(R*))^2 — the proven
// suboptimality constant (conservative by a factor 2 versus the stated one).
double suboptimality_bound(const PowerlawTask& task, double ratio, double ratio_star);

double error_exponent(double alpha, double beta);

struct RatioCurve {
  PowerlawTask task;
  double n = 0.0;
  double prefactor_scale = 1.0;
  std::vector<double> ratio;    // strictly increasing, in [0, 0.99]
  std::vector<double> e_test;   // risk_of_ratio at each sample
};

// Samples risk_of_ratio on [0, min(r_max, 0.99)]; the closed form is not
// trusted closer to 1 than that.
RatioCurve make_ratio_curve(const PowerlawTask& task, double n, int points,
                            double r_max = 0.99, double prefactor_scale = 1.0);

}  // namespace eigenrisk
