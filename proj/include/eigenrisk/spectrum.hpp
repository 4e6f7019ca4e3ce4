#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace eigenrisk {

// Analytic continuation of a truncated powerlaw task: modes i > start-1
// continue as lambda_i = i^-alpha, v_i^2 = i^-beta.
struct PowerlawTail {
  double alpha = 0.0;
  double beta = 0.0;
  std::int64_t start = 1;  // first tail index (M+1)
};

// Task eigenstructure: kernel eigenvalues, squared target coefficients,
// label-noise variance. All risk formulas consume this and nothing else.
// `scale` is a single multiplicative prefactor on the squared coefficients
// (the tail formulas assume unit-prefactor powerlaws, so arbitrary target
// scaling lives here rather than in the sequences).
struct TaskEigenstructure {
  std::vector<double> eigenvalues;  // non-increasing, all >= 0
  std::vector<double> coeffs_sq;    // same length, all >= 0
  double noise_var = 0.0;
  double scale = 1.0;
  std::optional<PowerlawTail> tail;

  std::size_t modes() const { return eigenvalues.size(); }
  // Throws InvalidArgument if any invariant fails.
  void validate() const;
};

struct PowerlawTask {
  double alpha = 0.0;               // eigenvalue decay exponent, > 1
  double beta = 0.0;                // coefficient decay exponent, in (1, 2*alpha+1)
  std::int64_t i0 = 1;              // exact powerlaw holds from this index
  double s_rel_sq = 0.0;            // relative noise level s^2
  std::vector<std::pair<double, double>> head_overrides;  // (lambda_i, v_i^2), i < i0

  void validate() const;
};

// Materializes M explicit modes of a powerlaw task and attaches the analytic
// tail for i > M. noise_var is left at 0: the noise depends on n and is
// resolved by scaled_noise() in the powerlaw module.
TaskEigenstructure make_powerlaw_structure(const PowerlawTask& task, std::int64_t modes);

// Total target power plus noise, tail included.
double total_power(const TaskEigenstructure& ts);

struct TotalPower {
  double value = 0.0;
  double tail_remainder_bound = 0.0;  // half-width of the integral sandwich
};
TotalPower total_power_bounded(const TaskEigenstructure& ts);

// --- powerlaw tail sums -----------------------------------------------------
//
// The solver and risk sums need tails of the form
//     sum_{i >= from} i^-p * (1 + gamma * i^alpha)^-j,   j in {0, 1, 2}.
// A short explicit sum is followed by Euler-Maclaurin with the exact integral,
// so the value is accurate to ~1e-12 relative at any gamma.

struct TailSum {
  double value = 0.0;
  double bound = 0.0;  // remainder bound of the integral sandwich
};

// sum_{i >= from} i^-p with p > 1. Throws DivergentSum for p <= 1.
TailSum powerlaw_tail_sum(double p, double from);

// sum_{i >= from} i^-p (1 + gamma i^alpha)^-j. Requires gamma >= 0, alpha > 1,
// j in {0,1,2}, and p == 0 or p > 1 (the only shapes the framework needs).
double resolvent_tail_sum(int j, double p, double alpha, double gamma, double from);

// --- tail-aware eigensums ----------------------------------------------------
//
// All sums below run over the explicit modes plus the analytic tail.
// Target-coefficient sums carry ts.scale; noise_var is never included.

double sum_learnability(const TaskEigenstructure& ts, double gamma);      // z
double sum_learnability_sq(const TaskEigenstructure& ts, double gamma);   // q
double sum_unlearned_v2(const TaskEigenstructure& ts, double gamma);      // sum gamma/(l+g) v^2
double sum_unlearned_sq_v2(const TaskEigenstructure& ts, double gamma);   // sum (gamma/(l+g))^2 v^2
double sum_mode_peak_v2(const TaskEigenstructure& ts, double gamma);      // sum l/(l+g)^2 v^2
double sum_lambda_v2(const TaskEigenstructure& ts);                       // sum l v^2
// Effective rank: number of strictly positive eigenvalues; infinite with a tail.
bool effective_rank_exceeds(const TaskEigenstructure& ts, double n);

}  // namespace eigenrisk
