#pragma once

#include <cstdint>
#include <vector>

#include "eigenrisk/estimation.hpp"
#include "eigenrisk/spectrum.hpp"

namespace eigenrisk {

// Monte Carlo random-feature regression on the latent Gaussian construction:
// data x ~ N(0, I_m) in m = ts.modes() dimensions, labels y = v.x + noise,
// features psi(x) = W Lambda^(1/2) x with W entries N(0, 1/k).
//
// Ridge convention: with O(1)-scale feature functions the primal penalty is
// delta*k, which makes the equivalent kernel-side ridge exactly delta. The
// 1/sqrt(k) feature scaling used here absorbs the k, so the code solves
// (Psi Psi^T + delta I_k) a = Psi y and k_hat(X,X) = Psi^T Psi.
struct SimConfig {
  TaskEigenstructure ts;  // truncated to explicit modes; analytic tails are rejected
  std::int64_t n = 0;
  std::int64_t k = 0;
  double ridge = 0.0;
  int trials = 1;
  std::uint64_t seed = 0;
  bool fix_dataset_across_k = true;

  void validate() const;
};

struct TrialErrors {
  double train_mse = 0.0;
  double test_mse = 0.0;
};

struct SimulationResult {
  SimConfig config;
  std::vector<TrialErrors> trials;
  double train_mean = 0.0;
  double train_stderr = 0.0;
  double test_mean = 0.0;
  double test_stderr = 0.0;
  bool pseudo_solution = false;  // a rank-deficient ridgeless solve fell back
                                 // to the minimum-norm pseudo-solution
};

// Single grid point.
SimulationResult simulate_rf(const SimConfig& config, int threads = 0);

// Sweep over feature counts and ridges at fixed n. Within a trial the
// dataset is fixed while k varies (feature sets are nested prefixes of one
// stream) unless fix_dataset_across_k is false, in which case the dataset is
// redrawn per k. Results are ordered k-major then delta.
std::vector<SimulationResult> simulate_rf_sweep(const TaskEigenstructure& ts,
                                                std::int64_t n,
                                                const std::vector<std::int64_t>& k_grid,
                                                const std::vector<double>& delta_grid,
                                                int trials, std::uint64_t seed,
                                                bool fix_dataset_across_k = true,
                                                int threads = 0);

// Kernel ridge regression with the deterministic kernel K = X^T Lambda X
// (the infinite-feature case); population test risk in closed form.
SimulationResult simulate_krr(const TaskEigenstructure& ts, std::int64_t n, double ridge,
                              int trials, std::uint64_t seed, int threads = 0);

// Draws one synthetic dataset (empirical kernel matrix + labels) from the same
// construction; feeds the exponent-measurement pipeline. Mode count may be in
// the millions; generation streams over mode chunks.
KernelDataset sample_kernel_dataset(const TaskEigenstructure& ts, std::int64_t n_samples,
                                    std::uint64_t seed, int threads = 0);

}  // namespace eigenrisk
