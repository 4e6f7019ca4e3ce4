#pragma once

#include <string>
#include <vector>

#include "eigenrisk/eigensolver.hpp"
#include "eigenrisk/spectrum.hpp"

namespace eigenrisk {

// Cross-checks of the general risk estimate against independently implemented
// special-case formulas. Each limit formula is written out from scratch here;
// none of them call rf_risk, so a shared bug cannot hide.

enum class LimitName {
  krr,
  ridgeless_underparam,
  ridgeless_overparam,
  maloney,
  infinite_ridge,
  large_n,
};

const char* to_string(LimitName name);

struct LimitCheckResult {
  LimitName limit_name = LimitName::krr;
  double general_value = 0.0;  // rf_risk evaluated in the limiting regime
  double limit_value = 0.0;    // the independent closed form
  double relative_gap = 0.0;   // |general - limit| / max(|limit|, eps)
};

// Ridgeless test risk, both cases (n < k and n > k), n == k excluded.
double bach_ridgeless_risk(const TaskEigenstructure& ts, double n, double k,
                           const SolverOptions& opts = {});

// Student-equals-teacher ridgeless risk. Requires coeffs_sq == eigenvalues
// (after scale) and zero noise; solves 1 = sum_i lambda_i/(m lambda_i + Delta)
// with m = min(n, k) and returns max(n,k)/(max-min) * Delta.
double maloney_risk(const TaskEigenstructure& ts, double n, double k,
                    const SolverOptions& opts = {});

// Runs every limit check at canonical extreme parameters derived from
// (n, k, delta). The maloney entry runs on a student-equals-teacher copy of
// the task (coeffs_sq := eigenvalues, zero noise).
std::vector<LimitCheckResult> check_all_limits(const TaskEigenstructure& ts, double n,
                                               double k, double delta,
                                               const SolverOptions& opts = {});

}  // namespace eigenrisk
