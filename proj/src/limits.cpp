#include "eigenrisk/limits.hpp"

#include <algorithm>
#include <cmath>

#include "eigenrisk/errors.hpp"
#include "eigenrisk/risk.hpp"

namespace eigenrisk {

const char* to_string(LimitName name) {
  switch (name) {
    case LimitName::krr: return "krr";
    case LimitName::ridgeless_underparam: return "ridgeless_underparam";
    case LimitName::ridgeless_overparam: return "ridgeless_overparam";
    case LimitName::maloney: return "maloney";
    case LimitName::infinite_ridge: return "infinite_ridge";
    case LimitName::large_n: return "large_n";
  }
  return "unknown";
}

double bach_ridgeless_risk(const TaskEigenstructure& ts, double n, double k,
                           const SolverOptions& opts) {
  if (n == k) throw SingularThreshold("bach_ridgeless_risk: n == k");
  ImplicitConstants c = solve_ridgeless(ts, n, k, opts);
  const double gamma = c.gamma;
  if (n < k) {
    double b = sum_unlearned_sq_v2(ts, gamma) + ts.noise_var;
    double m = sum_unlearned_v2(ts, gamma) + ts.noise_var;
    return n / (n - c.q) * b + n / (k - n) * m;
  }
  double m = sum_unlearned_v2(ts, gamma) + ts.noise_var;
  return n / (n - k) * m;
}

double maloney_risk(const TaskEigenstructure& ts, double n, double k,
                    const SolverOptions& opts) {
  ts.validate();
  if (n == k) throw SingularThreshold("maloney_risk: n == k");
  if (ts.noise_var != 0.0) {
    throw InvalidArgument("maloney_risk: requires zero noise");
  }
  for (std::size_t i = 0; i < ts.modes(); ++i) {
    if (std::abs(ts.scale * ts.coeffs_sq[i] - ts.eigenvalues[i]) >
        1e-12 * std::max(1.0, ts.eigenvalues[i])) {
      throw InvalidArgument("maloney_risk: requires coeffs_sq == eigenvalues");
    }
  }
  if (ts.tail && std::abs(ts.tail->beta - ts.tail->alpha) > 1e-12) {
    throw InvalidArgument("maloney_risk: tail must have beta == alpha");
  }
  const double m = std::min(n, k);
  if (!effective_rank_exceeds(ts, m)) {
    double rank = 0.0;
    if (!ts.tail) {
      for (double l : ts.eigenvalues) rank += (l > 0.0) ? 1.0 : 0.0;
    }
    // rank == m is the fully-learnable edge: Delta = 0 and the risk vanishes.
    if (rank == m) return 0.0;
    throw NoSolution("maloney_risk: task rank must be at least min(n, k)");
  }
  // 1 = sum_i lambda_i/(m lambda_i + Delta) = z(Delta/m)/m; reuse the certified
  // gamma solve through the substitution gamma = Delta/m.
  auto residual = [&](double delta_cap) {
    return sum_learnability(ts, delta_cap / m) - m;
  };
  double x0 = 1.0;
  for (double l : ts.eigenvalues) x0 = std::max(x0, l);
  double lo = x0, hi = x0;
  if (residual(lo) <= 0.0) {
    while (residual(lo) <= 0.0) {
      hi = lo;
      lo /= 4.0;
      if (lo < 1e-300) throw SolverFailure("maloney_risk: bracket failure");
    }
  } else {
    while (residual(hi) > 0.0) {
      lo = hi;
      hi *= 4.0;
      if (hi > 1e300) throw SolverFailure("maloney_risk: bracket failure");
    }
  }
  double delta_cap = 0.0;
  for (int it = 0; it < opts.max_iter; ++it) {
    delta_cap = std::sqrt(lo * hi);
    double r = residual(delta_cap);
    if (std::abs(r) <= opts.tol * m) break;
    (r > 0.0 ? lo : hi) = delta_cap;
  }
  return std::max(n, k) / (std::max(n, k) - m) * delta_cap;
}

std::vector<LimitCheckResult> check_all_limits(const TaskEigenstructure& ts, double n,
                                               double k, double delta,
                                               const SolverOptions& opts) {
  ts.validate();
  if (n == k) throw SingularThreshold("check_all_limits: n == k");
  const double n_lo = std::min(n, k), k_hi = std::max(n, k);
  auto gap = [](double general, double limit) {
    return std::abs(general - limit) / std::max(std::abs(limit), 1e-30);
  };
  std::vector<LimitCheckResult> out;

  {
    double general = rf_risk(ts, n, 1e9, delta, opts).e_test;
    double limit = krr_risk(ts, n, delta, opts).e_test;
    out.push_back({LimitName::krr, general, limit, gap(general, limit)});
  }
  {
    double general = rf_risk(ts, n_lo, k_hi, 1e-10, opts).e_test;
    double limit = bach_ridgeless_risk(ts, n_lo, k_hi, opts);
    out.push_back({LimitName::ridgeless_underparam, general, limit, gap(general, limit)});
  }
  {
    double general = rf_risk(ts, k_hi, n_lo, 1e-10, opts).e_test;
    double limit = bach_ridgeless_risk(ts, k_hi, n_lo, opts);
    out.push_back({LimitName::ridgeless_overparam, general, limit, gap(general, limit)});
  }
  {
    // Student-equals-teacher copy of the task.
    TaskEigenstructure st = ts;
    st.coeffs_sq = st.eigenvalues;
    st.scale = 1.0;
    st.noise_var = 0.0;
    if (st.tail) st.tail->beta = st.tail->alpha;
    double general = rf_risk(st, n, k, 1e-10, opts).e_test;
    double limit = maloney_risk(st, n, k, opts);
    out.push_back({LimitName::maloney, general, limit, gap(general, limit)});
  }
  {
    double general = rf_risk(ts, n, k, 1e12, opts).e_test;
    double limit = total_power(ts);
    out.push_back({LimitName::infinite_ridge, general, limit, gap(general, limit)});
  }
  {
    double general = rf_risk(ts, 1e9, k, delta, opts).e_test;
    ImplicitConstants c = solve_ridgeless(ts, 2.0 * k, k, opts);  // gamma: z(gamma) = k
    double limit = sum_unlearned_v2(ts, c.gamma) + ts.noise_var;
    out.push_back({LimitName::large_n, general, limit, gap(general, limit)});
  }
  return out;
}

}  // namespace eigenrisk
