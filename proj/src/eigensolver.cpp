#include "eigenrisk/eigensolver.hpp"

#include <algorithm>
#include <cmath>

#include "eigenrisk/errors.hpp"

namespace eigenrisk {

namespace {

void check_finite_positive(double x, const char* name) {
  if (!std::isfinite(x) || !(x > 0.0)) {
    throw InvalidArgument(std::string(name) + " must be finite and positive");
  }
}

// Bisection on log x for a strictly decreasing f with a certified bracket
// f(lo) > 0 > f(hi). Converges on |f|/ref <= tol or the step limit.
template <typename F>
double bisect_log_decreasing(F&& f, double lo, double hi, double ref, double tol,
                             int max_iter) {
  double llo = std::log(lo), lhi = std::log(hi);
  double mid = 0.5 * (llo + lhi);
  for (int it = 0; it < max_iter; ++it) {
    mid = 0.5 * (llo + lhi);
    double fm = f(std::exp(mid));
    if (std::abs(fm) <= tol * ref) return std::exp(mid);
    if (fm > 0.0) {
      llo = mid;
    } else {
      lhi = mid;
    }
  }
  return std::exp(mid);
}

// Expands [x, x*factor) geometrically until f changes sign. f strictly
// decreasing; returns {lo, hi} with f(lo) > 0 >= f(hi).
template <typename F>
std::pair<double, double> expand_bracket_decreasing(F&& f, double x0, const char* what) {
  double lo = x0, hi = x0;
  double flo = f(lo);
  if (flo <= 0.0) {
    for (int i = 0; i < 2400; ++i) {
      hi = lo;
      lo /= 4.0;
      flo = f(lo);
      if (flo > 0.0) return {lo, hi};
      if (lo < 1e-300) break;
    }
    throw SolverFailure(std::string("bracket expansion failed (low side): ") + what);
  }
  for (int i = 0; i < 2400; ++i) {
    lo = hi;
    hi *= 4.0;
    if (f(hi) <= 0.0) return {lo, hi};
    if (hi > 1e300) break;
  }
  throw SolverFailure(std::string("bracket expansion failed (high side): ") + what);
}

double top_eigen_scale(const TaskEigenstructure& ts) {
  double top = 0.0;
  for (double l : ts.eigenvalues) top = std::max(top, l);
  if (top <= 0.0) top = 1.0;
  return top;
}

}  // namespace

ImplicitConstants solve_krr_kappa(const TaskEigenstructure& ts, double n, double ridge,
                                  const SolverOptions& opts) {
  ts.validate();
  check_finite_positive(n, "n");
  if (!std::isfinite(ridge) || ridge < 0.0) {
    throw InvalidArgument("ridge must be finite and >= 0");
  }
  if (ridge == 0.0 && !effective_rank_exceeds(ts, n)) {
    throw NoSolution(
        "solve_krr_kappa: delta = 0 needs more than n nonzero modes (kappa would be 0)");
  }

  auto phi = [&](double kappa) {
    return sum_learnability(ts, kappa) + ridge / kappa - n;
  };
  double x0 = std::max(ridge / n, 1e-6 * top_eigen_scale(ts));
  auto [lo, hi] = expand_bracket_decreasing(phi, x0, "krr kappa");
  double kappa = bisect_log_decreasing(phi, lo, hi, n, opts.tol, opts.max_iter);
  if (std::abs(phi(kappa)) > 10.0 * opts.tol * n) {
    throw SolverFailure("solve_krr_kappa: residual above tolerance at bracket exit");
  }

  ImplicitConstants out;
  out.kappa = kappa;
  out.gamma = kappa;
  out.z = sum_learnability(ts, kappa);
  out.q = sum_learnability_sq(ts, kappa);
  out.residuals = {n - out.z - ridge / kappa, 0.0};
  out.delta_over_kappa = ridge / kappa;
  out.n = n;
  out.delta = ridge;
  return out;
}

ImplicitConstants solve_rf_constants(const TaskEigenstructure& ts, double n, double k,
                                     double ridge, const SolverOptions& opts) {
  ts.validate();
  check_finite_positive(n, "n");
  check_finite_positive(k, "k");
  if (!std::isfinite(ridge) || ridge < 0.0) {
    throw InvalidArgument("ridge must be finite and >= 0");
  }
  if (ridge == 0.0) {
    if (n < k) return solve_ridgeless(ts, n, k, opts);
    throw NoSolution(
        "solve_rf_constants: the implicit equations have no solution at delta = 0 with "
        "n >= k; use solve_ridgeless for the delta -> 0+ limit");
  }

  // Single bisection on log gamma. Eliminating kappa through the second
  // equation (kappa = gamma (k - z)/k) leaves the first as a residual
  //   r(gamma) = n - z(gamma) - delta k / (gamma (k - z(gamma))),
  // strictly increasing on the feasible region z(gamma) < k, from -inf to n.
  // kappa is then recovered from whichever equation has the smaller
  // cancellation, so dominant-ridge and near-ridgeless corners stay accurate.
  auto z_of = [&](double gamma) { return sum_learnability(ts, gamma); };
  auto neg_r = [&](double gamma) {
    double z = z_of(gamma);
    if (z >= k) return std::numeric_limits<double>::infinity();
    return -(n - z - ridge * k / (gamma * (k - z)));
  };

  double g0 = std::max({top_eigen_scale(ts), ridge / n, 1e-12});
  auto [glo, ghi] = expand_bracket_decreasing(neg_r, g0, "rf gamma");
  double llo = std::log(glo), lhi = std::log(ghi);
  for (int it = 0; it < opts.max_iter && lhi - llo > 1e-15; ++it) {
    double mid = 0.5 * (llo + lhi);
    double f = neg_r(std::exp(mid));
    if (std::abs(f) <= 0.01 * opts.tol * n) {
      llo = lhi = mid;
      break;
    }
    (f > 0.0 ? llo : lhi) = mid;
  }

  ImplicitConstants out;
  out.gamma = std::exp(0.5 * (llo + lhi));
  out.z = z_of(out.gamma);
  out.q = sum_learnability_sq(ts, out.gamma);
  // kappa from the less-cancelling equation.
  if ((n - out.z) / n >= (k - out.z) / k) {
    out.kappa = ridge / (n - out.z);
  } else {
    out.kappa = out.gamma * (k - out.z) / k;
  }
  out.delta_over_kappa = ridge / out.kappa;
  out.residuals = {n - out.z - out.delta_over_kappa,
                   k - out.z - k * out.kappa / out.gamma};
  out.n = n;
  out.k = k;
  out.delta = ridge;

  // Certify both equations; the floor 5e-13 covers the double-precision
  // conditioning of the steep near-ridgeless corner.
  const double tol_eff = std::max(opts.tol, 5e-13);
  if (std::abs(out.residuals[0]) > 10.0 * tol_eff * std::max(n, out.delta_over_kappa) ||
      std::abs(out.residuals[1]) >
          10.0 * tol_eff * std::max(k, k * out.kappa / out.gamma)) {
    throw SolverFailure("solve_rf_constants: residuals above tolerance at bracket exit");
  }
  return out;
}

ImplicitConstants solve_ridgeless(const TaskEigenstructure& ts, double n, double k,
                                  const SolverOptions& opts) {
  ts.validate();
  check_finite_positive(n, "n");
  check_finite_positive(k, "k");
  if (n == k) {
    throw SingularThreshold("solve_ridgeless: n == k is the interpolation threshold");
  }
  double constraint = std::min(n, k);
  if (!effective_rank_exceeds(ts, constraint)) {
    throw NoSolution("solve_ridgeless: task rank must exceed min(n, k)");
  }
  auto g_res = [&](double gamma) { return sum_learnability(ts, gamma) - constraint; };
  double g0 = std::max(top_eigen_scale(ts) / constraint, 1e-12 * top_eigen_scale(ts));
  auto [lo, hi] = expand_bracket_decreasing(g_res, g0, "ridgeless gamma");
  double gamma = bisect_log_decreasing(g_res, lo, hi, constraint, opts.tol, opts.max_iter);
  if (std::abs(g_res(gamma)) > 10.0 * opts.tol * constraint) {
    throw SolverFailure("solve_ridgeless: residual above tolerance at bracket exit");
  }

  ImplicitConstants out;
  out.gamma = gamma;
  out.z = sum_learnability(ts, gamma);
  out.q = sum_learnability_sq(ts, gamma);
  out.n = n;
  out.k = k;
  out.delta = 0.0;
  if (n < k) {
    out.kappa = (k - n) / k * gamma;
    out.delta_over_kappa = 0.0;
    out.residuals = {n - out.z, k - out.z - k * out.kappa / gamma};
  } else {
    out.kappa = 0.0;
    out.kappa_is_zero = true;
    out.delta_over_kappa = n - k;  // limit of delta/kappa as delta -> 0+
    out.residuals = {n - out.z - out.delta_over_kappa, k - out.z};
  }
  return out;
}

}  // namespace eigenrisk
