#include "eigenrisk/powerlaw.hpp"

#include <cmath>

#include "eigenrisk/errors.hpp"

namespace eigenrisk {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

void check_exponents(double alpha, double beta) {
  if (!(alpha > 1.0)) throw InvalidArgument("alpha must exceed 1");
  if (!(beta > 1.0 && beta < 2.0 * alpha + 1.0)) {
    throw InvalidArgument("beta must lie in (1, 2*alpha + 1)");
  }
}

}  // namespace

double singular_fraction(double alpha, double beta) {
  const double eps = beta - (alpha + 1.0);
  if (std::abs(eps) < 1e-6) {
    // (alpha-beta+1)/sin(pi(beta-1)/alpha) = (alpha/pi) * x/sin(x), x = pi*eps/alpha.
    const double x = kPi * eps / alpha;
    return (alpha / kPi) * (1.0 + x * x / 6.0 + 7.0 * x * x * x * x / 360.0);
  }
  return (alpha - beta + 1.0) / std::sin(kPi * (beta - 1.0) / alpha);
}

ContinuumSums continuum_sums(double alpha, double kappa, std::optional<double> beta) {
  if (!(alpha > 1.0)) throw InvalidArgument("alpha must exceed 1");
  if (!(kappa > 0.0)) throw InvalidArgument("kappa must be positive");
  const double sin_a = std::sin(kPi / alpha);
  const double kpow = std::pow(kappa, -1.0 / alpha);
  ContinuumSums out;
  out.learnability = kPi / (alpha * sin_a) * kpow;
  out.learnability_sq = kPi * (alpha - 1.0) / (alpha * alpha * sin_a) * kpow;
  if (beta) {
    check_exponents(alpha, *beta);
    out.unlearned_sq_v2 = kPi * singular_fraction(alpha, *beta) / (alpha * alpha) *
                          std::pow(kappa, (*beta - 1.0) / alpha);
  }
  return out;
}

double null_kappa(double alpha, double n) {
  if (!(alpha > 1.0)) throw InvalidArgument("alpha must exceed 1");
  if (!(n >= 1.0)) throw InvalidArgument("n must be >= 1");
  return std::pow(kPi / (alpha * std::sin(kPi / alpha)), alpha) * std::pow(n, -alpha);
}

double null_risk(const PowerlawTask& task, double n) {
  task.validate();
  const double a = task.alpha, b = task.beta;
  const double pref = std::pow(kPi, b) * singular_fraction(a, b) /
                      (std::pow(a, b) * std::pow(std::sin(kPi / a), b - 1.0));
  return pref * std::pow(n, -(b - 1.0));
}

double scaled_noise(const PowerlawTask& task, double n) {
  return task.s_rel_sq * null_risk(task, n);
}

double risk_of_ratio(const PowerlawTask& task, double n, double ratio,
                     double prefactor_scale) {
  task.validate();
  if (!(ratio >= 0.0 && ratio < 1.0)) {
    throw InvalidArgument("risk_of_ratio: ratio must lie in [0, 1)");
  }
  const double a = task.alpha, b = task.beta;
  const double r = std::sqrt(ratio);
  const double shape = (a * task.s_rel_sq + std::pow(1.0 - r, -(b - 1.0))) /
                       (1.0 + (a - 1.0) * r);
  const double pref = std::pow(kPi, b) * singular_fraction(a, b) /
                      (std::pow(a, b) * std::pow(std::sin(kPi / a), b - 1.0));
  return prefactor_scale * pref * shape * std::pow(n, -(b - 1.0));
}

double kappa_of_ratio(double alpha, double n, double ratio) {
  if (!(ratio >= 0.0 && ratio < 1.0)) {
    throw InvalidArgument("kappa_of_ratio: ratio must lie in [0, 1)");
  }
  return null_kappa(alpha, n) * std::pow(1.0 - std::sqrt(ratio), -alpha);
}

double ratio_of_kappa(double alpha, double n, double kappa) {
  if (!(kappa > 0.0)) throw InvalidArgument("ratio_of_kappa: kappa must be positive");
  const double root = 1.0 - std::pow(null_kappa(alpha, n) / kappa, 1.0 / alpha);
  if (root <= 0.0) return 0.0;
  return root * root;
}

double error_exponent(double alpha, double beta) {
  return std::min(1.0, 2.0 * alpha + 1.0 - beta);
}

OptimalRatioResult optimal_ratio(const PowerlawTask& task) {
  task.validate();
  const double a = task.alpha, b = task.beta, s2 = task.s_rel_sq;
  auto f = [&](double r) {
    return a - b - (a - 1.0) * b * r + a * (a - 1.0) * std::pow(1.0 - r, b) * s2;
  };

  OptimalRatioResult out;
  out.error_exponent = error_exponent(a, b);
  if (f(0.0) <= 0.0) {
    out.branch = OptimalRatioBranch::boundary_zero;
    return out;
  }
  // f is strictly decreasing and f(1-) = alpha(1-beta) < 0, so a root exists.
  double lo = 0.0, hi = 1.0 - 1e-15;
  double flo = f(lo), fhi = f(hi);
  if (!(flo > 0.0 && fhi < 0.0)) {
    throw SolverFailure("optimal_ratio: bracket does not straddle the root");
  }
  double prev = flo;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if (fm > prev + 1e-12) {
      throw SolverFailure("optimal_ratio: optimality function is not decreasing");
    }
    if (fm > 0.0) {
      lo = mid;
      prev = fm;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-15) break;
  }
  out.r_star = 0.5 * (lo + hi);
  out.ratio_star = out.r_star * out.r_star;
  out.branch = OptimalRatioBranch::interior_root;
  return out;
}

double interpolation_threshold(double alpha, double beta) {
  check_exponents(alpha, beta);
  return (beta - alpha) / (alpha * (alpha - 1.0));
}

double suboptimality_bound(const PowerlawTask& task, double ratio, double ratio_star) {
  if (!(ratio >= 0.0 && ratio < 1.0) || !(ratio_star >= 0.0 && ratio_star < 1.0)) {
    throw InvalidArgument("suboptimality_bound: ratios must lie in [0, 1)");
  }
  const double a = task.alpha;
  const double d = std::sqrt(ratio) - std::sqrt(ratio_star);
  return 1.0 + (a - 1.0) * (a - 1.0) / (2.0 * a * a) * d * d;
}

RatioCurve make_ratio_curve(const PowerlawTask& task, double n, int points,
                            double r_max, double prefactor_scale) {
  task.validate();
  if (points < 2) throw InvalidArgument("make_ratio_curve: need at least 2 points");
  const double cap = std::min(r_max, 0.99);
  if (!(cap > 0.0)) throw InvalidArgument("make_ratio_curve: r_max must be positive");
  RatioCurve curve;
  curve.task = task;
  curve.n = n;
  curve.prefactor_scale = prefactor_scale;
  curve.ratio.reserve(static_cast<std::size_t>(points));
  curve.e_test.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    double ratio = cap * i / (points - 1);
    curve.ratio.push_back(ratio);
    curve.e_test.push_back(risk_of_ratio(task, n, ratio, prefactor_scale));
  }
  return curve;
}

}  // namespace eigenrisk
