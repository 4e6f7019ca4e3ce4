#include "eigenrisk/spectrum.hpp"

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>

#include "eigenrisk/errors.hpp"

namespace eigenrisk {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

// 48-point Gauss-Legendre nodes/weights on [-1,1], computed once by Newton
// iteration on the Legendre recurrence.
struct GaussLegendre {
  std::array<double, 48> x{};
  std::array<double, 48> w{};
  GaussLegendre() {
    const int n = 48;
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < n; ++j) {
          double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
        }
        pp = n * (z * p0 - p1) / (z * z - 1.0);
        double dz = p0 / pp;
        z -= dz;
        if (std::abs(dz) < 1e-15) break;
      }
      x[static_cast<std::size_t>(i)] = -z;
      x[static_cast<std::size_t>(n - 1 - i)] = z;
      w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * pp * pp);
      w[static_cast<std::size_t>(n - 1 - i)] = w[static_cast<std::size_t>(i)];
    }
  }
};

const GaussLegendre& gl48() {
  static const GaussLegendre g;
  return g;
}

double binom_neg_j(int j, int s) {
  // Coefficient of t^s in (1+t)^-j for j in {1,2}.
  return (s % 2 == 0 ? 1.0 : -1.0) * (j == 2 ? s + 1.0 : 1.0);
}

// F_j(c, x) = int_x^inf s^(c-1) (1+s)^-j ds, j in {1,2}, c < j.
// Used with c = (1-p)/alpha, so c in (-2, 1).
double resolvent_integral_F(int j, double c, double x) {
  if (x >= 2.0) {
    double sum = 0.0;
    double lx = std::log(x);
    for (int s = 0; s < 200; ++s) {
      double term = binom_neg_j(j, s) * std::exp((c - j - s) * lx) / (j + s - c);
      sum += term;
      if (std::abs(term) < 1e-18 * (std::abs(sum) + 1e-300)) break;
    }
    return sum;
  }
  if (x >= 0.5 || c <= 0.0) {
    // Quadrature over [x, 2] plus the series tail from 2.
    const auto& g = gl48();
    double mid = 0.0;
    double h1 = (2.0 - x) / 2.0, h2 = (2.0 + x) / 2.0;
    for (int i = 0; i < 48; ++i) {
      double s = h1 * g.x[static_cast<std::size_t>(i)] + h2;
      mid += g.w[static_cast<std::size_t>(i)] * std::exp((c - 1.0) * std::log(s)) /
             std::pow(1.0 + s, j);
    }
    return h1 * mid + resolvent_integral_F(j, c, 2.0);
  }
  // x < 0.5 with c > 0: complement of the full integral.
  double full = (j == 1) ? kPi / std::sin(kPi * c) : (1.0 - c) * kPi / std::sin(kPi * c);
  double head = 0.0;
  double lx = std::log(x);
  for (int s = 0; s < 200; ++s) {
    double term = binom_neg_j(j, s) * std::exp((c + s) * lx) / (c + s);
    head += term;
    if (std::abs(term) < 1e-18 * (std::abs(head) + 1e-300)) break;
  }
  return full - head;
}

// h(t) = t^-p (1 + gamma t^alpha)^-j and the Euler-Maclaurin derivative terms.
struct TailSummand {
  int j;
  double p, alpha, gamma;

  double value(double t) const {
    double u = gamma * std::pow(t, alpha);
    return std::exp(-p * std::log(t) - j * std::log1p(u));
  }

  // f(a)/2 - f'(a)/12 + f'''(a)/720 at t = a.
  double em_correction(double a) const {
    double u = gamma * std::pow(a, alpha);
    double h = std::exp(-p * std::log(a) - j * std::log1p(u));
    double w = u / (1.0 + u);
    double phi = p + j * alpha * w;
    double P = j * alpha * alpha * w * (1.0 - w);
    double B = phi * phi + phi - P;
    double hp = -h * phi / a;
    double hppp = h * (P * ((2.0 * phi + 1.0) - alpha * (1.0 - 2.0 * w)) - (phi + 2.0) * B) /
                  (a * a * a);
    return 0.5 * h - hp / 12.0 + hppp / 720.0;
  }
};

// int_a^inf t^-p (1 + gamma t^alpha)^-j dt, exact up to quadrature error.
double resolvent_integral(int j, double p, double alpha, double gamma, double a) {
  const double c = (1.0 - p) / alpha;
  const double xa = gamma * std::pow(a, alpha);
  const double pref = std::exp(((p - 1.0) / alpha) * std::log(gamma)) / alpha;
  if (c > 0.0 || xa >= 0.5) {
    return pref * resolvent_integral_F(j, c, xa);
  }
  // c <= 0 with gamma a^alpha small: series on [a, t1] where gamma t1^alpha = 1/2,
  // keeping gamma^s factored into (gamma t^alpha)^s so nothing overflows.
  const double x1 = 0.5;
  const double t1 = std::pow(x1 / gamma, 1.0 / alpha);
  const double L = std::log(t1 / a);
  double series = 0.0;
  for (int s = 0; s < 220; ++s) {
    double hexp = alpha * s - p + 1.0;
    double term;
    if (std::abs(hexp) > 1e-6) {
      term = (std::exp((1.0 - p) * std::log(t1) + s * std::log(x1)) -
              std::exp((1.0 - p) * std::log(a) + s * std::log(xa))) /
             hexp;
    } else {
      term = std::exp((1.0 - p) * std::log(a) + s * std::log(xa)) *
             (hexp == 0.0 ? L : std::expm1(hexp * L) / hexp);
    }
    term *= binom_neg_j(j, s);
    series += term;
    if (std::abs(term) < 1e-18 * (std::abs(series) + 1e-300)) break;
  }
  return series + pref * resolvent_integral_F(j, c, x1);
}

}  // namespace

TailSum powerlaw_tail_sum(double p, double from) {
  if (!(p > 1.0)) throw DivergentSum("powerlaw tail sum requires exponent > 1");
  if (!(from >= 1.0)) throw InvalidArgument("tail start index must be >= 1");
  double a = std::max(from, std::ceil(32.0 * (p + 2.0)));
  double explicit_part = 0.0;
  for (double i = from; i < a; i += 1.0) explicit_part += std::pow(i, -p);
  double integral = std::pow(a, 1.0 - p) / (p - 1.0);
  double fa = std::pow(a, -p);
  double em = 0.5 * fa + p * std::pow(a, -p - 1.0) / 12.0 -
              p * (p + 1.0) * (p + 2.0) * std::pow(a, -p - 3.0) / 720.0;
  return {explicit_part + integral + em, 0.5 * std::pow(from, -p)};
}

double resolvent_tail_sum(int j, double p, double alpha, double gamma, double from) {
  if (j < 0 || j > 2) throw InvalidArgument("resolvent tail: j must be 0, 1, or 2");
  if (!(alpha > 1.0)) throw InvalidArgument("resolvent tail: alpha must exceed 1");
  if (!(gamma >= 0.0)) throw InvalidArgument("resolvent tail: gamma must be >= 0");
  if (!(from >= 1.0)) throw InvalidArgument("resolvent tail: start index must be >= 1");
  if (p != 0.0 && !(p > 1.0)) {
    throw InvalidArgument("resolvent tail: p must be 0 or > 1");
  }
  if (j == 0 || gamma == 0.0) {
    if (p == 0.0) throw DivergentSum("resolvent tail diverges: no decay in summand");
    return powerlaw_tail_sum(p, from).value;
  }
  TailSummand f{j, p, alpha, gamma};
  double a = std::max(from, std::ceil(64.0 * (p + j * alpha + 2.0)));
  double explicit_part = 0.0;
  for (double i = from; i < a; i += 1.0) explicit_part += f.value(i);
  return explicit_part + resolvent_integral(j, p, alpha, gamma, a) + f.em_correction(a);
}

void TaskEigenstructure::validate() const {
  if (eigenvalues.size() != coeffs_sq.size()) {
    throw InvalidArgument("eigenvalues and coeffs_sq must have equal length");
  }
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    if (!(eigenvalues[i] >= 0.0) || !std::isfinite(eigenvalues[i])) {
      throw InvalidArgument("eigenvalues must be finite and >= 0");
    }
    if (!(coeffs_sq[i] >= 0.0) || !std::isfinite(coeffs_sq[i])) {
      throw InvalidArgument("coeffs_sq must be finite and >= 0");
    }
    if (i > 0 && eigenvalues[i] > eigenvalues[i - 1]) {
      throw InvalidArgument("eigenvalues must be non-increasing");
    }
  }
  if (!(noise_var >= 0.0)) throw InvalidArgument("noise_var must be >= 0");
  if (!(scale >= 0.0)) throw InvalidArgument("scale must be >= 0");
  if (tail) {
    if (!(tail->alpha > 1.0)) {
      throw InvalidArgument("tail eigenvalue exponent must exceed 1");
    }
    if (tail->start != static_cast<std::int64_t>(eigenvalues.size()) + 1) {
      throw InvalidArgument("tail must start at the first truncated index M+1");
    }
  }
}

void PowerlawTask::validate() const {
  if (!(alpha > 1.0)) throw InvalidArgument("powerlaw task: alpha must exceed 1");
  if (!(beta > 1.0 && beta < 2.0 * alpha + 1.0)) {
    throw InvalidArgument("powerlaw task: beta must lie in (1, 2*alpha + 1)");
  }
  if (i0 < 1) throw InvalidArgument("powerlaw task: i0 must be >= 1");
  if (static_cast<std::int64_t>(head_overrides.size()) != i0 - 1) {
    throw InvalidArgument("powerlaw task: head_overrides must have length i0 - 1");
  }
  if (!(s_rel_sq >= 0.0)) throw InvalidArgument("powerlaw task: s_rel_sq must be >= 0");
}

TaskEigenstructure make_powerlaw_structure(const PowerlawTask& task, std::int64_t modes) {
  task.validate();
  if (modes < task.i0) {
    throw InvalidArgument("make_powerlaw_structure: modes must be >= i0");
  }
  TaskEigenstructure ts;
  ts.eigenvalues.resize(static_cast<std::size_t>(modes));
  ts.coeffs_sq.resize(static_cast<std::size_t>(modes));
  for (std::int64_t i = 1; i <= modes; ++i) {
    auto idx = static_cast<std::size_t>(i - 1);
    if (i < task.i0) {
      ts.eigenvalues[idx] = task.head_overrides[idx].first;
      ts.coeffs_sq[idx] = task.head_overrides[idx].second;
    } else {
      double di = static_cast<double>(i);
      ts.eigenvalues[idx] = std::pow(di, -task.alpha);
      ts.coeffs_sq[idx] = std::pow(di, -task.beta);
    }
  }
  ts.noise_var = 0.0;
  ts.tail = PowerlawTail{task.alpha, task.beta, modes + 1};
  ts.validate();
  return ts;
}

double total_power(const TaskEigenstructure& ts) { return total_power_bounded(ts).value; }

TotalPower total_power_bounded(const TaskEigenstructure& ts) {
  double sum = 0.0;
  for (double v : ts.coeffs_sq) sum += v;
  TotalPower out;
  out.value = ts.scale * sum + ts.noise_var;
  if (ts.tail) {
    if (!(ts.tail->beta > 1.0)) {
      throw DivergentSum("total_power: tail coefficient exponent must exceed 1");
    }
    TailSum t = powerlaw_tail_sum(ts.tail->beta, static_cast<double>(ts.tail->start));
    out.value += ts.scale * t.value;
    out.tail_remainder_bound = ts.scale * t.bound;
  }
  return out;
}

namespace {

using ArrayMap = Eigen::Map<const Eigen::ArrayXd>;

ArrayMap lam_of(const TaskEigenstructure& ts) {
  return ArrayMap(ts.eigenvalues.data(), static_cast<Eigen::Index>(ts.eigenvalues.size()));
}

ArrayMap v2_of(const TaskEigenstructure& ts) {
  return ArrayMap(ts.coeffs_sq.data(), static_cast<Eigen::Index>(ts.coeffs_sq.size()));
}

double tail_start(const TaskEigenstructure& ts) {
  return static_cast<double>(ts.tail->start);
}

}  // namespace

double sum_learnability(const TaskEigenstructure& ts, double gamma) {
  double s = ts.modes() ? (lam_of(ts) / (lam_of(ts) + gamma)).sum() : 0.0;
  if (ts.tail) s += resolvent_tail_sum(1, 0.0, ts.tail->alpha, gamma, tail_start(ts));
  return s;
}

double sum_learnability_sq(const TaskEigenstructure& ts, double gamma) {
  double s = ts.modes() ? (lam_of(ts) / (lam_of(ts) + gamma)).square().sum() : 0.0;
  if (ts.tail) s += resolvent_tail_sum(2, 0.0, ts.tail->alpha, gamma, tail_start(ts));
  return s;
}

double sum_unlearned_v2(const TaskEigenstructure& ts, double gamma) {
  double s = ts.modes() ? (v2_of(ts) * gamma / (lam_of(ts) + gamma)).sum() : 0.0;
  if (ts.tail) {
    const auto& t = *ts.tail;
    double start = tail_start(ts);
    // gamma/(l+g) = 1 - 1/(1 + g i^alpha)
    s += powerlaw_tail_sum(t.beta, start).value -
         resolvent_tail_sum(1, t.beta, t.alpha, gamma, start);
  }
  return ts.scale * s;
}

double sum_unlearned_sq_v2(const TaskEigenstructure& ts, double gamma) {
  double s = ts.modes() ? (v2_of(ts) * (gamma / (lam_of(ts) + gamma)).square()).sum() : 0.0;
  if (ts.tail) {
    const auto& t = *ts.tail;
    double start = tail_start(ts);
    s += powerlaw_tail_sum(t.beta, start).value -
         2.0 * resolvent_tail_sum(1, t.beta, t.alpha, gamma, start) +
         resolvent_tail_sum(2, t.beta, t.alpha, gamma, start);
  }
  return ts.scale * s;
}

double sum_mode_peak_v2(const TaskEigenstructure& ts, double gamma) {
  double s = ts.modes()
                 ? (v2_of(ts) * lam_of(ts) / (lam_of(ts) + gamma).square()).sum()
                 : 0.0;
  if (ts.tail && gamma > 0.0) {
    const auto& t = *ts.tail;
    double start = tail_start(ts);
    // l/(l+g)^2 = (1/g) [1/(1+u) - 1/(1+u)^2], u = g i^alpha
    s += (resolvent_tail_sum(1, t.beta, t.alpha, gamma, start) -
          resolvent_tail_sum(2, t.beta, t.alpha, gamma, start)) /
         gamma;
  } else if (ts.tail && gamma == 0.0) {
    // l/(l+0)^2 = 1/l = i^alpha: divergent against i^-beta unless beta-alpha > 1.
    const auto& t = *ts.tail;
    if (!(t.beta - t.alpha > 1.0)) {
      throw DivergentSum("sum l/(l+g)^2 v^2 diverges at gamma = 0 for this tail");
    }
    s += powerlaw_tail_sum(t.beta - t.alpha, tail_start(ts)).value;
  }
  return ts.scale * s;
}

double sum_lambda_v2(const TaskEigenstructure& ts) {
  double s = ts.modes() ? (v2_of(ts) * lam_of(ts)).sum() : 0.0;
  if (ts.tail) {
    s += powerlaw_tail_sum(ts.tail->alpha + ts.tail->beta, tail_start(ts)).value;
  }
  return ts.scale * s;
}

bool effective_rank_exceeds(const TaskEigenstructure& ts, double n) {
  if (ts.tail) return true;
  std::size_t rank = 0;
  for (double l : ts.eigenvalues) rank += (l > 0.0) ? 1 : 0;
  return static_cast<double>(rank) > n;
}

}  // namespace eigenrisk
