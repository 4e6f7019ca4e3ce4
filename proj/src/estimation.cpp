#include "eigenrisk/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "eigenrisk/errors.hpp"
#include "eigenrisk/rng.hpp"

namespace eigenrisk {

void KernelDataset::validate() const {
  if (K.rows() != K.cols()) throw InvalidArgument("kernel matrix must be square");
  if (Y.rows() != K.rows()) throw InvalidArgument("labels must have one row per sample");
  double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
  double asym = (K - K.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 * scale) {
    throw InvalidArgument("kernel matrix is not symmetric within 1e-8");
  }
}

KappaProxyResult kappa_proxy_detail(const Eigen::MatrixXd& k_sub) {
  if (k_sub.rows() != k_sub.cols() || k_sub.rows() == 0) {
    throw InvalidArgument("kappa_proxy: square nonempty matrix required");
  }
  const auto n = k_sub.rows();
  auto trace_inverse = [&](const Eigen::MatrixXd& a, double* out) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success) return false;
    double dmax = ldlt.vectorD().cwiseAbs().maxCoeff();
    if (!(ldlt.vectorD().minCoeff() > 1e-14 * dmax)) return false;
    *out = ldlt.solve(Eigen::MatrixXd::Identity(n, n)).trace();
    return true;
  };
  KappaProxyResult out;
  double tr_inv = 0.0;
  if (trace_inverse(k_sub, &tr_inv) && tr_inv > 0.0) {
    out.value = 1.0 / tr_inv;
    return out;
  }
  Eigen::MatrixXd stabilized = k_sub;
  stabilized.diagonal().array() += 1e-12 * k_sub.trace() / static_cast<double>(n);
  out.stabilized = true;
  if (trace_inverse(stabilized, &tr_inv) && tr_inv > 0.0) {
    out.value = 1.0 / tr_inv;
    return out;
  }
  throw SingularMatrix("kappa_proxy: matrix singular even after ridge stabilization");
}

double kappa_proxy(const Eigen::MatrixXd& k_sub) { return kappa_proxy_detail(k_sub).value; }

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
};

LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys,
                 std::size_t lo, std::size_t hi, bool least_absolute) {
  const auto count = static_cast<double>(hi - lo);
  LineFit f;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  double det = count * sxx - sx * sx;
  if (det == 0.0) throw InvalidArgument("fit window has no spread in x");
  f.slope = (count * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / count;
  if (least_absolute) {
    // Iteratively reweighted least squares toward the L1 fit.
    for (int it = 0; it < 30; ++it) {
      double wsx = 0.0, wsy = 0.0, wsxx = 0.0, wsxy = 0.0, wsum = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        double r = std::abs(ys[i] - f.slope * xs[i] - f.intercept);
        double w = 1.0 / std::max(r, 1e-8);
        wsum += w;
        wsx += w * xs[i];
        wsy += w * ys[i];
        wsxx += w * xs[i] * xs[i];
        wsxy += w * xs[i] * ys[i];
      }
      double wdet = wsum * wsxx - wsx * wsx;
      if (wdet == 0.0) break;
      f.slope = (wsum * wsxy - wsx * wsy) / wdet;
      f.intercept = (wsy - f.slope * wsx) / wsum;
    }
  }
  double rss = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    double r = ys[i] - f.slope * xs[i] - f.intercept;
    rss += r * r;
  }
  f.residual = std::sqrt(rss / count);
  return f;
}

std::pair<std::size_t, std::size_t> fit_window(std::size_t len, const FitOptions& opts) {
  auto lo = static_cast<std::size_t>(std::floor(opts.window_lo * static_cast<double>(len)));
  auto hi = static_cast<std::size_t>(std::ceil(opts.window_hi * static_cast<double>(len)));
  hi = std::min(hi, len);
  if (hi - lo < 3) throw InvalidArgument("fit window has fewer than 3 points");
  return {lo, hi};
}

std::vector<Eigen::Index> sample_indices(std::int64_t pool, std::int64_t count,
                                         Xoshiro256& rng) {
  // Partial Fisher-Yates without replacement.
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(pool));
  std::iota(idx.begin(), idx.end(), 0);
  for (std::int64_t i = 0; i < count; ++i) {
    auto j = static_cast<std::int64_t>(rng.next() % static_cast<std::uint64_t>(pool - i));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(i + j)]);
  }
  idx.resize(static_cast<std::size_t>(count));
  return idx;
}

Eigen::MatrixXd principal_submatrix(const Eigen::MatrixXd& k,
                                    const std::vector<Eigen::Index>& idx) {
  return k(idx, idx);
}

void check_sizes(const std::vector<std::int64_t>& sizes, std::int64_t n) {
  if (sizes.size() < 3) throw InvalidArgument("need at least 3 grid sizes");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 2 || sizes[i] > n) throw InvalidArgument("grid size out of range");
    if (i > 0 && sizes[i] <= sizes[i - 1]) {
      throw InvalidArgument("grid sizes must be strictly increasing");
    }
  }
}

}  // namespace

ExponentFit fit_powerlaw_exponent(const std::vector<double>& xs,
                                  const std::vector<double>& ys, const FitOptions& opts) {
  if (xs.size() != ys.size()) throw InvalidArgument("fit: mismatched point lists");
  ExponentFit fit;
  fit.xs.reserve(xs.size());
  fit.ys.reserve(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) continue;  // log-log plot drops nonpositives
    fit.xs.push_back(std::log(xs[i]));
    fit.ys.push_back(std::log(ys[i]));
  }
  auto [lo, hi] = fit_window(fit.xs.size(), opts);
  fit.fit_begin = lo;
  fit.fit_end = hi;
  LineFit line = fit_line(fit.xs, fit.ys, lo, hi, opts.least_absolute);
  fit.slope = line.slope;
  fit.residual = line.residual;
  fit.exponent = -line.slope;
  return fit;
}

ExponentFit measure_alpha(const KernelDataset& ds, const std::vector<std::int64_t>& sizes,
                          std::uint64_t subsample_seed, const FitOptions& opts) {
  ds.validate();
  check_sizes(sizes, ds.samples());
  std::vector<double> xs, ys;
  for (std::size_t si = 0; si < sizes.size(); ++si) {
    double log_acc = 0.0;
    for (int rep = 0; rep < opts.reps; ++rep) {
      Xoshiro256 rng(derive_seed(subsample_seed, si, static_cast<std::uint64_t>(rep)));
      auto idx = sample_indices(ds.samples(), sizes[si], rng);
      log_acc += std::log(kappa_proxy(principal_submatrix(ds.K, idx)));
    }
    xs.push_back(static_cast<double>(sizes[si]));
    ys.push_back(std::exp(log_acc / opts.reps));
  }
  ExponentFit fit = fit_powerlaw_exponent(xs, ys, opts);
  if (fit.exponent <= 1.02) {
    fit.warning = "estimated decay exponent at or below the admissible boundary (alpha ~ 1)";
  }
  return fit;
}

ExponentFit measure_beta(const KernelDataset& ds, const std::vector<std::int64_t>& sizes,
                         std::uint64_t subsample_seed, const FitOptions& opts) {
  ds.validate();
  check_sizes(sizes, ds.samples());
  const std::int64_t pool = sizes.back();
  const std::int64_t held = ds.samples() - pool;
  if (held < 1) {
    throw InvalidArgument("measure_beta: largest training size leaves no held-out block");
  }
  std::vector<Eigen::Index> hold(static_cast<std::size_t>(held));
  std::iota(hold.begin(), hold.end(), static_cast<Eigen::Index>(pool));

  std::vector<double> xs, ys;
  for (std::size_t si = 0; si < sizes.size(); ++si) {
    double log_acc = 0.0;
    for (int rep = 0; rep < opts.reps; ++rep) {
      Xoshiro256 rng(derive_seed(subsample_seed, si, static_cast<std::uint64_t>(rep), 1));
      auto train = sample_indices(pool, sizes[si], rng);
      Eigen::MatrixXd ktt = ds.K(train, train);
      Eigen::MatrixXd kht = ds.K(hold, train);
      Eigen::MatrixXd yt = ds.Y(train, Eigen::all);
      // Ridgeless solve; stabilize like kappa_proxy if needed.
      Eigen::LDLT<Eigen::MatrixXd> ldlt(ktt);
      double dmax = ldlt.vectorD().cwiseAbs().maxCoeff();
      if (!(ldlt.vectorD().minCoeff() > 1e-14 * dmax)) {
        ktt.diagonal().array() += 1e-12 * ktt.trace() / static_cast<double>(ktt.rows());
        ldlt.compute(ktt);
      }
      Eigen::MatrixXd pred = kht * ldlt.solve(yt);
      double mse = (pred - ds.Y(hold, Eigen::all)).squaredNorm() / static_cast<double>(held);
      log_acc += std::log(std::max(mse, 1e-300));
    }
    xs.push_back(static_cast<double>(sizes[si]));
    ys.push_back(std::exp(log_acc / opts.reps));
  }
  ExponentFit fit = fit_powerlaw_exponent(xs, ys, opts);
  fit.exponent = 1.0 - fit.slope;
  if (std::abs(fit.slope) < 0.05) {
    fit.warning = "held-out risk shows no powerlaw decay (noise floor?)";
  }
  return fit;
}

DirectEigenstructure direct_eigenstructure(const KernelDataset& ds) {
  ds.validate();
  const auto n = ds.samples();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ds.K);
  if (es.info() != Eigen::Success) {
    throw SingularMatrix("direct_eigenstructure: eigendecomposition failed");
  }
  DirectEigenstructure out;
  out.eigenvalues.resize(n);
  out.coeffs_sq.resize(n, ds.targets());
  // Eigen returns ascending order; report descending. With Phi = sqrt(N) U the
  // convention Phi Phi^T = N I holds and v-hat = Phi^T y / N = U^T y / sqrt(N).
  for (Eigen::Index i = 0; i < n; ++i) {
    out.eigenvalues[i] = es.eigenvalues()[n - 1 - i] / static_cast<double>(n);
  }
  Eigen::MatrixXd proj = es.eigenvectors().transpose() * ds.Y /
                         std::sqrt(static_cast<double>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    out.coeffs_sq.row(i) = proj.row(n - 1 - i).array().square();
  }
  out.coeff_tailsums.resize(n, ds.targets());
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(ds.targets());
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    acc += out.coeffs_sq.row(i);
    out.coeff_tailsums.row(i) = acc;
  }
  return out;
}

void write_kernel_file(const std::string& path, const KernelDataset& ds) {
  ds.validate();
  nlohmann::json header{{"name", ds.name},
                        {"N", ds.samples()},
                        {"C", ds.targets()},
                        {"dtype", "f64"},
                        {"layout", "row-major"}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open kernel file for writing: " + path);
  out << header.dump() << "\n";
  // Eigen stores column-major; emit row-major as declared.
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor k = ds.K;
  RowMajor y = ds.Y;
  out.write(reinterpret_cast<const char*>(k.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(k.size())));
  out.write(reinterpret_cast<const char*>(y.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(y.size())));
  if (!out) throw Error("short write to kernel file: " + path);
}

KernelDataset read_kernel_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open kernel file: " + path);
  std::string header_line;
  if (!std::getline(in, header_line)) throw InvalidArgument("kernel file missing header");
  nlohmann::json header = nlohmann::json::parse(header_line, nullptr, false);
  if (header.is_discarded()) throw InvalidArgument("kernel file header is not valid JSON");
  if (header.value("dtype", "") != std::string("f64") ||
      header.value("layout", "") != std::string("row-major")) {
    throw InvalidArgument("kernel file must be dtype f64, row-major");
  }
  const std::int64_t n = header.at("N").get<std::int64_t>();
  const std::int64_t c = header.at("C").get<std::int64_t>();
  if (n < 1 || c < 1) throw InvalidArgument("kernel file header has invalid shape");
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor k(n, n), y(n, c);
  in.read(reinterpret_cast<char*>(k.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(k.size())));
  in.read(reinterpret_cast<char*>(y.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(y.size())));
  if (!in) throw InvalidArgument("kernel file truncated");
  KernelDataset ds;
  ds.K = k;
  ds.Y = y;
  ds.name = header.value("name", "");
  ds.validate();
  return ds;
}

KernelDataset read_kernel_csv(const std::string& path, std::int64_t targets) {
  if (targets < 1) throw InvalidArgument("read_kernel_csv: targets must be >= 1");
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open kernel csv: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<std::int64_t>(rows.size());
  if (n == 0) throw InvalidArgument("kernel csv is empty");
  KernelDataset ds;
  ds.K.resize(n, n);
  ds.Y.resize(n, targets);
  for (std::int64_t i = 0; i < n; ++i) {
    if (static_cast<std::int64_t>(rows[static_cast<std::size_t>(i)].size()) != n + targets) {
      throw InvalidArgument("kernel csv: each row needs N kernel + C label columns");
    }
    for (std::int64_t j = 0; j < n; ++j) {
      ds.K(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    for (std::int64_t t = 0; t < targets; ++t) {
      ds.Y(i, t) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(n + t)];
    }
  }
  ds.name = path;
  ds.validate();
  return ds;
}

}  // namespace eigenrisk
