#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace eigenrisk {

struct KernelDataset {
  Eigen::MatrixXd K;  // N x N, symmetric PSD
  Eigen::MatrixXd Y;  // N x C, one column per target
  std::string name;

  std::int64_t samples() const { return K.rows(); }
  std::int64_t targets() const { return Y.cols(); }
  void validate() const;  // symmetry within 1e-8, shape agreement
};

// 1 / Tr[K^-1]; the measurable proxy for the effective regularization at
// sample count N. A numerically singular input is ridge-stabilized with
// 1e-12 * trace/N once; still singular after that throws.
double kappa_proxy(const Eigen::MatrixXd& k_sub);
struct KappaProxyResult {
  double value = 0.0;
  bool stabilized = false;
};
KappaProxyResult kappa_proxy_detail(const Eigen::MatrixXd& k_sub);

struct FitOptions {
  int reps = 5;                 // principal submatrices per size, averaged in log space
  double window_lo = 0.1;       // fit window as fractions of the point list
  double window_hi = 0.8;
  bool least_absolute = false;  // robust LAD fit instead of least squares
};

struct ExponentFit {
  double exponent = 0.0;
  std::size_t fit_begin = 0;  // [fit_begin, fit_end) indices into xs/ys
  std::size_t fit_end = 0;
  std::vector<double> xs;  // log-log points backing the fit
  std::vector<double> ys;
  double slope = 0.0;
  double residual = 0.0;  // rms residual of the linear fit over the window
  std::optional<std::string> warning;
};

// Slope of log(eigenvalue-like ys) against log(xs) over the window; generic
// helper shared by the proxy and direct methods.
ExponentFit fit_powerlaw_exponent(const std::vector<double>& xs,
                                  const std::vector<double>& ys,
                                  const FitOptions& opts = {});

// alpha-hat from the decay of the trace-inverse proxy over random principal
// submatrices: exponent = -slope of log kappa_proxy vs log n.
ExponentFit measure_alpha(const KernelDataset& ds, const std::vector<std::int64_t>& sizes,
                          std::uint64_t subsample_seed, const FitOptions& opts = {});

// beta-hat from the decay of held-out risk of ridgeless KRR: beta = 1 - slope.
// Training subsets are drawn from the samples before the held-out block
// [max(sizes), N).
ExponentFit measure_beta(const KernelDataset& ds, const std::vector<std::int64_t>& sizes,
                         std::uint64_t subsample_seed, const FitOptions& opts = {});

struct DirectEigenstructure {
  Eigen::VectorXd eigenvalues;     // eig(K)/N, descending
  Eigen::MatrixXd coeffs_sq;       // N x C, per eigenvector squared coefficient
  Eigen::MatrixXd coeff_tailsums;  // N x C, sum_{j >= i} coeffs_sq(j, c)
};

// Dense diagonalization route (O(N^3)), kept for comparison against the proxy
// measurements; finite-sample bias makes its exponent fits less accurate.
DirectEigenstructure direct_eigenstructure(const KernelDataset& ds);

// --- kernel matrix files ------------------------------------------------------
// One JSON header line {"name","N","C","dtype":"f64","layout":"row-major"}
// followed by raw little-endian float64: K (N*N) then Y (N*C).
void write_kernel_file(const std::string& path, const KernelDataset& ds);
KernelDataset read_kernel_file(const std::string& path);
// CSV ingestion for small matrices: N rows of N kernel columns followed by C
// label columns.
KernelDataset read_kernel_csv(const std::string& path, std::int64_t targets);

}  // namespace eigenrisk
