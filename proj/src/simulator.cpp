#include "eigenrisk/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "eigenrisk/errors.hpp"
#include "eigenrisk/parallel.hpp"
#include "eigenrisk/rng.hpp"

namespace eigenrisk {

namespace {

constexpr std::int64_t kFeatureBlock = 1024;  // W rows generated at a time
constexpr std::int64_t kModeBlock = 8192;     // latent modes per streamed chunk

void fill_normal_matrix(Eigen::Ref<Eigen::MatrixXd> m, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  rng.fill_normal(m.data(), static_cast<std::size_t>(m.size()));
}

Eigen::VectorXd coeff_roots(const TaskEigenstructure& ts) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(ts.modes()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = std::sqrt(ts.scale * ts.coeffs_sq[static_cast<std::size_t>(i)]);
  }
  return v;
}

Eigen::VectorXd eigen_roots(const TaskEigenstructure& ts) {
  Eigen::VectorXd l(static_cast<Eigen::Index>(ts.modes()));
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    l[i] = std::sqrt(ts.eigenvalues[static_cast<std::size_t>(i)]);
  }
  return l;
}

// (S + delta I) x = b with S symmetric PSD. A rank-deficient ridgeless system
// is solved in the minimum-norm sense and flagged.
Eigen::VectorXd solve_spd(const Eigen::MatrixXd& S, double delta, const Eigen::VectorXd& b,
                          bool* pseudo_flag) {
  Eigen::MatrixXd A = S;
  A.diagonal().array() += delta;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() == Eigen::Success) {
    double dmax = ldlt.vectorD().cwiseAbs().maxCoeff();
    double dmin = ldlt.vectorD().minCoeff();
    if (dmin > 1e-13 * dmax) {
      return ldlt.solve(b);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  const auto& ev = es.eigenvalues();
  double cutoff = 1e-12 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::VectorXd inv = ev.unaryExpr(
      [cutoff](double x) { return x > cutoff ? 1.0 / x : 0.0; });
  if (pseudo_flag) *pseudo_flag = true;
  return es.eigenvectors() * inv.asDiagonal() * (es.eigenvectors().transpose() * b);
}

// One trial of the RF sweep: dataset fixed, feature rows shared as nested
// prefixes across k. Fills errors[p] for every grid point.
void rf_trial(const TaskEigenstructure& ts, std::int64_t n,
              const std::vector<std::int64_t>& k_grid,
              const std::vector<double>& delta_grid, std::uint64_t trial_seed,
              std::vector<TrialErrors>& errors, bool& pseudo_flag) {
  const auto m = static_cast<Eigen::Index>(ts.modes());
  const Eigen::Index en = static_cast<Eigen::Index>(n);
  const std::int64_t k_max = *std::max_element(k_grid.begin(), k_grid.end());
  const Eigen::Index ek_max = static_cast<Eigen::Index>(k_max);
  const std::size_t points = k_grid.size() * delta_grid.size();
  const double sigma = std::sqrt(ts.noise_var);

  Eigen::VectorXd v = coeff_roots(ts);
  Eigen::VectorXd sl = eigen_roots(ts);

  // Latent data, labels, then rows scaled in place: X becomes Lambda^(1/2) X.
  Eigen::MatrixXd X(m, en);
  fill_normal_matrix(X, derive_seed(trial_seed, 1));
  Eigen::VectorXd y = X.transpose() * v;
  if (sigma > 0.0) {
    Eigen::VectorXd xi(en);
    fill_normal_matrix(xi, derive_seed(trial_seed, 2));
    y += sigma * xi;
  }
  X.array().colwise() *= sl.array();

  // Pass 1 over the feature stream: B = W_tilde * Lambda^(1/2) X.
  Eigen::MatrixXd B(ek_max, en);
  {
    Eigen::MatrixXd wblock;
    for (std::int64_t b0 = 0, blk = 0; b0 < k_max; b0 += kFeatureBlock, ++blk) {
      const Eigen::Index rows = static_cast<Eigen::Index>(std::min(kFeatureBlock, k_max - b0));
      wblock.resize(rows, m);
      fill_normal_matrix(wblock, derive_seed(trial_seed, 3, static_cast<std::uint64_t>(blk)));
      B.middleRows(static_cast<Eigen::Index>(b0), rows).noalias() = wblock * X;
    }
  }

  // Solves per grid point; scaled primal coefficients collect into A_cols so
  // one streamed product recovers every effective coefficient vector.
  Eigen::MatrixXd A_cols = Eigen::MatrixXd::Zero(ek_max, static_cast<Eigen::Index>(points));
  std::vector<double> train(points, 0.0);
  std::size_t p = 0;
  for (std::int64_t k : k_grid) {
    const auto ek = static_cast<Eigen::Index>(k);
    auto Bk = B.topRows(ek);
    const double sk = std::sqrt(static_cast<double>(k));
    if (k >= n) {
      Eigen::MatrixXd khat(en, en);
      khat.setZero();
      khat.selfadjointView<Eigen::Lower>().rankUpdate(Bk.transpose(), 1.0 / static_cast<double>(k));
      khat = khat.selfadjointView<Eigen::Lower>();
      for (double delta : delta_grid) {
        Eigen::VectorXd alpha = solve_spd(khat, delta, y, &pseudo_flag);
        Eigen::VectorXd resid = khat * alpha - y;
        train[p] = resid.squaredNorm() / static_cast<double>(n);
        Eigen::VectorXd a = Bk * alpha / sk;
        A_cols.col(static_cast<Eigen::Index>(p)).head(ek) = a / sk;
        ++p;
      }
    } else {
      Eigen::MatrixXd gram(ek, ek);
      gram.setZero();
      gram.selfadjointView<Eigen::Lower>().rankUpdate(Bk, 1.0 / static_cast<double>(k));
      gram = gram.selfadjointView<Eigen::Lower>();
      Eigen::VectorXd rhs = Bk * y / sk;
      for (double delta : delta_grid) {
        Eigen::VectorXd a = solve_spd(gram, delta, rhs, &pseudo_flag);
        Eigen::VectorXd resid = Bk.transpose() * a / sk - y;
        train[p] = resid.squaredNorm() / static_cast<double>(n);
        A_cols.col(static_cast<Eigen::Index>(p)).head(ek) = a / sk;
        ++p;
      }
    }
  }

  // Pass 2: regenerate the same feature stream and accumulate
  // W_tilde^T * A_cols, giving c_p = Lambda^(1/2) W^T a_p per point.
  Eigen::MatrixXd wta = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(points));
  {
    Eigen::MatrixXd wblock;
    for (std::int64_t b0 = 0, blk = 0; b0 < k_max; b0 += kFeatureBlock, ++blk) {
      const Eigen::Index rows = static_cast<Eigen::Index>(std::min(kFeatureBlock, k_max - b0));
      wblock.resize(rows, m);
      fill_normal_matrix(wblock, derive_seed(trial_seed, 3, static_cast<std::uint64_t>(blk)));
      wta.noalias() += wblock.transpose() * A_cols.middleRows(static_cast<Eigen::Index>(b0), rows);
    }
  }
  for (std::size_t i = 0; i < points; ++i) {
    Eigen::VectorXd c = sl.array() * wta.col(static_cast<Eigen::Index>(i)).array();
    errors[i].train_mse = train[i];
    errors[i].test_mse = (c - v).squaredNorm() + ts.noise_var;
  }
}

void finalize_stats(SimulationResult& r) {
  const auto t = static_cast<double>(r.trials.size());
  double tr = 0.0, te = 0.0;
  for (const auto& e : r.trials) {
    tr += e.train_mse;
    te += e.test_mse;
  }
  r.train_mean = tr / t;
  r.test_mean = te / t;
  if (r.trials.size() > 1) {
    double vtr = 0.0, vte = 0.0;
    for (const auto& e : r.trials) {
      vtr += (e.train_mse - r.train_mean) * (e.train_mse - r.train_mean);
      vte += (e.test_mse - r.test_mean) * (e.test_mse - r.test_mean);
    }
    r.train_stderr = std::sqrt(vtr / (t - 1.0)) / std::sqrt(t);
    r.test_stderr = std::sqrt(vte / (t - 1.0)) / std::sqrt(t);
  }
}

}  // namespace

void SimConfig::validate() const {
  ts.validate();
  if (ts.tail) {
    throw InvalidArgument("simulator: task must be truncated to explicit modes");
  }
  if (ts.modes() == 0) throw InvalidArgument("simulator: task has no modes");
  if (n < 1 || k < 1) throw InvalidArgument("simulator: n and k must be >= 1");
  if (trials < 1) throw InvalidArgument("simulator: trials must be >= 1");
  if (!(ridge >= 0.0)) throw InvalidArgument("simulator: ridge must be >= 0");
}

std::vector<SimulationResult> simulate_rf_sweep(const TaskEigenstructure& ts,
                                                std::int64_t n,
                                                const std::vector<std::int64_t>& k_grid,
                                                const std::vector<double>& delta_grid,
                                                int trials, std::uint64_t seed,
                                                bool fix_dataset_across_k, int threads) {
  if (k_grid.empty() || delta_grid.empty()) {
    throw InvalidArgument("simulate_rf_sweep: empty grid");
  }
  SimConfig probe;
  probe.ts = ts;
  probe.n = n;
  probe.k = *std::max_element(k_grid.begin(), k_grid.end());
  probe.trials = trials;
  probe.seed = seed;
  probe.validate();

  const std::size_t points = k_grid.size() * delta_grid.size();
  std::vector<SimulationResult> out(points);
  {
    std::size_t p = 0;
    for (std::int64_t k : k_grid) {
      for (double delta : delta_grid) {
        out[p].config = probe;
        out[p].config.k = k;
        out[p].config.ridge = delta;
        out[p].config.fix_dataset_across_k = fix_dataset_across_k;
        out[p].trials.resize(static_cast<std::size_t>(trials));
        ++p;
      }
    }
  }

  std::vector<char> pseudo(static_cast<std::size_t>(trials), 0);
  if (fix_dataset_across_k) {
    std::vector<std::vector<TrialErrors>> per_trial(
        static_cast<std::size_t>(trials), std::vector<TrialErrors>(points));
    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
      bool flag = false;
      rf_trial(ts, n, k_grid, delta_grid, derive_seed(seed, t), per_trial[t], flag);
      pseudo[t] = flag ? 1 : 0;
    }, threads);
    for (std::size_t t = 0; t < static_cast<std::size_t>(trials); ++t) {
      for (std::size_t p = 0; p < points; ++p) out[p].trials[t] = per_trial[t][p];
    }
  } else {
    // Independent dataset per (trial, k); the per-point law is unchanged.
    std::vector<std::vector<TrialErrors>> per_trial(
        static_cast<std::size_t>(trials), std::vector<TrialErrors>(points));
    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
      bool flag = false;
      for (std::size_t ki = 0; ki < k_grid.size(); ++ki) {
        std::vector<TrialErrors> sub(delta_grid.size());
        rf_trial(ts, n, {k_grid[ki]}, delta_grid, derive_seed(seed, t, ki + 1), sub, flag);
        for (std::size_t di = 0; di < delta_grid.size(); ++di) {
          per_trial[t][ki * delta_grid.size() + di] = sub[di];
        }
      }
      pseudo[t] = flag ? 1 : 0;
    }, threads);
    for (std::size_t t = 0; t < static_cast<std::size_t>(trials); ++t) {
      for (std::size_t p = 0; p < points; ++p) out[p].trials[t] = per_trial[t][p];
    }
  }

  bool any_pseudo = std::any_of(pseudo.begin(), pseudo.end(), [](char c) { return c != 0; });
  for (auto& r : out) {
    r.pseudo_solution = any_pseudo;
    finalize_stats(r);
  }
  return out;
}

SimulationResult simulate_rf(const SimConfig& config, int threads) {
  config.validate();
  auto results = simulate_rf_sweep(config.ts, config.n, {config.k}, {config.ridge},
                                   config.trials, config.seed,
                                   config.fix_dataset_across_k, threads);
  return results.front();
}

SimulationResult simulate_krr(const TaskEigenstructure& ts, std::int64_t n, double ridge,
                              int trials, std::uint64_t seed, int threads) {
  SimConfig cfg;
  cfg.ts = ts;
  cfg.n = n;
  cfg.k = 1;
  cfg.ridge = ridge;
  cfg.trials = trials;
  cfg.seed = seed;
  cfg.validate();
  cfg.k = 0;  // deterministic-kernel run; no feature count applies

  const auto m = static_cast<Eigen::Index>(ts.modes());
  const auto en = static_cast<Eigen::Index>(n);
  const double sigma = std::sqrt(ts.noise_var);
  Eigen::VectorXd v = coeff_roots(ts);
  Eigen::VectorXd sl = eigen_roots(ts);

  SimulationResult out;
  out.config = cfg;
  out.trials.resize(static_cast<std::size_t>(trials));
  std::vector<char> pseudo(static_cast<std::size_t>(trials), 0);

  parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
    const std::uint64_t trial_seed = derive_seed(seed, t);
    Eigen::MatrixXd kmat = Eigen::MatrixXd::Zero(en, en);
    Eigen::VectorXd y0 = Eigen::VectorXd::Zero(en);
    Eigen::MatrixXd xc;
    // Pass 1: accumulate K = X^T Lambda X and the clean labels.
    for (std::int64_t c0 = 0, blk = 0; c0 < m; c0 += kModeBlock, ++blk) {
      const Eigen::Index rows = static_cast<Eigen::Index>(std::min<std::int64_t>(kModeBlock, m - c0));
      xc.resize(rows, en);
      fill_normal_matrix(xc, derive_seed(trial_seed, 1, static_cast<std::uint64_t>(blk)));
      y0.noalias() += xc.transpose() * v.segment(static_cast<Eigen::Index>(c0), rows);
      xc.array().colwise() *= sl.segment(static_cast<Eigen::Index>(c0), rows).array();
      kmat.selfadjointView<Eigen::Lower>().rankUpdate(xc.transpose(), 1.0);
    }
    kmat = kmat.selfadjointView<Eigen::Lower>();
    Eigen::VectorXd y = y0;
    if (sigma > 0.0) {
      Eigen::VectorXd xi(en);
      fill_normal_matrix(xi, derive_seed(trial_seed, 2));
      y += sigma * xi;
    }
    bool flag = false;
    Eigen::VectorXd alpha = solve_spd(kmat, ridge, y, &flag);
    pseudo[t] = flag ? 1 : 0;
    double train = (kmat * alpha - y).squaredNorm() / static_cast<double>(n);
    // Pass 2: population risk of the effective linear coefficient.
    double test = 0.0;
    for (std::int64_t c0 = 0, blk = 0; c0 < m; c0 += kModeBlock, ++blk) {
      const Eigen::Index rows = static_cast<Eigen::Index>(std::min<std::int64_t>(kModeBlock, m - c0));
      xc.resize(rows, en);
      fill_normal_matrix(xc, derive_seed(trial_seed, 1, static_cast<std::uint64_t>(blk)));
      Eigen::VectorXd u = xc * alpha;
      // c_i = lambda_i x_i.alpha against v_i
      Eigen::ArrayXd lam = sl.segment(static_cast<Eigen::Index>(c0), rows).array().square();
      test += (lam * u.array() - v.segment(static_cast<Eigen::Index>(c0), rows).array())
                  .square()
                  .sum();
    }
    out.trials[t] = {train, test + ts.noise_var};
  }, threads);

  out.pseudo_solution = std::any_of(pseudo.begin(), pseudo.end(), [](char c) { return c != 0; });
  finalize_stats(out);
  return out;
}

KernelDataset sample_kernel_dataset(const TaskEigenstructure& ts, std::int64_t n_samples,
                                    std::uint64_t seed, int threads) {
  ts.validate();
  if (ts.tail) {
    throw InvalidArgument("sample_kernel_dataset: task must be truncated to explicit modes");
  }
  if (n_samples < 1) throw InvalidArgument("sample_kernel_dataset: need n_samples >= 1");
  if (threads <= 0) threads = default_threads();

  const auto m = static_cast<Eigen::Index>(ts.modes());
  const auto en = static_cast<Eigen::Index>(n_samples);
  Eigen::VectorXd v = coeff_roots(ts);
  Eigen::VectorXd sl = eigen_roots(ts);

  const std::int64_t nchunks = (m + kModeBlock - 1) / kModeBlock;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(en, en);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(en);

  // Batches of `threads` chunks run in parallel; partial results are reduced
  // in chunk order so the thread count never changes the dataset.
  std::vector<Eigen::MatrixXd> kpart(static_cast<std::size_t>(threads));
  std::vector<Eigen::VectorXd> ypart(static_cast<std::size_t>(threads));
  std::vector<Eigen::MatrixXd> xbuf(static_cast<std::size_t>(threads));
  for (std::int64_t batch = 0; batch < nchunks; batch += threads) {
    const std::size_t in_flight =
        static_cast<std::size_t>(std::min<std::int64_t>(threads, nchunks - batch));
    parallel_for(in_flight, [&](std::size_t j) {
      const std::int64_t blk = batch + static_cast<std::int64_t>(j);
      const std::int64_t c0 = blk * kModeBlock;
      const Eigen::Index rows =
          static_cast<Eigen::Index>(std::min<std::int64_t>(kModeBlock, m - c0));
      auto& xc = xbuf[j];
      xc.resize(rows, en);
      fill_normal_matrix(xc, derive_seed(seed, 1, static_cast<std::uint64_t>(blk)));
      ypart[j].noalias() = xc.transpose() * v.segment(static_cast<Eigen::Index>(c0), rows);
      xc.array().colwise() *= sl.segment(static_cast<Eigen::Index>(c0), rows).array();
      if (kpart[j].rows() != en) kpart[j] = Eigen::MatrixXd::Zero(en, en);
      else kpart[j].setZero();
      kpart[j].selfadjointView<Eigen::Lower>().rankUpdate(xc.transpose(), 1.0);
    }, static_cast<int>(in_flight));
    for (std::size_t j = 0; j < in_flight; ++j) {
      K += kpart[j];
      y += ypart[j];
    }
  }
  K = K.selfadjointView<Eigen::Lower>();

  KernelDataset ds;
  ds.K = std::move(K);
  ds.Y.resize(en, 1);
  ds.Y.col(0) = y;
  if (ts.noise_var > 0.0) {
    Eigen::VectorXd xi(en);
    fill_normal_matrix(xi, derive_seed(seed, 2));
    ds.Y.col(0) += std::sqrt(ts.noise_var) * xi;
  }
  ds.name = "synthetic-gaussian";
  return ds;
}

}  // namespace eigenrisk
