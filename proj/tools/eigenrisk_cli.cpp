// Config-driven command line for the risk framework: theory predictions,
// Monte Carlo sweeps, powerlaw ratio curves, limit cross-checks, and exponent
// estimation. One JSON config with a "command" discriminator; CSV/JSON out.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eigenrisk/errors.hpp"
#include "eigenrisk/estimation.hpp"
#include "eigenrisk/limits.hpp"
#include "eigenrisk/parallel.hpp"
#include "eigenrisk/powerlaw.hpp"
#include "eigenrisk/risk.hpp"
#include "eigenrisk/rng.hpp"
#include "eigenrisk/serialize.hpp"
#include "eigenrisk/simulator.hpp"
#include "eigenrisk/spectrum.hpp"

namespace {

using nlohmann::json;
using namespace eigenrisk;

class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct Context {
  json config;
  std::string config_hash;
  std::string out_path;
  int threads = 0;
  SolverOptions solver;
};

json require_field(const json& j, const char* name) {
  if (!j.contains(name)) throw ConfigError(std::string("config missing field: ") + name);
  return j.at(name);
}

// Task specification: {"powerlaw": {...}, "modes": M, "with_tail": bool}
// or {"explicit": TaskEigenstructure}. Powerlaw tasks resolve their noise
// per n (relative noise scaling), explicit tasks carry noise_var directly.
struct TaskSpec {
  std::optional<PowerlawTask> powerlaw;
  std::int64_t modes = 0;
  bool with_tail = true;
  std::optional<TaskEigenstructure> explicit_ts;

  TaskEigenstructure resolve(double n) const {
    if (explicit_ts) return *explicit_ts;
    TaskEigenstructure ts = make_powerlaw_structure(*powerlaw, modes);
    if (!with_tail) ts.tail.reset();
    if (powerlaw->s_rel_sq > 0.0) ts.noise_var = scaled_noise(*powerlaw, n);
    return ts;
  }
};

TaskSpec parse_task(const json& j) {
  TaskSpec spec;
  if (j.contains("explicit")) {
    spec.explicit_ts = j.at("explicit").get<TaskEigenstructure>();
    return spec;
  }
  if (!j.contains("powerlaw")) {
    throw ConfigError("task must contain 'powerlaw' or 'explicit'");
  }
  spec.powerlaw = j.at("powerlaw").get<PowerlawTask>();
  spec.modes = require_field(j, "modes").get<std::int64_t>();
  spec.with_tail = j.value("with_tail", true);
  return spec;
}

template <typename T>
std::vector<T> parse_grid(const json& j, const char* name) {
  auto grid = require_field(j, name).get<std::vector<T>>();
  if (grid.empty()) throw ConfigError(std::string(name) + " must be non-empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw ConfigError(std::string(name) + " must be strictly increasing");
    }
  }
  return grid;
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output path: " + path);
  out << body;
  if (!out) throw Error("short write: " + path);
}

std::string provenance_columns(const Context& ctx, std::uint64_t seed) {
  return ctx.config_hash + "," + std::to_string(seed);
}

// --- predict ----------------------------------------------------------------

int cmd_predict(const Context& ctx) {
  const json& cfg = ctx.config;
  TaskSpec task = parse_task(require_field(cfg, "task"));
  std::string model = cfg.value("model", "rf");
  auto n_grid = parse_grid<double>(cfg, "n_grid");
  auto delta_grid = parse_grid<double>(cfg, "delta_grid");
  std::vector<double> k_grid;
  if (model == "rf") {
    k_grid = parse_grid<double>(cfg, "k_grid");
  } else if (model == "krr") {
    k_grid = {std::numeric_limits<double>::infinity()};
  } else {
    throw ConfigError("model must be 'rf' or 'krr'");
  }

  struct Point {
    double n, k, delta;
  };
  std::vector<Point> points;
  for (double n : n_grid)
    for (double k : k_grid)
      for (double d : delta_grid) points.push_back({n, k, d});

  std::vector<std::string> rows(points.size());
  std::vector<RiskReport> reports(points.size());
  parallel_for(points.size(), [&](std::size_t i) {
    const auto& p = points[i];
    TaskEigenstructure ts = task.resolve(p.n);
    RiskReport r;
    try {
      r = std::isinf(p.k) ? krr_risk(ts, p.n, p.delta, ctx.solver)
                          : rf_risk(ts, p.n, p.k, p.delta, ctx.solver);
    } catch (const Error& e) {
      throw Error("grid point n=" + format_g17(p.n) + " k=" + format_g17(p.k) +
                  " delta=" + format_g17(p.delta) + ": " + e.what());
    }
    rows[i] = risk_csv_row(p.n, p.k, p.delta, r) + "," + provenance_columns(ctx, 0);
    reports[i] = r;
  }, ctx.threads);

  std::string body = std::string(kRiskCsvHeader) + ",config_hash,seed\n";
  for (const auto& row : rows) body += row + "\n";
  write_text(ctx.out_path, body);

  // Full reports (solved constants included) as JSON, on request.
  if (cfg.contains("json_out")) {
    json out = json::array();
    for (std::size_t i = 0; i < points.size(); ++i) {
      out.push_back({{"n", points[i].n},
                     {"k", json_number(points[i].k)},
                     {"delta", points[i].delta},
                     {"report", reports[i]}});
    }
    write_text(cfg.at("json_out").get<std::string>(), out.dump(2) + "\n");
  }
  return 0;
}

// --- simulate / sweep ---------------------------------------------------------

int cmd_simulate(const Context& ctx, bool joined_sweep) {
  const json& cfg = ctx.config;
  TaskSpec task = parse_task(require_field(cfg, "task"));
  std::string model = cfg.value("model", "rf");
  auto n = require_field(cfg, "n").get<std::int64_t>();
  auto delta_grid = parse_grid<double>(cfg, "delta_grid");
  int trials = cfg.value("trials", 45);
  auto seed = cfg.value("seed", std::uint64_t{0});
  bool fix_dataset = cfg.value("fix_dataset_across_k", true);

  TaskEigenstructure ts = task.resolve(static_cast<double>(n));
  ts.tail.reset();  // simulation uses the explicit truncation

  std::ostringstream body;
  if (model == "krr") {
    std::vector<SimulationResult> results(delta_grid.size());
    parallel_for(delta_grid.size(), [&](std::size_t i) {
      results[i] = simulate_krr(ts, n, delta_grid[i], trials, derive_seed(seed, i), 1);
    }, ctx.threads);
    if (joined_sweep) {
      body << "n,k,delta,e_test_pred,e_train_pred,test_mean,test_stderr,train_mean,"
              "train_stderr,trials,config_hash,seed\n";
      for (std::size_t i = 0; i < results.size(); ++i) {
        RiskReport r = krr_risk(ts, static_cast<double>(n), delta_grid[i], ctx.solver);
        const auto& s = results[i];
        body << n << ",inf," << format_g17(delta_grid[i]) << ',' << format_g17(r.e_test)
             << ',' << format_g17(r.e_train) << ',' << format_g17(s.test_mean) << ','
             << format_g17(s.test_stderr) << ',' << format_g17(s.train_mean) << ','
             << format_g17(s.train_stderr) << ',' << trials << ','
             << provenance_columns(ctx, seed) << "\n";
      }
    } else {
      body << "n,k,delta,trial,train_mse,test_mse,config_hash,seed\n";
      for (std::size_t i = 0; i < results.size(); ++i) {
        for (std::size_t t = 0; t < results[i].trials.size(); ++t) {
          body << n << ",inf," << format_g17(delta_grid[i]) << ',' << t << ','
               << format_g17(results[i].trials[t].train_mse) << ','
               << format_g17(results[i].trials[t].test_mse) << ','
               << provenance_columns(ctx, seed) << "\n";
        }
      }
    }
  } else if (model == "rf") {
    auto k_grid = parse_grid<std::int64_t>(cfg, "k_grid");
    auto results = simulate_rf_sweep(ts, n, k_grid, delta_grid, trials, seed, fix_dataset,
                                     ctx.threads);
    if (joined_sweep) {
      body << "n,k,delta,e_test_pred,e_train_pred,test_mean,test_stderr,train_mean,"
              "train_stderr,trials,config_hash,seed\n";
      std::size_t p = 0;
      for (std::int64_t k : k_grid) {
        for (double d : delta_grid) {
          RiskReport r = rf_risk(ts, static_cast<double>(n), static_cast<double>(k), d,
                                 ctx.solver);
          const auto& s = results[p++];
          body << n << ',' << k << ',' << format_g17(d) << ',' << format_g17(r.e_test)
               << ',' << format_g17(r.e_train) << ',' << format_g17(s.test_mean) << ','
               << format_g17(s.test_stderr) << ',' << format_g17(s.train_mean) << ','
               << format_g17(s.train_stderr) << ',' << trials << ','
               << provenance_columns(ctx, seed) << "\n";
        }
      }
    } else {
      body << "n,k,delta,trial,train_mse,test_mse,config_hash,seed\n";
      std::size_t p = 0;
      for (std::int64_t k : k_grid) {
        for (double d : delta_grid) {
          const auto& s = results[p++];
          for (std::size_t t = 0; t < s.trials.size(); ++t) {
            body << n << ',' << k << ',' << format_g17(d) << ',' << t << ','
                 << format_g17(s.trials[t].train_mse) << ','
                 << format_g17(s.trials[t].test_mse) << ','
                 << provenance_columns(ctx, seed) << "\n";
          }
        }
      }
    }
  } else {
    throw ConfigError("model must be 'rf' or 'krr'");
  }
  write_text(ctx.out_path, body.str());
  return 0;
}

// --- powerlaw -----------------------------------------------------------------

int cmd_powerlaw(const Context& ctx) {
  const json& cfg = ctx.config;
  PowerlawTask base;
  base.alpha = require_field(cfg, "alpha").get<double>();
  base.beta = require_field(cfg, "beta").get<double>();
  base.i0 = cfg.value("i0", std::int64_t{1});
  base.validate();
  double n = require_field(cfg, "n").get<double>();
  int points = cfg.value("points", 199);
  double r_max = cfg.value("r_max", 0.99);
  double prefactor = cfg.value("prefactor_scale", 1.0);

  std::vector<double> s_grid;
  if (cfg.contains("s_rel_sq_grid")) {
    s_grid = cfg.at("s_rel_sq_grid").get<std::vector<double>>();
    if (s_grid.empty()) throw ConfigError("s_rel_sq_grid must be non-empty");
  } else {
    s_grid = {cfg.value("s_rel_sq", 0.0)};
  }

  const bool single = s_grid.size() == 1;
  std::ostringstream body;
  body << (single ? "ratio,e_test_predicted" : "s_rel_sq,ratio,e_test_predicted")
       << ",config_hash,seed\n";
  json summary;
  summary["interpolation_threshold"] = interpolation_threshold(base.alpha, base.beta);
  summary["curves"] = json::array();
  for (double s2 : s_grid) {
    PowerlawTask task = base;
    task.s_rel_sq = s2;
    RatioCurve curve = make_ratio_curve(task, n, points, r_max, prefactor);
    for (std::size_t i = 0; i < curve.ratio.size(); ++i) {
      if (!single) body << format_g17(s2) << ',';
      body << format_g17(curve.ratio[i]) << ',' << format_g17(curve.e_test[i]) << ','
           << provenance_columns(ctx, 0) << "\n";
    }
    OptimalRatioResult opt = optimal_ratio(task);
    summary["curves"].push_back(
        {{"s_rel_sq", s2},
         {"r_star", opt.r_star},
         {"ratio_star", opt.ratio_star},
         {"branch", opt.branch == OptimalRatioBranch::interior_root ? "interior_root"
                                                                    : "boundary_zero"},
         {"error_exponent", opt.error_exponent},
         {"null_risk", null_risk(task, n)}});
  }
  write_text(ctx.out_path, body.str());
  std::cout << summary.dump(2) << "\n";
  return 0;
}

// --- estimate -----------------------------------------------------------------

int cmd_estimate(const Context& ctx) {
  const json& cfg = ctx.config;
  KernelDataset ds;
  if (cfg.contains("kernel_file")) {
    ds = read_kernel_file(cfg.at("kernel_file").get<std::string>());
  } else if (cfg.contains("kernel_csv")) {
    ds = read_kernel_csv(cfg.at("kernel_csv").get<std::string>(),
                         cfg.value("targets", std::int64_t{1}));
  } else {
    throw ConfigError("estimate needs 'kernel_file' or 'kernel_csv'");
  }
  auto sizes = parse_grid<std::int64_t>(cfg, "sizes");
  auto seed = cfg.value("seed", std::uint64_t{0});
  FitOptions opts;
  opts.reps = cfg.value("reps", 5);
  if (cfg.contains("fit_window")) {
    auto w = cfg.at("fit_window").get<std::vector<double>>();
    if (w.size() != 2) throw ConfigError("fit_window must be [lo, hi]");
    opts.window_lo = w[0];
    opts.window_hi = w[1];
  }
  opts.least_absolute = cfg.value("least_absolute", false);

  ExponentFit alpha = measure_alpha(ds, sizes, seed, opts);
  ExponentFit beta = measure_beta(ds, sizes, derive_seed(seed, 1), opts);

  std::ostringstream body;
  body << "measure,n,value,config_hash,seed\n";
  for (std::size_t i = 0; i < alpha.xs.size(); ++i) {
    body << "kappa_proxy," << format_g17(std::exp(alpha.xs[i])) << ','
         << format_g17(std::exp(alpha.ys[i])) << ',' << provenance_columns(ctx, seed)
         << "\n";
  }
  for (std::size_t i = 0; i < beta.xs.size(); ++i) {
    body << "holdout_mse," << format_g17(std::exp(beta.xs[i])) << ','
         << format_g17(std::exp(beta.ys[i])) << ',' << provenance_columns(ctx, seed)
         << "\n";
  }
  write_text(ctx.out_path, body.str());

  json summary{{"alpha_hat", alpha.exponent},
               {"alpha_fit_residual", alpha.residual},
               {"beta_hat", beta.exponent},
               {"beta_fit_residual", beta.residual}};
  if (alpha.warning) summary["alpha_warning"] = *alpha.warning;
  if (beta.warning) summary["beta_warning"] = *beta.warning;
  if (cfg.value("with_direct", false)) {
    DirectEigenstructure direct = direct_eigenstructure(ds);
    std::vector<double> idx(static_cast<std::size_t>(direct.eigenvalues.size()));
    std::vector<double> ev(idx.size()), tail(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      idx[i] = static_cast<double>(i + 1);
      ev[i] = direct.eigenvalues[static_cast<Eigen::Index>(i)];
      tail[i] = direct.coeff_tailsums(static_cast<Eigen::Index>(i), 0);
    }
    ExponentFit da = fit_powerlaw_exponent(idx, ev, opts);
    ExponentFit db = fit_powerlaw_exponent(idx, tail, opts);
    summary["direct_alpha_hat"] = da.exponent;
    summary["direct_beta_hat"] = db.exponent + 1.0;  // tailsum decays as i^-(beta-1)
  }
  std::cout << summary.dump(2) << "\n";
  return 0;
}

// --- check-limits ---------------------------------------------------------------

int cmd_check_limits(const Context& ctx) {
  const json& cfg = ctx.config;
  json output = json::array();
  double worst = 0.0;
  if (cfg.contains("task")) {
    TaskSpec task = parse_task(require_field(cfg, "task"));
    double n = require_field(cfg, "n").get<double>();
    double k = require_field(cfg, "k").get<double>();
    double delta = require_field(cfg, "delta").get<double>();
    auto checks = check_all_limits(task.resolve(n), n, k, delta, ctx.solver);
    for (const auto& c : checks) {
      output.push_back(c);
      worst = std::max(worst, c.relative_gap);
    }
  } else {
    // Randomized powerlaw grid.
    auto count = cfg.value("random_tasks", std::int64_t{20});
    auto seed = cfg.value("seed", std::uint64_t{7});
    std::vector<json> slots(static_cast<std::size_t>(count));
    std::vector<double> gaps(static_cast<std::size_t>(count), 0.0);
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
      Xoshiro256 rng(derive_seed(seed, i));
      PowerlawTask task;
      task.alpha = 1.2 + 1.8 * rng.uniform_pos();
      task.beta = 1.1 + (std::min(2.0 * task.alpha + 1.0, 4.0) - 1.2) * rng.uniform_pos();
      TaskEigenstructure ts = make_powerlaw_structure(task, 512);
      ts.noise_var = 0.5 * rng.uniform_pos();
      double n = std::floor(32.0 + 480.0 * rng.uniform_pos());
      double k = std::floor(32.0 + 480.0 * rng.uniform_pos());
      if (n == k) k += 1.0;
      double delta = std::pow(10.0, -4.0 + 5.0 * rng.uniform_pos());
      auto checks = check_all_limits(ts, n, k, delta, ctx.solver);
      json entry{{"task", {{"alpha", task.alpha}, {"beta", task.beta}}},
                 {"n", n},
                 {"k", k},
                 {"delta", delta},
                 {"checks", checks}};
      double local = 0.0;
      for (const auto& c : checks) local = std::max(local, c.relative_gap);
      entry["max_gap"] = local;
      slots[i] = std::move(entry);
      gaps[i] = local;
    }, ctx.threads);
    for (std::size_t i = 0; i < slots.size(); ++i) {
      output.push_back(std::move(slots[i]));
      worst = std::max(worst, gaps[i]);
    }
  }
  json result{{"results", output}, {"max_relative_gap", worst}};
  std::string text = result.dump(2) + "\n";
  if (!ctx.out_path.empty()) {
    write_text(ctx.out_path, text);
  } else {
    std::cout << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"omniscient risk framework for random-feature and kernel ridge regression"};
  std::string config_path;
  std::string out_path;
  int threads = 0;
  double tolerance = 0.0;
  app.add_option("--config", config_path, "JSON config with a 'command' field")
      ->required();
  app.add_option("--out", out_path, "output path (overrides config 'out')");
  app.add_option("--threads", threads, "worker threads (0 = hardware)");
  app.add_option("--tolerance", tolerance, "solver relative-residual tolerance override");
  CLI11_PARSE(app, argc, argv);

  Context ctx;
  try {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config: " + config_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    std::string raw = buffer.str();
    ctx.config = json::parse(raw, nullptr, false);
    if (ctx.config.is_discarded()) throw ConfigError("config is not valid JSON");
    ctx.config_hash = fnv1a_hex(raw);
    ctx.out_path = !out_path.empty() ? out_path : ctx.config.value("out", "");
    ctx.threads = threads;
    if (tolerance > 0.0) ctx.solver.tol = tolerance;
    else if (ctx.config.contains("tolerance")) {
      ctx.solver.tol = ctx.config.at("tolerance").get<double>();
    }

    std::string command = require_field(ctx.config, "command").get<std::string>();
    bool needs_out = command != "check-limits";
    if (needs_out && ctx.out_path.empty()) {
      throw ConfigError("no output path: set 'out' in the config or pass --out");
    }
    if (command == "predict") return cmd_predict(ctx);
    if (command == "simulate") return cmd_simulate(ctx, /*joined_sweep=*/false);
    if (command == "sweep") return cmd_simulate(ctx, /*joined_sweep=*/true);
    if (command == "powerlaw") return cmd_powerlaw(ctx);
    if (command == "estimate") return cmd_estimate(ctx);
    if (command == "check-limits") return cmd_check_limits(ctx);
    throw ConfigError("unknown command: " + command);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
