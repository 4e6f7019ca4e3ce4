#include "eigenrisk/serialize.hpp"

#include <cmath>
#include <cstdio>

#include "eigenrisk/errors.hpp"

namespace eigenrisk {

std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

nlohmann::json json_number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

double number_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw InvalidArgument("unrecognized numeric string: " + s);
  }
  return j.get<double>();
}

void to_json(nlohmann::json& j, const PowerlawTail& t) {
  j = {{"alpha", t.alpha}, {"beta", t.beta}, {"start", t.start}};
}

void from_json(const nlohmann::json& j, PowerlawTail& t) {
  t.alpha = j.at("alpha").get<double>();
  t.beta = j.at("beta").get<double>();
  t.start = j.at("start").get<std::int64_t>();
}

void to_json(nlohmann::json& j, const TaskEigenstructure& ts) {
  j = {{"eigenvalues", ts.eigenvalues},
       {"coeffs_sq", ts.coeffs_sq},
       {"noise_var", ts.noise_var},
       {"scale", ts.scale}};
  if (ts.tail) {
    j["tail"] = *ts.tail;
  } else {
    j["tail"] = nullptr;
  }
}

void from_json(const nlohmann::json& j, TaskEigenstructure& ts) {
  ts.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
  ts.coeffs_sq = j.at("coeffs_sq").get<std::vector<double>>();
  ts.noise_var = j.value("noise_var", 0.0);
  ts.scale = j.value("scale", 1.0);
  ts.tail.reset();
  if (j.contains("tail") && !j.at("tail").is_null()) {
    ts.tail = j.at("tail").get<PowerlawTail>();
  }
  ts.validate();
}

void to_json(nlohmann::json& j, const PowerlawTask& t) {
  j = {{"alpha", t.alpha},
       {"beta", t.beta},
       {"i0", t.i0},
       {"s_rel_sq", t.s_rel_sq},
       {"head_overrides", t.head_overrides}};
}

void from_json(const nlohmann::json& j, PowerlawTask& t) {
  t.alpha = j.at("alpha").get<double>();
  t.beta = j.at("beta").get<double>();
  t.i0 = j.value("i0", std::int64_t{1});
  t.s_rel_sq = j.value("s_rel_sq", 0.0);
  t.head_overrides.clear();
  if (j.contains("head_overrides")) {
    t.head_overrides = j.at("head_overrides").get<std::vector<std::pair<double, double>>>();
  }
  t.validate();
}

void to_json(nlohmann::json& j, const ImplicitConstants& c) {
  j = {{"kappa", c.kappa},
       {"gamma", c.gamma},
       {"z", c.z},
       {"q", c.q},
       {"residuals", c.residuals},
       {"delta_over_kappa", c.delta_over_kappa},
       {"kappa_is_zero", c.kappa_is_zero},
       {"n", c.n},
       {"k", json_number(c.k)},
       {"delta", c.delta}};
}

void from_json(const nlohmann::json& j, ImplicitConstants& c) {
  c.kappa = j.at("kappa").get<double>();
  c.gamma = j.at("gamma").get<double>();
  c.z = j.at("z").get<double>();
  c.q = j.at("q").get<double>();
  auto r = j.at("residuals").get<std::vector<double>>();
  if (r.size() != 2) throw InvalidArgument("residuals must have two entries");
  c.residuals = {r[0], r[1]};
  c.delta_over_kappa = j.at("delta_over_kappa").get<double>();
  c.kappa_is_zero = j.value("kappa_is_zero", false);
  c.n = j.value("n", 0.0);
  c.k = number_from_json(j.value("k", nlohmann::json("inf")));
  c.delta = j.value("delta", 0.0);
}

void to_json(nlohmann::json& j, const RiskReport& r) {
  j = {{"e_test", r.e_test},
       {"e_train", r.e_train},
       {"fitting_ratio", r.fitting_ratio},
       {"overfitting_coeff", r.overfitting_coeff},
       {"bias_d", r.bias_d},
       {"var_d", r.var_d},
       {"bias_df", r.bias_df},
       {"var_df", r.var_df},
       {"constants", r.constants},
       {"threshold_proximity", r.threshold_proximity}};
}

void to_json(nlohmann::json& j, const SimConfig& c) {
  j = {{"ts", c.ts},
       {"n", c.n},
       {"k", c.k},
       {"ridge", c.ridge},
       {"trials", c.trials},
       {"seed", c.seed},
       {"fix_dataset_across_k", c.fix_dataset_across_k}};
}

void from_json(const nlohmann::json& j, SimConfig& c) {
  c.ts = j.at("ts").get<TaskEigenstructure>();
  c.n = j.at("n").get<std::int64_t>();
  c.k = j.at("k").get<std::int64_t>();
  c.ridge = j.at("ridge").get<double>();
  c.trials = j.value("trials", 1);
  c.seed = j.value("seed", std::uint64_t{0});
  c.fix_dataset_across_k = j.value("fix_dataset_across_k", true);
  c.validate();
}

void to_json(nlohmann::json& j, const SimulationResult& r) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : r.trials) {
    trials.push_back({{"train_mse", t.train_mse}, {"test_mse", t.test_mse}});
  }
  j = {{"config", r.config},
       {"trials", trials},
       {"train_mean", r.train_mean},
       {"train_stderr", r.train_stderr},
       {"test_mean", r.test_mean},
       {"test_stderr", r.test_stderr},
       {"pseudo_solution", r.pseudo_solution}};
}

void to_json(nlohmann::json& j, const LimitCheckResult& r) {
  j = {{"limit_name", to_string(r.limit_name)},
       {"general_value", r.general_value},
       {"limit_value", r.limit_value},
       {"relative_gap", r.relative_gap}};
}

const char* const kRiskCsvHeader =
    "n,k,delta,kappa,gamma,e_test,e_train,ratio,e0,bias_d,var_d,bias_df,var_df";

std::string risk_csv_row(double n, double k, double delta, const RiskReport& r) {
  std::string row;
  row += format_g17(n);
  row += ',';
  row += format_g17(k);
  row += ',';
  row += format_g17(delta);
  row += ',';
  row += format_g17(r.constants.kappa);
  row += ',';
  row += format_g17(r.constants.gamma);
  row += ',';
  row += format_g17(r.e_test);
  row += ',';
  row += format_g17(r.e_train);
  row += ',';
  row += format_g17(r.fitting_ratio);
  row += ',';
  row += format_g17(r.overfitting_coeff);
  row += ',';
  row += format_g17(r.bias_d);
  row += ',';
  row += format_g17(r.var_d);
  row += ',';
  row += format_g17(r.bias_df);
  row += ',';
  row += format_g17(r.var_df);
  return row;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace eigenrisk
