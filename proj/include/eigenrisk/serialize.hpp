#pragma once

#include <json.hpp>
#include <string>

#include "eigenrisk/eigensolver.hpp"
#include "eigenrisk/limits.hpp"
#include "eigenrisk/powerlaw.hpp"
#include "eigenrisk/risk.hpp"
#include "eigenrisk/simulator.hpp"
#include "eigenrisk/spectrum.hpp"

namespace eigenrisk {

// Numbers in CSV output are printed with 17 significant digits so identical
// configs reproduce byte-identical files.
std::string format_g17(double x);

// Non-finite doubles round-trip through JSON as the strings "inf"/"-inf"/"nan".
nlohmann::json json_number(double x);
double number_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const PowerlawTail& t);
void from_json(const nlohmann::json& j, PowerlawTail& t);
void to_json(nlohmann::json& j, const TaskEigenstructure& ts);
void from_json(const nlohmann::json& j, TaskEigenstructure& ts);
void to_json(nlohmann::json& j, const PowerlawTask& t);
void from_json(const nlohmann::json& j, PowerlawTask& t);
void to_json(nlohmann::json& j, const ImplicitConstants& c);
void from_json(const nlohmann::json& j, ImplicitConstants& c);
void to_json(nlohmann::json& j, const RiskReport& r);
void to_json(nlohmann::json& j, const SimConfig& c);
void from_json(const nlohmann::json& j, SimConfig& c);
void to_json(nlohmann::json& j, const SimulationResult& r);
void to_json(nlohmann::json& j, const LimitCheckResult& r);

// CSV row schema shared by the theory commands:
// n,k,delta,kappa,gamma,e_test,e_train,ratio,e0,bias_d,var_d,bias_df,var_df
extern const char* const kRiskCsvHeader;
std::string risk_csv_row(double n, double k, double delta, const RiskReport& r);

// FNV-1a over raw bytes; provenance stamp for CSV rows.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace eigenrisk
