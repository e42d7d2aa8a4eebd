#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <string>

#include "knockoffs/adversary.hpp"
#include "knockoffs/diagnostics.hpp"
#include "knockoffs/filter.hpp"
#include "knockoffs/simulator.hpp"
#include "knockoffs/statistics.hpp"

namespace knockoffs::io {

// CSV contract: one header row, comma separated, every data cell a finite
// number. Errors name the offending row and column. Values are written with
// 17 significant digits so a read-back is bit exact.
Eigen::MatrixXd read_csv_matrix(const std::string& path);
Eigen::VectorXd read_csv_vector(const std::string& path);
void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& m,
                      const std::string& column_prefix = "x");
void write_csv_vector(const std::string& path, const Eigen::VectorXd& v,
                      const std::string& column_name = "y");

nlohmann::json load_json(const std::string& path);
void write_json(const std::string& path, const nlohmann::json& j);

// +inf serializes as the string "inf" (JSON has no infinity literal).
nlohmann::json real_or_inf(double v);

// Common report preamble: format_version, build id, seed.
nlohmann::json envelope(std::uint64_t seed);

// Config object parsing rejects unknown keys and checks format_version == 1.
ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& config);

struct AdversaryConfig {
  int p = 0;
  double ar1_rho = 0.0;
  long n = 0;
  int feature = 1;  // 1-based in the file
  double q = 0.0;
  double delta_theta_target = 0.0;
  long replicates = 0;
  std::uint64_t seed = 0;
};
AdversaryConfig adversary_from_json(const nlohmann::json& j);
nlohmann::json adversary_to_json(const AdversaryConfig& config);

nlohmann::json interval_to_json(const IntervalEstimate& e);
nlohmann::json selection_to_json(const SelectionResult& sel,
                                 const WStatistics& stats);
nlohmann::json bounds_to_json(const BoundReport& b);
nlohmann::json mc_report_to_json(const MonteCarloReport& report,
                                 const ScenarioConfig& config);
nlohmann::json adversary_levels_to_json(const AdversaryLevels& levels);

}  // namespace knockoffs::io
