#include "knockoffs/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include "knockoffs/build_info.hpp"
#include "knockoffs/errors.hpp"

namespace knockoffs::io {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

bool parse_double(const std::string& cell, double& out) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  return *end == '\0';
}

void require_keys(const nlohmann::json& obj, const char* what,
                  const std::set<std::string>& required,
                  const std::set<std::string>& optional) {
  if (!obj.is_object())
    throw ValidationError(std::string(what) + ": expected a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!required.count(key) && !optional.count(key))
      throw ValidationError(std::string(what) + ": unknown key '" + key + "'");
  }
  for (const auto& key : required)
    if (!obj.contains(key))
      throw ValidationError(std::string(what) + ": missing key '" + key + "'");
}

void check_format_version(const nlohmann::json& j, const char* what) {
  if (!j.at("format_version").is_number_integer() ||
      j.at("format_version").get<int>() != 1)
    throw ValidationError(std::string(what) + ": format_version must be 1");
}

}  // namespace

Eigen::MatrixXd read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line))
    throw ValidationError(path + ": empty file, expected a header row");
  const auto header = split_line(line);
  if (header.empty()) throw ValidationError(path + ": empty header row");
  {
    double ignored;
    bool all_numeric = true;
    for (const auto& cell : header)
      if (!parse_double(cell, ignored)) all_numeric = false;
    if (all_numeric)
      throw ValidationError(path + ": first row is numeric, expected a header");
  }
  const std::size_t ncol = header.size();

  std::vector<double> values;
  long nrow = 0;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    const auto cells = split_line(line);
    if (cells.size() != ncol)
      throw ValidationError(path + ": row " + std::to_string(lineno) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(ncol));
    for (std::size_t c = 0; c < ncol; ++c) {
      double v;
      if (!parse_double(cells[c], v))
        throw ValidationError(path + ": row " + std::to_string(lineno) +
                              ", column " + std::to_string(c + 1) +
                              ": not a number: '" + cells[c] + "'");
      if (!std::isfinite(v))
        throw ValidationError(path + ": row " + std::to_string(lineno) +
                              ", column " + std::to_string(c + 1) +
                              ": non-finite value");
      values.push_back(v);
    }
    ++nrow;
  }
  if (nrow == 0) throw ValidationError(path + ": no data rows");

  Eigen::MatrixXd m(nrow, static_cast<Eigen::Index>(ncol));
  for (long i = 0; i < nrow; ++i)
    for (std::size_t c = 0; c < ncol; ++c)
      m(i, static_cast<Eigen::Index>(c)) = values[i * ncol + c];
  return m;
}

Eigen::VectorXd read_csv_vector(const std::string& path) {
  const Eigen::MatrixXd m = read_csv_matrix(path);
  if (m.cols() != 1)
    throw ValidationError(path + ": expected a single column, found " +
                          std::to_string(m.cols()));
  return m.col(0);
}

void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& m,
                      const std::string& column_prefix) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    out << (j ? "," : "") << column_prefix << (j + 1);
  out << "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw ValidationError("write failed for '" + path + "'");
}

void write_csv_vector(const std::string& path, const Eigen::VectorXd& v,
                      const std::string& column_name) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << column_name << "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", v(i));
    out << buf << "\n";
  }
  if (!out) throw ValidationError("write failed for '" + path + "'");
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
  if (!out) throw ValidationError("write failed for '" + path + "'");
}

nlohmann::json real_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

nlohmann::json envelope(std::uint64_t seed) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["build_id"] = kBuildId;
  j["seed"] = seed;
  return j;
}

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  require_keys(j, "config",
               {"format_version", "n", "p", "ar1_rho", "signal_count",
                "signal_amplitude", "response_kind", "q", "statistic",
                "variant", "precision_mode", "replicates", "seed"},
               {"lambda_fraction"});
  check_format_version(j, "config");

  ScenarioConfig c;
  c.n = j.at("n").get<long>();
  c.p = j.at("p").get<int>();
  c.ar1_rho = j.at("ar1_rho").get<double>();
  c.signal_count = j.at("signal_count").get<int>();
  c.signal_amplitude = j.at("signal_amplitude").get<double>();

  const std::string response = j.at("response_kind").get<std::string>();
  if (response == "linear_gaussian")
    c.response_kind = ResponseKind::linear_gaussian;
  else if (response == "logistic")
    c.response_kind = ResponseKind::logistic;
  else
    throw ValidationError("config: unknown response_kind '" + response + "'");

  c.q = j.at("q").get<double>();

  const std::string statistic = j.at("statistic").get<std::string>();
  if (statistic == "marginal")
    c.statistic_kind = StatisticKind::marginal;
  else if (statistic == "lcd")
    c.statistic_kind = StatisticKind::lcd;
  else
    throw ValidationError("config: unknown statistic '" + statistic + "'");
  if (j.contains("lambda_fraction"))
    c.lambda_fraction = j.at("lambda_fraction").get<double>();

  const std::string variant = j.at("variant").get<std::string>();
  if (variant == "knockoff")
    c.variant = FilterVariant::knockoff;
  else if (variant == "knockoff+")
    c.variant = FilterVariant::knockoff_plus;
  else
    throw ValidationError("config: unknown variant '" + variant + "'");

  const nlohmann::json& pm = j.at("precision_mode");
  const std::string mode = pm.is_object() && pm.contains("mode")
                               ? pm.at("mode").get<std::string>()
                               : throw ValidationError(
                                     "config: precision_mode needs a 'mode'");
  if (mode == "exact") {
    require_keys(pm, "precision_mode", {"mode"}, {});
    c.precision.kind = PrecisionModeKind::exact;
  } else if (mode == "column_perturb") {
    require_keys(pm, "precision_mode", {"mode", "delta_target"}, {});
    c.precision.kind = PrecisionModeKind::column_perturb;
    c.precision.delta_target = pm.at("delta_target").get<double>();
  } else if (mode == "nodewise_lasso") {
    require_keys(pm, "precision_mode", {"mode", "unlabeled_n"},
                 {"lambda_fraction"});
    c.precision.kind = PrecisionModeKind::nodewise_lasso;
    c.precision.unlabeled_n = pm.at("unlabeled_n").get<long>();
    if (pm.contains("lambda_fraction"))
      c.precision.lambda_fraction = pm.at("lambda_fraction").get<double>();
  } else {
    throw ValidationError("config: unknown precision mode '" + mode + "'");
  }

  c.replicates = j.at("replicates").get<long>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

nlohmann::json scenario_to_json(const ScenarioConfig& c) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["n"] = c.n;
  j["p"] = c.p;
  j["ar1_rho"] = c.ar1_rho;
  j["signal_count"] = c.signal_count;
  j["signal_amplitude"] = c.signal_amplitude;
  j["response_kind"] = c.response_kind == ResponseKind::linear_gaussian
                           ? "linear_gaussian"
                           : "logistic";
  j["q"] = c.q;
  j["statistic"] =
      c.statistic_kind == StatisticKind::marginal ? "marginal" : "lcd";
  j["lambda_fraction"] = c.lambda_fraction;
  j["variant"] =
      c.variant == FilterVariant::knockoff ? "knockoff" : "knockoff+";
  nlohmann::json pm;
  switch (c.precision.kind) {
    case PrecisionModeKind::exact:
      pm["mode"] = "exact";
      break;
    case PrecisionModeKind::column_perturb:
      pm["mode"] = "column_perturb";
      pm["delta_target"] = c.precision.delta_target;
      break;
    case PrecisionModeKind::nodewise_lasso:
      pm["mode"] = "nodewise_lasso";
      pm["unlabeled_n"] = c.precision.unlabeled_n;
      pm["lambda_fraction"] = c.precision.lambda_fraction;
      break;
  }
  j["precision_mode"] = pm;
  j["replicates"] = c.replicates;
  j["seed"] = c.seed;
  return j;
}

AdversaryConfig adversary_from_json(const nlohmann::json& j) {
  require_keys(j, "adversary config",
               {"format_version", "p", "ar1_rho", "n", "feature", "q",
                "delta_theta", "replicates", "seed"},
               {});
  check_format_version(j, "adversary config");
  AdversaryConfig c;
  c.p = j.at("p").get<int>();
  c.ar1_rho = j.at("ar1_rho").get<double>();
  c.n = j.at("n").get<long>();
  c.feature = j.at("feature").get<int>();
  c.q = j.at("q").get<double>();
  c.delta_theta_target = j.at("delta_theta").get<double>();
  c.replicates = j.at("replicates").get<long>();
  c.seed = j.at("seed").get<std::uint64_t>();
  if (c.p < 2) throw ValidationError("adversary config: p must be at least 2");
  if (c.feature < 1 || c.feature > c.p)
    throw ValidationError("adversary config: feature must be in 1..p");
  return c;
}

nlohmann::json adversary_to_json(const AdversaryConfig& c) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["p"] = c.p;
  j["ar1_rho"] = c.ar1_rho;
  j["n"] = c.n;
  j["feature"] = c.feature;
  j["q"] = c.q;
  j["delta_theta"] = c.delta_theta_target;
  j["replicates"] = c.replicates;
  j["seed"] = c.seed;
  return j;
}

nlohmann::json interval_to_json(const IntervalEstimate& e) {
  return {{"mean", e.mean}, {"se", e.se}, {"lo", e.lo}, {"hi", e.hi}};
}

nlohmann::json selection_to_json(const SelectionResult& sel,
                                 const WStatistics& stats) {
  nlohmann::json j;
  j["q"] = sel.q;
  j["variant"] =
      sel.variant == FilterVariant::knockoff ? "knockoff" : "knockoff+";
  j["threshold"] = real_or_inf(sel.threshold);
  nlohmann::json sel_ids = nlohmann::json::array();
  for (int idx : sel.selected) sel_ids.push_back(idx + 1);  // 1-based, as x1..xp
  j["selected_features"] = sel_ids;
  j["statistic"] =
      stats.kind == StatisticKind::marginal ? "marginal" : "lcd";
  j["lambda_used"] = stats.lambda_used;
  j["solver_converged"] = stats.solver_converged;
  j["w"] = std::vector<double>(stats.w.data(), stats.w.data() + stats.w.size());
  return j;
}

nlohmann::json bounds_to_json(const BoundReport& b) {
  nlohmann::json j;
  j["q"] = b.q;
  j["epsilon_grid"] = b.epsilon_grid;
  nlohmann::json exc = nlohmann::json::array();
  for (const auto& e : b.exceedance) exc.push_back(interval_to_json(e));
  j["exceedance"] = exc;
  j["inflation_bound"] = b.inflation_bound;
  j["best_bound"] = b.best_bound;
  j["best_epsilon"] = b.best_epsilon;
  j["delta_theta"] = b.delta_theta_value;
  j["kl_bound_uniform"] =
      b.kl_bound_uniform ? nlohmann::json(*b.kl_bound_uniform) : nullptr;
  j["kl_bound_gaussian"] =
      b.kl_bound_gaussian ? nlohmann::json(*b.kl_bound_gaussian) : nullptr;
  return j;
}

nlohmann::json mc_report_to_json(const MonteCarloReport& report,
                                 const ScenarioConfig& config) {
  nlohmann::json j = envelope(config.seed);
  j["config"] = scenario_to_json(config);
  j["fdr"] = interval_to_json(report.fdr);
  j["power"] = interval_to_json(report.power);
  j["modified_fdr"] = interval_to_json(report.modified_fdr);
  j["restricted_fdr"] = report.restricted_fdr;
  j["restricted_fdr_se"] = report.restricted_fdr_se;
  j["bounds"] = bounds_to_json(report.bounds);
  nlohmann::json reps = nlohmann::json::array();
  for (const auto& r : report.per_replicate)
    reps.push_back({{"selected", static_cast<long>(r[0])},
                    {"false", static_cast<long>(r[1])},
                    {"max_kl", r[2]}});
  j["per_replicate"] = reps;
  return j;
}

nlohmann::json adversary_levels_to_json(const AdversaryLevels& levels) {
  nlohmann::json j;
  j["replicates"] = levels.replicates;
  j["level_under_q"] = interval_to_json(levels.level_under_q);
  j["level_under_p"] = interval_to_json(levels.level_under_p);
  j["epsilon"] = levels.epsilon;
  j["c_hat"] = levels.c_hat;
  j["lower_bound"] = levels.lower_bound;
  return j;
}

}  // namespace knockoffs::io
