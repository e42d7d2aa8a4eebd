#include "knockoffs/cli.hpp"

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "knockoffs/adversary.hpp"
#include "knockoffs/build_info.hpp"
#include "knockoffs/discrete.hpp"
#include "knockoffs/errors.hpp"
#include "knockoffs/io.hpp"
#include "knockoffs/parallel.hpp"
#include "knockoffs/rng.hpp"
#include "knockoffs/simulator.hpp"

namespace knockoffs {

namespace {

void check_square_match(const Eigen::MatrixXd& theta, const char* name,
                        Eigen::Index p) {
  if (theta.rows() != theta.cols())
    throw ValidationError(std::string(name) + " must be square, got " +
                          std::to_string(theta.rows()) + "x" +
                          std::to_string(theta.cols()));
  if (theta.rows() != p)
    throw ValidationError(std::string(name) + " is " +
                          std::to_string(theta.rows()) + "x" +
                          std::to_string(theta.cols()) + " but X has " +
                          std::to_string(p) + " columns");
}

struct SampleArgs {
  std::string x_path, precision_path, out_path;
  std::uint64_t seed = 0;
  std::string d_mode = "equicorrelated";
};

void run_sample(const SampleArgs& a) {
  const Eigen::MatrixXd x = io::read_csv_matrix(a.x_path);
  const Eigen::MatrixXd theta = io::read_csv_matrix(a.precision_path);
  check_square_match(theta, "precision", x.cols());
  const PrecisionEstimate pe(theta);
  const Eigen::VectorXd d = a.d_mode == "zero"
                                ? Eigen::VectorXd::Zero(pe.dim()).eval()
                                : select_equicorrelated_d(pe);
  const KnockoffMechanism mech = build_mechanism(pe, d);
  io::write_csv_matrix(a.out_path, sample_knockoffs(mech, x, a.seed), "xt");
}

struct FilterArgs {
  std::string x_path, xk_path, y_path, out_path;
  double q = 0.0;
  std::string variant = "knockoff+";
  std::string statistic = "lcd";
  double lambda_fraction = 0.1;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void run_filter(const FilterArgs& a) {
  const Eigen::MatrixXd x = io::read_csv_matrix(a.x_path);
  const Eigen::MatrixXd xk = io::read_csv_matrix(a.xk_path);
  const Eigen::VectorXd y = io::read_csv_vector(a.y_path);
  const AugmentedDesign design(x, xk);
  if (y.size() != design.n)
    throw ValidationError("y has " + std::to_string(y.size()) +
                          " rows but X has " + std::to_string(design.n));

  WStatistics stats;
  if (a.statistic == "marginal") {
    if (a.seed_given)
      throw ValidationError(
          "the marginal statistic is deterministic and takes no --seed");
    stats = marginal_stats(design, y);
  } else {
    if (!a.seed_given)
      throw ValidationError(
          "the lcd statistic needs --seed for its column permutation");
    stats = lcd_stats(design, y, a.lambda_fraction, a.seed);
    if (!stats.solver_converged)
      throw NumericalError("lasso did not converge within the pass budget");
  }

  const FilterVariant variant = a.variant == "knockoff"
                                    ? FilterVariant::knockoff
                                    : FilterVariant::knockoff_plus;
  nlohmann::json j = io::selection_to_json(apply_filter(stats.w, a.q, variant),
                                           stats);
  j["format_version"] = 1;
  j["build_id"] = kBuildId;
  if (a.seed_given) j["seed"] = a.seed;
  io::write_json(a.out_path, j);
}

struct PathsArgs {
  std::string config_path, out_path;
  int threads = 0;
};

void run_simulate(const PathsArgs& a) {
  const ScenarioConfig config = io::scenario_from_json(io::load_json(a.config_path));
  const Scenario scenario = build_scenario(config);
  const auto records = run_scenario(scenario, resolve_threads(a.threads));
  const MonteCarloReport report = estimate_fdr_power(
      records, scenario.truth, config, default_epsilon_grid(),
      scenario.delta_theta_value);
  io::write_json(a.out_path, io::mc_report_to_json(report, config));
}

struct DiagnoseArgs {
  std::string x_path, xk_path, precision_path, estimate_path, out_path;
  double q = 0.0;
  double delta = 0.0;
  bool delta_given = false;
};

void run_diagnose(const DiagnoseArgs& a) {
  const Eigen::MatrixXd x = io::read_csv_matrix(a.x_path);
  const Eigen::MatrixXd xk = io::read_csv_matrix(a.xk_path);
  if (x.rows() != xk.rows() || x.cols() != xk.cols())
    throw ValidationError("X and knockoff matrices must have the same shape");
  const Eigen::MatrixXd theta = io::read_csv_matrix(a.precision_path);
  const Eigen::MatrixXd theta_est = io::read_csv_matrix(a.estimate_path);
  check_square_match(theta, "precision", x.cols());
  check_square_match(theta_est, "precision estimate", x.cols());

  const GaussianModel model(theta);
  const PrecisionEstimate estimate(theta_est);
  const KlDiagnostics diag =
      observed_kl(x, xk, gaussian_conditional_evaluator(model.theta),
                  gaussian_conditional_evaluator(estimate.theta));
  const double dt = delta_theta(model, estimate);

  // One dataset gives one indicator per grid point, so the exceedance
  // estimates are single-trial; the Monte Carlo path in `simulate` is the
  // one that averages over replicates.
  const std::vector<double> grid = default_epsilon_grid();
  std::vector<IntervalEstimate> exceedance;
  exceedance.reserve(grid.size());
  for (double eps : grid)
    exceedance.push_back(wilson_interval(diag.max_kl > eps ? 1 : 0, 1));
  BoundReport bounds = inflation_bound(a.q, grid, exceedance);
  bounds.delta_theta_value = dt;
  if (dt < 1.0)
    bounds.kl_bound_gaussian = gaussian_kl_bound(x.rows(), x.cols(), dt);
  if (a.delta_given)
    bounds.kl_bound_uniform = kl_tail_bound(x.rows(), x.cols(), a.delta);

  nlohmann::json j;
  j["format_version"] = 1;
  j["build_id"] = kBuildId;
  j["n"] = x.rows();
  j["p"] = x.cols();
  j["kl_hat"] = std::vector<double>(diag.kl_hat.data(),
                                    diag.kl_hat.data() + diag.kl_hat.size());
  j["max_kl"] = diag.max_kl;
  if (a.delta_given)
    j["squared_summand_budget_holds"] =
        squared_summand_budget_holds(diag.per_observation_terms, a.delta);
  j["bounds"] = io::bounds_to_json(bounds);
  io::write_json(a.out_path, j);
}

void run_adversary(const PathsArgs& a) {
  const io::AdversaryConfig config =
      io::adversary_from_json(io::load_json(a.config_path));
  const Eigen::MatrixXd theta = gen_ar1_precision(config.p, config.ar1_rho);
  const GaussianModel model(theta);
  const PrecisionEstimate estimate = perturb_precision(
      theta, config.delta_theta_target,
      derive_seed(config.seed, {stream::kPerturb}));

  const AdversaryScenario scenario{model, estimate, config.n,
                                   config.feature - 1, config.q};
  const AdversaryLevels levels = monte_carlo_levels(
      scenario, config.replicates, config.seed, resolve_threads(a.threads));

  nlohmann::json j = io::envelope(config.seed);
  j["config"] = io::adversary_to_json(config);
  j["delta_theta_realized"] = delta_theta(model, estimate);
  j.update(io::adversary_levels_to_json(levels));
  io::write_json(a.out_path, j);
}

struct VerifyArgs {
  int instances = 100;
  std::uint64_t seed = 0;
  std::string out_path;
};

int run_verify(const VerifyArgs& a) {
  const OracleVerification v = verify_discrete_oracle(a.instances, a.seed);
  nlohmann::json j = io::envelope(a.seed);
  j["instances"] = v.instances;
  j["max_exchangeability_deviation"] = v.max_exchangeability_deviation;
  j["max_likelihood_ratio_error"] = v.max_likelihood_ratio_error;
  j["max_marginalization_error"] = v.max_marginalization_error;
  j["passed"] = v.passed();
  io::write_json(a.out_path, j);
  std::cout << (v.passed() ? "passed" : "FAILED") << " on " << v.instances
            << " instances\n";
  return v.passed() ? 0 : 2;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"approximate model-X knockoffs: sampling, filtering, and "
               "robustness diagnostics"};
  app.set_version_flag("--version", std::string(kBuildId));
  app.require_subcommand(1);
  int exit_code = 0;

  SampleArgs sample;
  auto* sample_cmd = app.add_subcommand(
      "sample", "draw Gaussian knockoff copies for a data matrix");
  sample_cmd->add_option("--x", sample.x_path, "data matrix CSV")->required();
  sample_cmd->add_option("--precision", sample.precision_path,
                         "precision matrix CSV (p x p)")
      ->required();
  sample_cmd->add_option("--out", sample.out_path, "knockoff CSV to write")
      ->required();
  sample_cmd->add_option("--seed", sample.seed, "RNG seed")->required();
  sample_cmd
      ->add_option("--d-mode", sample.d_mode,
                   "diagonal selection (zero copies X verbatim)")
      ->check(CLI::IsMember({"equicorrelated", "zero"}));
  sample_cmd->callback([&] { run_sample(sample); });

  FilterArgs filter;
  auto* filter_cmd = app.add_subcommand(
      "filter", "compute W statistics and the selection threshold");
  filter_cmd->add_option("--x", filter.x_path, "data matrix CSV")->required();
  filter_cmd->add_option("--xk", filter.xk_path, "knockoff matrix CSV")
      ->required();
  filter_cmd->add_option("--y", filter.y_path, "response CSV (one column)")
      ->required();
  filter_cmd->add_option("--q", filter.q, "target FDR level in (0,1)")
      ->required();
  filter_cmd->add_option("--variant", filter.variant, "threshold rule")
      ->check(CLI::IsMember({"knockoff", "knockoff+"}));
  filter_cmd->add_option("--statistic", filter.statistic, "W statistic")
      ->check(CLI::IsMember({"marginal", "lcd"}));
  filter_cmd->add_option("--lambda-fraction", filter.lambda_fraction,
                         "lasso penalty as a fraction of lambda_max");
  auto* filter_seed =
      filter_cmd->add_option("--seed", filter.seed, "RNG seed (lcd only)");
  filter_cmd->add_option("--out", filter.out_path, "selection JSON to write")
      ->required();
  filter_cmd->callback([&] {
    filter.seed_given = filter_seed->count() > 0;
    run_filter(filter);
  });

  PathsArgs simulate;
  auto* simulate_cmd = app.add_subcommand(
      "simulate", "Monte Carlo FDR/power study from a config file");
  simulate_cmd->add_option("--config", simulate.config_path, "scenario JSON")
      ->required();
  simulate_cmd->add_option("--out", simulate.out_path, "report JSON to write")
      ->required();
  simulate_cmd
      ->add_option("--threads", simulate.threads,
                   "worker threads (default: KNOCKOFF_THREADS, else all cores)")
      ->check(CLI::PositiveNumber);
  simulate_cmd->callback([&] { run_simulate(simulate); });

  DiagnoseArgs diagnose;
  auto* diagnose_cmd = app.add_subcommand(
      "diagnose", "observed-KL diagnostic and FDR inflation bounds for one "
                  "dataset (needs the true precision, so simulations only)");
  diagnose_cmd->add_option("--x", diagnose.x_path, "data matrix CSV")
      ->required();
  diagnose_cmd->add_option("--xk", diagnose.xk_path, "knockoff matrix CSV")
      ->required();
  diagnose_cmd
      ->add_option("--precision", diagnose.precision_path,
                   "true precision CSV")
      ->required();
  diagnose_cmd
      ->add_option("--precision-estimate", diagnose.estimate_path,
                   "estimated precision CSV (the one knockoffs used)")
      ->required();
  diagnose_cmd->add_option("--q", diagnose.q, "target FDR level in (0,1)")
      ->required();
  auto* delta_opt = diagnose_cmd->add_option(
      "--delta", diagnose.delta,
      "per-term log-ratio bound for the distribution-free envelope");
  diagnose_cmd->add_option("--out", diagnose.out_path, "report JSON to write")
      ->required();
  diagnose_cmd->callback([&] {
    diagnose.delta_given = delta_opt->count() > 0;
    run_diagnose(diagnose);
  });

  PathsArgs adversary;
  auto* adversary_cmd = app.add_subcommand(
      "adversary", "level of the randomized KL detector under the estimated "
                   "and the true model");
  adversary_cmd->add_option("--config", adversary.config_path, "config JSON")
      ->required();
  adversary_cmd->add_option("--out", adversary.out_path, "report JSON to write")
      ->required();
  adversary_cmd
      ->add_option("--threads", adversary.threads,
                   "worker threads (default: KNOCKOFF_THREADS, else all cores)")
      ->check(CLI::PositiveNumber);
  adversary_cmd->callback([&] { run_adversary(adversary); });

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand(
      "verify", "exhaustive exchangeability checks of the discrete sampler "
                "on random small instances");
  verify_cmd->add_option("--instances", verify.instances, "instances to run")
      ->check(CLI::PositiveNumber);
  verify_cmd->add_option("--seed", verify.seed, "RNG seed")->required();
  verify_cmd->add_option("--out", verify.out_path, "report JSON to write")
      ->required();
  verify_cmd->callback([&] { exit_code = run_verify(verify); });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return exit_code;
}

}  // namespace knockoffs
