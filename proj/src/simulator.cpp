#include "knockoffs/simulator.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "knockoffs/errors.hpp"
#include "knockoffs/parallel.hpp"
#include "knockoffs/rng.hpp"

namespace knockoffs {

void ScenarioConfig::validate() const {
  if (n < 1) throw ValidationError("config: n must be at least 1");
  if (p < 2) throw ValidationError("config: p must be at least 2");
  if (!(ar1_rho > -1.0 && ar1_rho < 1.0))
    throw ValidationError("config: ar1_rho must be in (-1, 1)");
  if (signal_count < 0 || signal_count > p)
    throw ValidationError("config: signal_count must be in 0..p");
  if (!(signal_amplitude >= 0.0) || !std::isfinite(signal_amplitude))
    throw ValidationError("config: signal_amplitude must be finite and >= 0");
  if (!(q > 0.0 && q < 1.0)) throw ValidationError("config: q must be in (0,1)");
  if (statistic_kind == StatisticKind::lcd &&
      !(lambda_fraction > 0.0 && lambda_fraction <= 1.0))
    throw ValidationError("config: lambda_fraction must be in (0, 1]");
  if (replicates < 1)
    throw ValidationError("config: replicates must be at least 1");
  switch (precision.kind) {
    case PrecisionModeKind::exact:
      break;
    case PrecisionModeKind::column_perturb:
      if (!(precision.delta_target >= 0.0) ||
          !std::isfinite(precision.delta_target))
        throw ValidationError("config: delta_target must be finite and >= 0");
      break;
    case PrecisionModeKind::nodewise_lasso:
      if (precision.unlabeled_n < 2)
        throw ValidationError("config: unlabeled_n must be at least 2");
      if (!(precision.lambda_fraction > 0.0))
        throw ValidationError("config: nodewise lambda_fraction must be > 0");
      break;
  }
}

bool SimulationTruth::is_null(int j) const {
  return beta(j) == 0.0;
}

Eigen::MatrixXd gen_ar1_precision(int p, double rho) {
  if (p < 1) throw ValidationError("gen_ar1_precision: p must be at least 1");
  if (!(rho > -1.0 && rho < 1.0))
    throw ValidationError("gen_ar1_precision: rho must be in (-1, 1)");
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(p, p);
  const double scale = 1.0 / (1.0 - rho * rho);
  for (int j = 0; j < p; ++j) {
    const bool interior = j > 0 && j < p - 1;
    theta(j, j) = (interior ? 1.0 + rho * rho : 1.0) * scale;
    if (j + 1 < p) {
      theta(j, j + 1) = -rho * scale;
      theta(j + 1, j) = -rho * scale;
    }
  }
  if (p == 1) theta(0, 0) = 1.0;
  return theta;
}

PrecisionEstimate perturb_precision(const Eigen::MatrixXd& theta,
                                    double delta_target, std::uint64_t seed) {
  const GaussianModel model(theta);
  if (!(delta_target >= 0.0))
    throw ValidationError("perturb_precision: delta_target must be >= 0");
  if (delta_target == 0.0) return PrecisionEstimate(theta);

  const int p = model.dim();
  auto eng = make_stream(seed, {stream::kPerturb});
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) g(i, j) = gauss(eng);
  const Eigen::MatrixXd e = 0.5 * (g + g.transpose());

  // The column-error measure is linear in the perturbation scale, so one
  // rescale lands on the target exactly.
  const double unit = delta_theta_diff(model, e);
  if (!(unit > 0.0))
    throw NumericalError("perturb_precision: degenerate perturbation draw");
  const double alpha = delta_target / unit;
  const Eigen::MatrixXd perturbed = theta + alpha * e;
  for (int j = 0; j < p; ++j)
    if (!(perturbed(j, j) > 0.0))
      throw NumericalError(
          "perturb_precision: rescaled perturbation does not keep the "
          "diagonal positive");

  PrecisionEstimate out(perturbed);
  const double realized = delta_theta(model, out);
  if (std::abs(realized - delta_target) > 1e-6)
    throw NumericalError("perturb_precision: realized delta " +
                         std::to_string(realized) + " missed the target");
  return out;
}

PrecisionEstimate nodewise_estimate(const Eigen::MatrixXd& unlabeled,
                                    double lambda_fraction) {
  const auto n = unlabeled.rows();
  const auto p = unlabeled.cols();
  if (n < 2 || p < 2)
    throw ValidationError("nodewise_estimate: need at least 2 rows and columns");
  if (!unlabeled.allFinite())
    throw ValidationError("nodewise_estimate: non-finite entries");
  if (!(lambda_fraction > 0.0))
    throw ValidationError("nodewise_estimate: lambda_fraction must be > 0");

  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd rest(n, p - 1);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = 0; k < p; ++k) {
      if (k == j) continue;
      rest.col(k < j ? k : k - 1) = unlabeled.col(k);
    }
    const Eigen::VectorXd target = unlabeled.col(j);

    double lambda_max = 0.0;
    for (Eigen::Index k = 0; k + 1 < p; ++k)
      lambda_max =
          std::max(lambda_max, std::abs(rest.col(k).dot(target)) / n);

    Eigen::VectorXd coef = Eigen::VectorXd::Zero(p - 1);
    if (lambda_max > 0.0) {
      const LassoResult fit =
          lasso_coordinate_descent(rest, target, lambda_fraction * lambda_max);
      if (!fit.converged)
        throw NumericalError("nodewise_estimate: lasso did not converge for "
                             "column " + std::to_string(j));
      coef = fit.beta;
    }

    const double rss = (target - rest * coef).squaredNorm();
    const double var = rss / static_cast<double>(n);
    if (!(var > 1e-12))
      throw NumericalError("nodewise_estimate: zero residual variance at "
                           "column " + std::to_string(j));
    theta(j, j) = 1.0 / var;
    for (Eigen::Index k = 0; k < p; ++k) {
      if (k == j) continue;
      theta(k, j) = -coef(k < j ? k : k - 1) / var;
    }
  }
  // PrecisionEstimate symmetrizes and runs the eigenvalue check.
  return PrecisionEstimate(theta);
}

SimulationTruth make_truth(const ScenarioConfig& config) {
  SimulationTruth truth;
  truth.beta = Eigen::VectorXd::Zero(config.p);
  const int k = config.signal_count;
  for (int i = 0; i < k; ++i) {
    const int j = static_cast<int>(
        (static_cast<long>(i) * config.p) / k);
    truth.nonnull.push_back(j);
    truth.beta(j) = (i % 2 == 0 ? 1.0 : -1.0) * config.signal_amplitude;
  }
  return truth;
}

Scenario build_scenario(const ScenarioConfig& config) {
  config.validate();
  GaussianModel model(gen_ar1_precision(config.p, config.ar1_rho));

  PrecisionEstimate estimate = [&] {
    switch (config.precision.kind) {
      case PrecisionModeKind::column_perturb:
        return perturb_precision(model.theta, config.precision.delta_target,
                                 derive_seed(config.seed, {stream::kPerturb}));
      case PrecisionModeKind::nodewise_lasso: {
        // Unlabeled rows drawn once; the estimate is frozen across replicates
        // so the knockoff conditionals never depend on the analyzed data.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.theta);
        const Eigen::MatrixXd root =
            es.eigenvectors() *
            es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
            es.eigenvectors().transpose();
        auto eng = make_stream(config.seed, {stream::kUnlabeled});
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::MatrixXd z(config.precision.unlabeled_n, config.p);
        for (long i = 0; i < config.precision.unlabeled_n; ++i)
          for (int j = 0; j < config.p; ++j) z(i, j) = gauss(eng);
        return nodewise_estimate(z * root.transpose(),
                                 config.precision.lambda_fraction);
      }
      case PrecisionModeKind::exact:
      default:
        return PrecisionEstimate(model.theta);
    }
  }();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.theta);
  if (es.info() != Eigen::Success)
    throw NumericalError("build_scenario: eigendecomposition failed");

  Scenario scenario{config,
                    model,
                    estimate,
                    make_truth(config),
                    build_mechanism(estimate, select_equicorrelated_d(estimate)),
                    es.eigenvectors() *
                        es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                        es.eigenvectors().transpose(),
                    0.0};
  scenario.delta_theta_value = delta_theta(model, estimate);
  return scenario;
}

ReplicateRecord run_replicate(const Scenario& scenario, long index) {
  const ScenarioConfig& cfg = scenario.config;
  const std::uint64_t rep = static_cast<std::uint64_t>(index);

  // Design rows under the true model.
  auto eng_x = make_stream(cfg.seed, {stream::kDesign, rep});
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd z(cfg.n, cfg.p);
  for (long i = 0; i < cfg.n; ++i)
    for (int j = 0; j < cfg.p; ++j) z(i, j) = gauss(eng_x);
  const Eigen::MatrixXd x = z * scenario.sigma_root.transpose();

  // Response.
  auto eng_y = make_stream(cfg.seed, {stream::kNoise, rep});
  const Eigen::VectorXd mean = x * scenario.truth.beta;
  Eigen::VectorXd y(cfg.n);
  if (cfg.response_kind == ResponseKind::linear_gaussian) {
    for (long i = 0; i < cfg.n; ++i) y(i) = mean(i) + gauss(eng_y);
  } else {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (long i = 0; i < cfg.n; ++i)
      y(i) = unif(eng_y) < 1.0 / (1.0 + std::exp(-mean(i))) ? 1.0 : 0.0;
  }

  const Eigen::MatrixXd xt = sample_knockoffs(
      scenario.mechanism, x, derive_seed(cfg.seed, {stream::kKnockoff, rep}));

  const AugmentedDesign design(x, xt);
  WStatistics stats =
      cfg.statistic_kind == StatisticKind::marginal
          ? marginal_stats(design, y)
          : lcd_stats(design, y, cfg.lambda_fraction,
                      derive_seed(cfg.seed, {stream::kPermutation, rep}));
  if (!stats.solver_converged)
    throw NumericalError("run_replicate: statistic solver did not converge");

  const SelectionResult sel = apply_filter(stats.w, cfg.q, cfg.variant);

  const KlDiagnostics kl = observed_kl(
      x, xt, gaussian_conditional_evaluator(scenario.model.theta),
      gaussian_conditional_evaluator(scenario.estimate.theta));

  ReplicateRecord rec;
  rec.w = stats.w;
  rec.kl_hat = kl.kl_hat;
  rec.selected = sel.selected;
  rec.threshold = sel.threshold;
  rec.n_selected = static_cast<int>(sel.selected.size());
  for (int j : sel.selected)
    if (scenario.truth.is_null(j)) ++rec.n_false;
  rec.fdp = rec.n_selected > 0
                ? static_cast<double>(rec.n_false) / rec.n_selected
                : 0.0;
  const int k = static_cast<int>(scenario.truth.nonnull.size());
  rec.power =
      k > 0 ? static_cast<double>(rec.n_selected - rec.n_false) / k : 0.0;
  rec.max_kl = kl.max_kl;
  rec.max_null_kl = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < cfg.p; ++j)
    if (scenario.truth.is_null(j))
      rec.max_null_kl = std::max(rec.max_null_kl, rec.kl_hat(j));
  return rec;
}

ReplicateRecord run_replicate(const ScenarioConfig& config, long index) {
  return run_replicate(build_scenario(config), index);
}

std::vector<ReplicateRecord> run_scenario(const Scenario& scenario, int threads) {
  std::vector<ReplicateRecord> records(
      static_cast<std::size_t>(scenario.config.replicates));
  parallel_for_index(scenario.config.replicates, threads, [&](long r) {
    records[static_cast<std::size_t>(r)] = run_replicate(scenario, r);
  });
  return records;
}

MonteCarloReport estimate_fdr_power(const std::vector<ReplicateRecord>& records,
                                    const SimulationTruth& truth,
                                    const ScenarioConfig& config,
                                    const std::vector<double>& epsilon_grid,
                                    double delta_theta_value) {
  if (records.empty())
    throw ValidationError("estimate_fdr_power: no replicates");

  const auto r = records.size();
  std::vector<double> fdp(r), power(r), modified(r);
  for (std::size_t i = 0; i < r; ++i) {
    fdp[i] = records[i].fdp;
    power[i] = records[i].power;
    modified[i] = static_cast<double>(records[i].n_false) /
                  (records[i].n_selected + 1.0 / config.q);
  }

  MonteCarloReport out;
  out.fdr = mean_interval(fdp);
  out.power = mean_interval(power);
  out.modified_fdr = mean_interval(modified);

  std::vector<IntervalEstimate> exceedance;
  exceedance.reserve(epsilon_grid.size());
  std::vector<double> restricted(r);
  for (double eps : epsilon_grid) {
    long hits = 0;
    for (std::size_t i = 0; i < r; ++i) {
      if (records[i].max_null_kl > eps) ++hits;
      int kept = 0;
      for (int j : records[i].selected)
        if (truth.is_null(j) && records[i].kl_hat(j) <= eps) ++kept;
      restricted[i] =
          static_cast<double>(kept) / std::max(records[i].n_selected, 1);
    }
    exceedance.push_back(
        wilson_interval(hits, static_cast<long>(r)));
    const IntervalEstimate m = mean_interval(restricted);
    out.restricted_fdr.push_back(m.mean);
    out.restricted_fdr_se.push_back(m.se);
  }

  out.bounds = inflation_bound(config.q, epsilon_grid, exceedance);
  out.bounds.delta_theta_value = delta_theta_value;
  out.bounds.kl_bound_gaussian =
      delta_theta_value < 1.0
          ? std::optional<double>(
                gaussian_kl_bound(config.n, config.p, delta_theta_value))
          : std::nullopt;
  // No uniform per-observation log-ratio bound exists for Gaussian tails, so
  // the uniform-route bound stays unset here; discrete scenarios fill it.

  out.per_replicate.reserve(r);
  for (const auto& rec : records)
    out.per_replicate.push_back({static_cast<double>(rec.n_selected),
                                 static_cast<double>(rec.n_false), rec.max_kl});
  return out;
}

}  // namespace knockoffs
