#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "knockoffs/diagnostics.hpp"
#include "knockoffs/filter.hpp"
#include "knockoffs/gaussian.hpp"
#include "knockoffs/statistics.hpp"
#include "knockoffs/util.hpp"

namespace knockoffs {

enum class ResponseKind { linear_gaussian, logistic };
enum class PrecisionModeKind { exact, column_perturb, nodewise_lasso };

struct PrecisionMode {
  PrecisionModeKind kind = PrecisionModeKind::exact;
  double delta_target = 0.0;      // column_perturb
  long unlabeled_n = 0;           // nodewise_lasso
  double lambda_fraction = 0.1;   // nodewise_lasso
};

struct ScenarioConfig {
  long n = 0;
  int p = 0;
  double ar1_rho = 0.0;
  int signal_count = 0;
  double signal_amplitude = 0.0;
  ResponseKind response_kind = ResponseKind::linear_gaussian;
  double q = 0.0;
  StatisticKind statistic_kind = StatisticKind::lcd;
  double lambda_fraction = 0.1;  // lcd statistic
  FilterVariant variant = FilterVariant::knockoff_plus;
  PrecisionMode precision;
  long replicates = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

// k evenly spaced signal positions, amplitudes alternating in sign.
struct SimulationTruth {
  std::vector<int> nonnull;  // ascending
  Eigen::VectorXd beta;

  bool is_null(int j) const;
};

// Precision of the AR(1) covariance rho^|i-j| (tridiagonal closed form).
Eigen::MatrixXd gen_ar1_precision(int p, double rho);

// Adds a random symmetric perturbation rescaled so the column-error measure
// hits delta_target within 1e-6. Fails if the perturbed diagonal is not
// positive.
PrecisionEstimate perturb_precision(const Eigen::MatrixXd& theta,
                                    double delta_target, std::uint64_t seed);

// Per-column lasso regressions on unlabeled rows; coefficients and residual
// variances assembled into a precision estimate, then symmetrized.
PrecisionEstimate nodewise_estimate(const Eigen::MatrixXd& unlabeled,
                                    double lambda_fraction);

SimulationTruth make_truth(const ScenarioConfig& config);

// Everything shared across replicates: the true model, the (possibly
// estimated) precision driving knockoffs, the frozen mechanism, sampling
// roots, and the realized column-error level.
struct Scenario {
  ScenarioConfig config;
  GaussianModel model;
  PrecisionEstimate estimate;
  SimulationTruth truth;
  KnockoffMechanism mechanism;
  Eigen::MatrixXd sigma_root;  // sampling root of the true covariance
  double delta_theta_value = 0.0;
};

Scenario build_scenario(const ScenarioConfig& config);

struct ReplicateRecord {
  Eigen::VectorXd w;
  Eigen::VectorXd kl_hat;
  std::vector<int> selected;
  double threshold = 0.0;
  int n_selected = 0;
  int n_false = 0;
  double fdp = 0.0;
  double power = 0.0;
  double max_kl = 0.0;
  double max_null_kl = 0.0;
};

// Deterministic in (config.seed, index) regardless of thread count.
ReplicateRecord run_replicate(const Scenario& scenario, long index);
ReplicateRecord run_replicate(const ScenarioConfig& config, long index);

std::vector<ReplicateRecord> run_scenario(const Scenario& scenario, int threads);

struct MonteCarloReport {
  IntervalEstimate fdr;
  IntervalEstimate power;
  IntervalEstimate modified_fdr;  // |S cap H0| / (|S| + 1/q)
  std::vector<double> restricted_fdr;     // per epsilon: nulls with KL <= eps
  std::vector<double> restricted_fdr_se;
  BoundReport bounds;
  // per replicate: selected count, false count, max KL
  std::vector<std::array<double, 3>> per_replicate;
};

MonteCarloReport estimate_fdr_power(const std::vector<ReplicateRecord>& records,
                                    const SimulationTruth& truth,
                                    const ScenarioConfig& config,
                                    const std::vector<double>& epsilon_grid,
                                    double delta_theta_value);

}  // namespace knockoffs
