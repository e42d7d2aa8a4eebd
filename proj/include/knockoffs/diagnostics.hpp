#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "knockoffs/gaussian.hpp"
#include "knockoffs/util.hpp"

namespace knockoffs {

// log density (or log pmf) of feature j at `value`, conditioning on the rest
// of the row; entry j of the row is ignored.
using ConditionalLogDensity =
    std::function<double(int j, const Eigen::RowVectorXd& row, double value)>;

struct KlDiagnostics {
  Eigen::VectorXd kl_hat;                 // column sums of the terms
  double max_kl = 0.0;
  Eigen::MatrixXd per_observation_terms;  // n x p
};

// Observed log likelihood ratio between the swapped and unswapped pair, one
// term per observation and feature:
//   term_ij = [log p_j(x_ij) - log q_j(x_ij)] - [log p_j(xt_ij) - log q_j(xt_ij)],
// all conditioned on x_{i,-j}. Computed as a difference of the two bracketed
// values so identical evaluators cancel exactly and a column swap negates the
// term exactly. Needs the true conditionals, so outside simulations it is
// only available where an oracle is.
KlDiagnostics observed_kl(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xt,
                          const ConditionalLogDensity& p_log,
                          const ConditionalLogDensity& q_log);

// Single-feature version for hot loops.
double observed_kl_feature(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xt,
                           int j, const ConditionalLogDensity& p_log,
                           const ConditionalLogDensity& q_log);

// Evaluator reading every one-feature conditional off a precision matrix.
ConditionalLogDensity gaussian_conditional_evaluator(const Eigen::MatrixXd& theta);

// Column-wise relative error of a precision estimate:
//   max_j (theta_jj)^(-1/2) * || theta^(-1/2) (theta~_j - theta_j) ||_2.
double delta_theta(const GaussianModel& model, const PrecisionEstimate& estimate);

// Same measure applied to a raw difference matrix; linear in its scale.
double delta_theta_diff(const GaussianModel& model, const Eigen::MatrixXd& diff);

// High-probability envelope for max_j KL_j when every per-observation
// log-ratio term is bounded by delta: n delta^2 / 2 + 2 delta sqrt(n log p).
// Holds with probability at least 1 - 1/p.
double kl_tail_bound(long n, int p, double delta);

// Per-observation summand envelope implied by a column-error level
// delta_theta in the Gaussian model, the explicit form
//   2 sqrt(r^2 + r^4) (1 + 2 sqrt(log(n p) / n)),  r = dt / (1 - dt).
double gaussian_summand_delta(double dt, long n, int p);

// kl_tail_bound evaluated at gaussian_summand_delta; holds with probability
// at least 1 - 2/p under the Gaussian model.
double gaussian_kl_bound(long n, int p, double dt);

// True iff sum_i term_ij^2 <= n delta^2 for every column j.
bool squared_summand_budget_holds(const Eigen::MatrixXd& terms, double delta);

// FDR inflation certificate: q e^eps plus the estimated exceedance
// probability of max-over-nulls KL, minimized over a grid of eps.
struct BoundReport {
  std::vector<double> epsilon_grid;
  std::vector<IntervalEstimate> exceedance;  // P(max_null KL > eps) estimates
  std::vector<double> inflation_bound;       // q e^eps + exceedance mean
  double best_bound = 0.0;
  double best_epsilon = 0.0;
  double q = 0.0;
  double delta_theta_value = 0.0;
  std::optional<double> kl_bound_uniform;   // needs a uniform log-ratio bound
  std::optional<double> kl_bound_gaussian;  // column-error route
};

// eps = 0 plus 50 geometric points from 1e-3 to 5.
std::vector<double> default_epsilon_grid();

BoundReport inflation_bound(double q, const std::vector<double>& epsilon_grid,
                            const std::vector<IntervalEstimate>& exceedance);

}  // namespace knockoffs
