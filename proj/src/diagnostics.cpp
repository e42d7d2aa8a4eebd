#include "knockoffs/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "knockoffs/errors.hpp"

namespace knockoffs {

namespace {

void check_pair(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xt,
                const char* who) {
  if (x.rows() != xt.rows() || x.cols() != xt.cols())
    throw ValidationError(std::string(who) + ": x and xt shapes differ");
  if (x.cols() == 0)
    throw ValidationError(std::string(who) + ": no features");
  if (!x.allFinite() || !xt.allFinite())
    throw ValidationError(std::string(who) + ": non-finite entries");
}

double kl_term(int j, const Eigen::RowVectorXd& row, double xv, double xtv,
               const ConditionalLogDensity& p_log,
               const ConditionalLogDensity& q_log, Eigen::Index i) {
  const double dx = p_log(j, row, xv) - q_log(j, row, xv);
  const double dxt = p_log(j, row, xtv) - q_log(j, row, xtv);
  const double term = dx - dxt;
  if (!std::isfinite(term))
    throw NumericalError("observed_kl: non-finite log ratio at observation " +
                         std::to_string(i) + ", feature " + std::to_string(j));
  return term;
}

}  // namespace

KlDiagnostics observed_kl(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xt,
                          const ConditionalLogDensity& p_log,
                          const ConditionalLogDensity& q_log) {
  check_pair(x, xt, "observed_kl");
  const auto n = x.rows();
  const int p = static_cast<int>(x.cols());

  KlDiagnostics out;
  out.per_observation_terms.resize(n, p);
  out.kl_hat = Eigen::VectorXd::Zero(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd row = x.row(i);
    for (int j = 0; j < p; ++j)
      out.per_observation_terms(i, j) =
          kl_term(j, row, x(i, j), xt(i, j), p_log, q_log, i);
  }
  for (int j = 0; j < p; ++j) out.kl_hat(j) = out.per_observation_terms.col(j).sum();
  out.max_kl = out.kl_hat.maxCoeff();
  return out;
}

double observed_kl_feature(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xt,
                           int j, const ConditionalLogDensity& p_log,
                           const ConditionalLogDensity& q_log) {
  check_pair(x, xt, "observed_kl_feature");
  if (j < 0 || j >= x.cols())
    throw ValidationError("observed_kl_feature: feature index out of range");
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::RowVectorXd row = x.row(i);
    s += kl_term(j, row, x(i, j), xt(i, j), p_log, q_log, i);
  }
  return s;
}

ConditionalLogDensity gaussian_conditional_evaluator(const Eigen::MatrixXd& theta) {
  auto conds = std::make_shared<std::vector<ConditionalGaussian>>();
  conds->reserve(static_cast<std::size_t>(theta.rows()));
  for (int j = 0; j < theta.rows(); ++j) conds->push_back(conditional_of(theta, j));
  return [conds](int j, const Eigen::RowVectorXd& row, double value) {
    return (*conds)[static_cast<std::size_t>(j)].log_density_row(j, row, value);
  };
}

double delta_theta_diff(const GaussianModel& model,
                        const Eigen::MatrixXd& diff) {
  if (diff.rows() != model.dim() || diff.cols() != model.dim())
    throw ValidationError("delta_theta: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.theta);
  if (es.info() != Eigen::Success)
    throw NumericalError("delta_theta: eigendecomposition failed");
  const Eigen::MatrixXd inv_root =
      es.eigenvectors() *
      es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
      es.eigenvectors().transpose();

  double worst = 0.0;
  for (int j = 0; j < model.dim(); ++j) {
    const double col = (inv_root * diff.col(j)).norm() / std::sqrt(model.theta(j, j));
    worst = std::max(worst, col);
  }
  return worst;
}

double delta_theta(const GaussianModel& model, const PrecisionEstimate& estimate) {
  if (model.dim() != estimate.dim())
    throw ValidationError("delta_theta: dimension mismatch");
  return delta_theta_diff(model, estimate.theta - model.theta);
}

double kl_tail_bound(long n, int p, double delta) {
  if (n < 0 || p < 2)
    throw ValidationError("kl_tail_bound: need n >= 0 and p >= 2");
  if (!(delta >= 0.0))
    throw ValidationError("kl_tail_bound: delta must be nonnegative");
  const double dn = static_cast<double>(n);
  return dn * delta * delta / 2.0 +
         2.0 * delta * std::sqrt(dn * std::log(static_cast<double>(p)));
}

double gaussian_summand_delta(double dt, long n, int p) {
  if (!(dt >= 0.0 && dt < 1.0))
    throw ValidationError("gaussian_summand_delta: delta_theta must be in [0,1)");
  if (n < 1 || p < 1)
    throw ValidationError("gaussian_summand_delta: need n, p >= 1");
  const double r = dt / (1.0 - dt);
  const double dn = static_cast<double>(n);
  return 2.0 * std::sqrt(r * r + r * r * r * r) *
         (1.0 + 2.0 * std::sqrt(std::log(dn * p) / dn));
}

double gaussian_kl_bound(long n, int p, double dt) {
  return kl_tail_bound(n, p, gaussian_summand_delta(dt, n, p));
}

bool squared_summand_budget_holds(const Eigen::MatrixXd& terms, double delta) {
  if (!(delta >= 0.0))
    throw ValidationError("squared_summand_budget_holds: delta must be >= 0");
  const double budget =
      static_cast<double>(terms.rows()) * delta * delta;
  for (Eigen::Index j = 0; j < terms.cols(); ++j)
    if (terms.col(j).squaredNorm() > budget) return false;
  return true;
}

std::vector<double> default_epsilon_grid() {
  std::vector<double> grid;
  grid.push_back(0.0);
  const double lo = 1e-3, hi = 5.0;
  const int points = 50;
  for (int i = 0; i < points; ++i)
    grid.push_back(lo * std::pow(hi / lo, static_cast<double>(i) /
                                              static_cast<double>(points - 1)));
  return grid;
}

BoundReport inflation_bound(double q, const std::vector<double>& epsilon_grid,
                            const std::vector<IntervalEstimate>& exceedance) {
  if (!(q > 0.0 && q < 1.0))
    throw ValidationError("inflation_bound: q must be in (0,1)");
  if (epsilon_grid.empty() || epsilon_grid.size() != exceedance.size())
    throw ValidationError("inflation_bound: grid and exceedance sizes differ");

  BoundReport out;
  out.q = q;
  out.epsilon_grid = epsilon_grid;
  out.exceedance = exceedance;
  out.inflation_bound.reserve(epsilon_grid.size());
  out.best_bound = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < epsilon_grid.size(); ++i) {
    const double eps = epsilon_grid[i];
    if (!(eps >= 0.0))
      throw ValidationError("inflation_bound: epsilon must be nonnegative");
    const double b = q * std::exp(eps) + exceedance[i].mean;
    out.inflation_bound.push_back(b);
    if (b < out.best_bound) {
      out.best_bound = b;
      out.best_epsilon = eps;
    }
  }
  return out;
}

}  // namespace knockoffs
