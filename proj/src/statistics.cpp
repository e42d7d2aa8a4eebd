#include "knockoffs/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "knockoffs/errors.hpp"
#include "knockoffs/rng.hpp"

namespace knockoffs {

namespace {

constexpr double kCoordTol = 1e-7;
constexpr int kMaxPasses = 10000;

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

void require_response(const Eigen::VectorXd& y, Eigen::Index n,
                      const char* who) {
  if (y.size() != n)
    throw ValidationError(std::string(who) + ": y length does not match design");
  if (!y.allFinite())
    throw ValidationError(std::string(who) + ": y has non-finite entries");
}

}  // namespace

AugmentedDesign::AugmentedDesign(const Eigen::MatrixXd& x,
                                 const Eigen::MatrixXd& xk) {
  if (x.rows() != xk.rows() || x.cols() != xk.cols())
    throw ValidationError("AugmentedDesign: originals and knockoffs must have "
                          "the same shape");
  if (x.cols() == 0 || x.rows() == 0)
    throw ValidationError("AugmentedDesign: empty design");
  if (!x.allFinite() || !xk.allFinite())
    throw ValidationError("AugmentedDesign: non-finite entries");
  n = static_cast<int>(x.rows());
  p = static_cast<int>(x.cols());
  cols.resize(n, 2 * p);
  cols.leftCols(p) = x;
  cols.rightCols(p) = xk;
}

WStatistics marginal_stats(const AugmentedDesign& design,
                           const Eigen::VectorXd& y) {
  require_response(y, design.n, "marginal_stats");
  WStatistics out;
  out.kind = StatisticKind::marginal;
  out.w.resize(design.p);
  for (int j = 0; j < design.p; ++j)
    out.w(j) = std::abs(design.cols.col(j).dot(y)) -
               std::abs(design.cols.col(j + design.p).dot(y));
  return out;
}

LassoResult lasso_coordinate_descent(const Eigen::MatrixXd& m,
                                     const Eigen::VectorXd& y, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw ValidationError("lasso_coordinate_descent: lambda must be positive");
  if (m.rows() == 0 || m.cols() == 0)
    throw ValidationError("lasso_coordinate_descent: empty design");
  if (!m.allFinite())
    throw ValidationError("lasso_coordinate_descent: design has non-finite entries");
  require_response(y, m.rows(), "lasso_coordinate_descent");

  const auto n = m.rows();
  const auto k = m.cols();
  const double root_n = std::sqrt(static_cast<double>(n));

  // Solve in gamma_j = beta_j / s_j with s_j = sqrt(n) / ||M_j||, so every
  // active column has mean-square one and the per-coordinate penalty becomes
  // lambda * s_j. The objective is the caller's, untouched.
  Eigen::MatrixXd ms(n, k);
  Eigen::VectorXd scale(k), penalty(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double norm = m.col(j).norm();
    if (norm == 0.0) {
      ms.col(j).setZero();  // dead column, coefficient pinned at zero
      scale(j) = 0.0;
      penalty(j) = lambda;
      continue;
    }
    scale(j) = root_n / norm;
    ms.col(j) = m.col(j) * scale(j);
    penalty(j) = lambda * scale(j);
  }

  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd resid = y;
  const double inv_n = 1.0 / static_cast<double>(n);

  LassoResult out;
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    double max_move = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (scale(j) == 0.0) continue;
      const double rho = ms.col(j).dot(resid) * inv_n + gamma(j);
      const double next = soft_threshold(rho, penalty(j));
      const double move = next - gamma(j);
      if (move != 0.0) {
        resid -= ms.col(j) * move;
        gamma(j) = next;
        max_move = std::max(max_move, std::abs(move));
      }
    }
    if (max_move < kCoordTol) {
      out.converged = true;
      out.passes = pass + 1;
      break;
    }
    out.passes = pass + 1;
  }

  out.beta = gamma.cwiseProduct(scale);
  return out;
}

double lasso_objective(const Eigen::MatrixXd& m, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& beta, double lambda) {
  const double n = static_cast<double>(m.rows());
  return (y - m * beta).squaredNorm() / (2.0 * n) +
         lambda * beta.cwiseAbs().sum();
}

WStatistics lcd_stats(const AugmentedDesign& design, const Eigen::VectorXd& y,
                      double lambda_fraction, std::uint64_t seed) {
  if (!(lambda_fraction > 0.0) || !(lambda_fraction <= 1.0))
    throw ValidationError("lcd_stats: lambda_fraction must be in (0, 1]");
  require_response(y, design.n, "lcd_stats");

  const int k = 2 * design.p;
  double lambda_max = 0.0;
  for (int j = 0; j < k; ++j)
    lambda_max = std::max(
        lambda_max, std::abs(design.cols.col(j).dot(y)) / design.n);

  WStatistics out;
  out.kind = StatisticKind::lcd;
  if (lambda_max == 0.0) {
    // y carries no signal for any column; every coefficient is zero at any
    // positive lambda.
    out.w = Eigen::VectorXd::Zero(design.p);
    out.lambda_used = 0.0;
    return out;
  }
  const double lambda = lambda_fraction * lambda_max;
  out.lambda_used = lambda;

  // One seeded permutation of the columns decides who is visited first;
  // without it the sweep would always see originals before knockoffs.
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  auto eng = make_stream(seed, {stream::kPermutation});
  for (int j = k - 1; j > 0; --j) {
    std::uniform_int_distribution<int> pick(0, j);
    std::swap(perm[static_cast<std::size_t>(j)],
              perm[static_cast<std::size_t>(pick(eng))]);
  }

  Eigen::MatrixXd shuffled(design.n, k);
  for (int j = 0; j < k; ++j)
    shuffled.col(j) = design.cols.col(perm[static_cast<std::size_t>(j)]);

  const LassoResult fit = lasso_coordinate_descent(shuffled, y, lambda);
  out.solver_converged = fit.converged;

  Eigen::VectorXd beta(k);
  for (int j = 0; j < k; ++j) beta(perm[static_cast<std::size_t>(j)]) = fit.beta(j);

  // A knockoff identical to its original makes the minimizer non-unique
  // along beta_j + beta_{j+p}; split the pair evenly so the tie is broken
  // symmetrically instead of by visit order.
  for (int j = 0; j < design.p; ++j) {
    if (design.cols.col(j) == design.cols.col(j + design.p)) {
      const double half = 0.5 * (beta(j) + beta(j + design.p));
      beta(j) = half;
      beta(j + design.p) = half;
    }
  }

  out.w.resize(design.p);
  for (int j = 0; j < design.p; ++j)
    out.w(j) = std::abs(beta(j)) - std::abs(beta(j + design.p));
  return out;
}

StatisticFn statistic_fn(StatisticKind kind, double lambda_fraction,
                         std::uint64_t seed) {
  if (kind == StatisticKind::marginal)
    return [](const AugmentedDesign& d, const Eigen::VectorXd& y) {
      return marginal_stats(d, y).w;
    };
  return [lambda_fraction, seed](const AugmentedDesign& d,
                                 const Eigen::VectorXd& y) {
    return lcd_stats(d, y, lambda_fraction, seed).w;
  };
}

AugmentedDesign swap_columns(const AugmentedDesign& design,
                             const std::vector<int>& swap_set) {
  for (int j : swap_set)
    if (j < 0 || j >= design.p)
      throw ValidationError("swap_columns: swap index out of range");
  Eigen::MatrixXd x = design.cols.leftCols(design.p);
  Eigen::MatrixXd xk = design.cols.rightCols(design.p);
  for (int j : swap_set) x.col(j).swap(xk.col(j));
  return AugmentedDesign(x, xk);
}

FlipSignOutcome check_flip_sign(const StatisticFn& fn,
                                const AugmentedDesign& design,
                                const Eigen::VectorXd& y,
                                const std::vector<int>& swap_set, double tol) {
  const Eigen::VectorXd base = fn(design, y);
  const Eigen::VectorXd swapped = fn(swap_columns(design, swap_set), y);
  std::vector<bool> in_set(static_cast<std::size_t>(design.p), false);
  for (int j : swap_set) in_set[static_cast<std::size_t>(j)] = true;

  FlipSignOutcome out;
  out.passed = true;
  for (int j = 0; j < design.p; ++j) {
    const double want = in_set[static_cast<std::size_t>(j)] ? -base(j) : base(j);
    const double err = std::abs(swapped(j) - want);
    if (err > out.max_error) out.max_error = err;
    if (err > tol && out.passed) {
      out.passed = false;
      out.offending_index = j;
    }
  }
  return out;
}

FlipSignOutcome audit_flip_sign(WStatistics& stats,
                                const AugmentedDesign& design,
                                const Eigen::VectorXd& y,
                                const std::vector<int>& swap_set,
                                double lambda_fraction, std::uint64_t seed) {
  const double tol = stats.kind == StatisticKind::marginal ? 0.0 : 1e-6;
  const FlipSignOutcome out = check_flip_sign(
      statistic_fn(stats.kind, lambda_fraction, seed), design, y, swap_set, tol);
  if (out.passed) stats.flip_sign_audited = true;
  return out;
}

}  // namespace knockoffs
