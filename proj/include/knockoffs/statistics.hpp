#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

namespace knockoffs {

// Originals and knockoffs side by side: column j is feature j, column j + p
// its knockoff.
struct AugmentedDesign {
  Eigen::MatrixXd cols;  // n x 2p
  int n = 0;
  int p = 0;

  AugmentedDesign(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xk);
};

enum class StatisticKind { marginal, lcd };

struct WStatistics {
  Eigen::VectorXd w;
  StatisticKind kind = StatisticKind::marginal;
  double lambda_used = 0.0;
  bool solver_converged = true;
  bool flip_sign_audited = false;  // stamped by audit_flip_sign on success
};

struct LassoResult {
  Eigen::VectorXd beta;
  bool converged = false;
  int passes = 0;
};

// W_j = |X_j . y| - |X~_j . y|. Antisymmetric under column swaps by exact
// floating point identity.
WStatistics marginal_stats(const AugmentedDesign& design,
                           const Eigen::VectorXd& y);

// Cyclic coordinate descent for (1/2n) ||y - M beta||^2 + lambda ||beta||_1.
// Columns are rescaled to mean-square one internally (with the penalty
// carried along so the solved problem is unchanged) and the output is on the
// original scale. Converged when the largest coordinate move on the
// standardized scale drops below 1e-7; gives up after 1e4 sweeps and returns
// the last iterate with converged = false.
LassoResult lasso_coordinate_descent(const Eigen::MatrixXd& m,
                                     const Eigen::VectorXd& y, double lambda);

double lasso_objective(const Eigen::MatrixXd& m, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& beta, double lambda);

// Lasso coefficient-difference statistic: W_j = |beta_j| - |beta_{j+p}| at
// lambda = lambda_fraction * max_j |M_j . y| / n. The columns of the
// augmented design are run through one seeded permutation before the solve
// (and mapped back after) so coordinate order cannot systematically favor
// originals over knockoffs; exact duplicate (j, j+p) pairs get their
// coefficients equalized, which is what makes W identically zero when the
// knockoffs equal the originals.
WStatistics lcd_stats(const AugmentedDesign& design, const Eigen::VectorXd& y,
                      double lambda_fraction, std::uint64_t seed);

// A statistic as a function, for the swap audit.
using StatisticFn =
    std::function<Eigen::VectorXd(const AugmentedDesign&, const Eigen::VectorXd&)>;
StatisticFn statistic_fn(StatisticKind kind, double lambda_fraction,
                         std::uint64_t seed);

// Swaps columns j and j+p for every j in swap_set.
AugmentedDesign swap_columns(const AugmentedDesign& design,
                             const std::vector<int>& swap_set);

// Recomputes W on the swapped design and checks W'_j = -W_j on swap_set,
// W'_j = W_j off it, within tol (use 0 for the marginal statistic).
struct FlipSignOutcome {
  bool passed = false;
  int offending_index = -1;
  double max_error = 0.0;
};
FlipSignOutcome check_flip_sign(const StatisticFn& fn,
                                const AugmentedDesign& design,
                                const Eigen::VectorXd& y,
                                const std::vector<int>& swap_set, double tol);

// Runs check_flip_sign for the statistic that produced `stats` and stamps
// stats.flip_sign_audited on success.
FlipSignOutcome audit_flip_sign(WStatistics& stats,
                                const AugmentedDesign& design,
                                const Eigen::VectorXd& y,
                                const std::vector<int>& swap_set,
                                double lambda_fraction, std::uint64_t seed);

}  // namespace knockoffs
