#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace knockoffs {

// Symmetric precision estimate driving knockoff construction. The input is
// symmetrized on entry; beyond symmetry only a positive diagonal is required.
// Indefinite estimates are legal, the sampler stays valid as long as a
// feasible d vector exists.
struct PrecisionEstimate {
  Eigen::MatrixXd theta;  // (input + input^T) / 2
  bool is_psd = false;    // eigenvalue check recorded at construction

  explicit PrecisionEstimate(const Eigen::MatrixXd& theta_tilde);
  int dim() const { return static_cast<int>(theta.rows()); }
};

// Ground-truth precision matrix. Symmetric positive definite, enforced at
// construction (minimum eigenvalue above 1e-10).
struct GaussianModel {
  Eigen::MatrixXd theta;

  explicit GaussianModel(const Eigen::MatrixXd& theta_in);
  int dim() const { return static_cast<int>(theta.rows()); }
};

// One-feature conditional: X_j | X_{-j} ~ N(coeffs . x_{-j}, variance).
struct ConditionalGaussian {
  Eigen::VectorXd coeffs;  // length p - 1, ordered as x with entry j removed
  double variance = 0.0;

  double mean_given(const Eigen::VectorXd& x_minus_j) const {
    return coeffs.dot(x_minus_j);
  }
  // Conditions on a full row; entry j of the row is ignored.
  double mean_given_row(int j, const Eigen::RowVectorXd& row) const;
  double log_density_row(int j, const Eigen::RowVectorXd& row,
                         double value) const;
};

// Precomputed sampler for X~ given X: conditional mean (I - D Theta) x and
// covariance 2D - D Theta D, stored through its symmetric square root.
struct KnockoffMechanism {
  PrecisionEstimate precision;
  Eigen::VectorXd diag_d;
  Eigen::MatrixXd cond_mean_map;  // I - D Theta
  Eigen::MatrixXd cond_cov_root;  // PSD square root of 2D - D Theta D

  int dim() const { return precision.dim(); }
};

// Symmetric eigendecomposition square root. Eigenvalues in [-clip_tol, 0) are
// clipped to zero; anything below -clip_tol is an error.
Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& s,
                               double clip_tol = 1e-10);

// Equicorrelated-style d. When theta is positive definite this is
// min(1, 2 lambda_min(corr(Sigma))) mapped back to covariance scale. When it
// is not, starts from 1/theta_jj and halves the whole vector until
// 2D - D Theta D is PSD; gives up after 60 halvings.
Eigen::VectorXd select_equicorrelated_d(const PrecisionEstimate& pe);

// Validates d >= 0 and PSD-ness of 2D - D Theta D, then freezes the affine
// map and covariance root. The root reproduces 2D - D Theta D to 1e-8 in
// max norm or construction fails.
KnockoffMechanism build_mechanism(const PrecisionEstimate& pe,
                                  const Eigen::VectorXd& d);

// Row-wise sampler: X~_i = cond_mean_map x_i + cond_cov_root z_i with
// z_i iid standard normal. Identical seed gives identical output.
Eigen::MatrixXd sample_knockoffs(const KnockoffMechanism& mech,
                                 const Eigen::MatrixXd& x, std::uint64_t seed);

// Reads the conditional of feature j off a precision matrix:
// coeffs = -theta_{-j,j} / theta_jj, variance = 1 / theta_jj.
ConditionalGaussian conditional_of(const Eigen::MatrixXd& theta, int j);

}  // namespace knockoffs
