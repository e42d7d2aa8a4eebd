#include "knockoffs/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "knockoffs/errors.hpp"
#include "knockoffs/rng.hpp"

namespace knockoffs {

namespace {

constexpr double kPsdTol = 1e-10;

void require_square(const Eigen::MatrixXd& m, const char* who) {
  if (m.rows() == 0 || m.rows() != m.cols())
    throw ValidationError(std::string(who) + ": matrix must be square and nonempty");
  if (!m.allFinite())
    throw ValidationError(std::string(who) + ": matrix has non-finite entries");
}

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_of(const Eigen::MatrixXd& m,
                                                      const char* who) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success)
    throw NumericalError(std::string(who) + ": eigendecomposition failed");
  return es;
}

}  // namespace

PrecisionEstimate::PrecisionEstimate(const Eigen::MatrixXd& theta_tilde) {
  require_square(theta_tilde, "PrecisionEstimate");
  theta = 0.5 * (theta_tilde + theta_tilde.transpose());
  for (int j = 0; j < theta.rows(); ++j) {
    if (!(theta(j, j) > 0.0))
      throw ValidationError("PrecisionEstimate: diagonal entry " +
                            std::to_string(j) + " is not positive");
  }
  const auto es = eig_of(theta, "PrecisionEstimate");
  is_psd = es.eigenvalues().minCoeff() >= -kPsdTol;
}

GaussianModel::GaussianModel(const Eigen::MatrixXd& theta_in) {
  require_square(theta_in, "GaussianModel");
  const double asym = (theta_in - theta_in.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9)
    throw ValidationError("GaussianModel: matrix is not symmetric");
  theta = 0.5 * (theta_in + theta_in.transpose());
  const auto es = eig_of(theta, "GaussianModel");
  if (!(es.eigenvalues().minCoeff() > kPsdTol))
    throw ValidationError("GaussianModel: matrix is not positive definite");
}

double ConditionalGaussian::mean_given_row(int j,
                                           const Eigen::RowVectorXd& row) const {
  double m = 0.0;
  for (int k = 0; k < j; ++k) m += coeffs(k) * row(k);
  for (int k = j + 1; k < row.size(); ++k) m += coeffs(k - 1) * row(k);
  return m;
}

double ConditionalGaussian::log_density_row(int j, const Eigen::RowVectorXd& row,
                                            double value) const {
  const double m = mean_given_row(j, row);
  const double r = value - m;
  return -0.5 * r * r / variance -
         0.5 * std::log(2.0 * std::numbers::pi * variance);
}

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& s, double clip_tol) {
  require_square(s, "symmetric_sqrt");
  const auto es = eig_of(s, "symmetric_sqrt");
  Eigen::VectorXd lam = es.eigenvalues();
  if (lam.minCoeff() < -clip_tol)
    throw NumericalError("symmetric_sqrt: matrix is not PSD (min eigenvalue " +
                         std::to_string(lam.minCoeff()) + ")");
  for (int i = 0; i < lam.size(); ++i) lam(i) = std::sqrt(std::max(lam(i), 0.0));
  Eigen::MatrixXd root =
      es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (root + root.transpose());
}

Eigen::VectorXd select_equicorrelated_d(const PrecisionEstimate& pe) {
  const int p = pe.dim();
  const auto es = eig_of(pe.theta, "select_equicorrelated_d");

  if (es.eigenvalues().minCoeff() > kPsdTol) {
    // Positive definite: work on the implied covariance.
    const Eigen::MatrixXd sigma = es.eigenvectors() *
                                  es.eigenvalues().cwiseInverse().asDiagonal() *
                                  es.eigenvectors().transpose();
    const Eigen::VectorXd sd = sigma.diagonal().cwiseSqrt();
    const Eigen::MatrixXd corr =
        sd.cwiseInverse().asDiagonal() * sigma * sd.cwiseInverse().asDiagonal();
    const double lam_min = eig_of(corr, "select_equicorrelated_d")
                               .eigenvalues()
                               .minCoeff();
    const double s = std::min(1.0, 2.0 * lam_min);
    return s * sigma.diagonal();
  }

  // Indefinite estimate: no covariance to read a scale from. Start at the
  // conditional variances and shrink until 2D - D Theta D is PSD.
  Eigen::VectorXd d = pe.theta.diagonal().cwiseInverse();
  for (int iter = 0; iter <= 60; ++iter) {
    Eigen::MatrixXd s = -(d.asDiagonal() * pe.theta * d.asDiagonal());
    s.diagonal() += 2.0 * d;
    s = 0.5 * (s + s.transpose()).eval();
    if (eig_of(s, "select_equicorrelated_d").eigenvalues().minCoeff() >= -kPsdTol)
      return d;
    d *= 0.5;
  }
  throw NumericalError(
      "select_equicorrelated_d: no feasible d after 60 halvings");
}

KnockoffMechanism build_mechanism(const PrecisionEstimate& pe,
                                  const Eigen::VectorXd& d) {
  const int p = pe.dim();
  if (d.size() != p)
    throw ValidationError("build_mechanism: d has wrong length");
  if (!d.allFinite() || d.minCoeff() < 0.0)
    throw ValidationError("build_mechanism: d must be nonnegative and finite");

  Eigen::MatrixXd cov = -(d.asDiagonal() * pe.theta * d.asDiagonal());
  cov.diagonal() += 2.0 * d;
  cov = 0.5 * (cov + cov.transpose()).eval();

  KnockoffMechanism mech{pe, d, Eigen::MatrixXd(), Eigen::MatrixXd()};
  mech.cond_cov_root = symmetric_sqrt(cov, kPsdTol);
  const double reproduce =
      (mech.cond_cov_root * mech.cond_cov_root - cov).cwiseAbs().maxCoeff();
  if (reproduce > 1e-8)
    throw NumericalError("build_mechanism: covariance root check failed (" +
                         std::to_string(reproduce) + ")");

  mech.cond_mean_map = -(d.asDiagonal() * pe.theta);
  mech.cond_mean_map.diagonal().array() += 1.0;
  return mech;
}

Eigen::MatrixXd sample_knockoffs(const KnockoffMechanism& mech,
                                 const Eigen::MatrixXd& x, std::uint64_t seed) {
  const int p = mech.dim();
  if (x.cols() != p)
    throw ValidationError("sample_knockoffs: x has wrong column count");
  if (!x.allFinite())
    throw ValidationError("sample_knockoffs: x has non-finite entries");

  const auto n = x.rows();
  auto eng = make_stream(seed, {stream::kKnockoff});
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd z(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) z(i, j) = gauss(eng);

  return x * mech.cond_mean_map.transpose() + z * mech.cond_cov_root.transpose();
}

ConditionalGaussian conditional_of(const Eigen::MatrixXd& theta, int j) {
  require_square(theta, "conditional_of");
  const int p = static_cast<int>(theta.rows());
  if (j < 0 || j >= p) throw ValidationError("conditional_of: j out of range");
  if (!(theta(j, j) > 0.0))
    throw ValidationError("conditional_of: theta_jj must be positive");

  ConditionalGaussian cg;
  cg.variance = 1.0 / theta(j, j);
  cg.coeffs.resize(p - 1);
  for (int k = 0; k < j; ++k) cg.coeffs(k) = -theta(k, j) / theta(j, j);
  for (int k = j + 1; k < p; ++k) cg.coeffs(k - 1) = -theta(k, j) / theta(j, j);
  return cg;
}

}  // namespace knockoffs
