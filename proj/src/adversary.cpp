#include "knockoffs/adversary.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "knockoffs/errors.hpp"
#include "knockoffs/parallel.hpp"
#include "knockoffs/rng.hpp"

namespace knockoffs {

AdversaryOutcome psi_test(const Eigen::MatrixXd& x,
                          const KnockoffMechanism& mech, int j, double q,
                          const ConditionalLogDensity& p_log,
                          const ConditionalLogDensity& q_log,
                          std::uint64_t seed) {
  if (!(q > 0.0 && q <= 0.5))
    throw ValidationError("psi_test: q must be in (0, 1/2]");
  if (j < 0 || j >= mech.dim())
    throw ValidationError("psi_test: feature index out of range");

  const Eigen::MatrixXd xt =
      sample_knockoffs(mech, x, derive_seed(seed, {stream::kKnockoff}));
  const double kl =
      x.rows() == 0 ? 0.0 : observed_kl_feature(x, xt, j, p_log, q_log);

  auto eng = make_stream(seed, {stream::kCoin});
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  AdversaryOutcome out;
  out.b = unif(eng) < 2.0 * q;
  out.b_prime = unif(eng) < q;
  out.kl_j = kl;
  out.psi = (out.b && kl > 0.0) || (out.b_prime && kl == 0.0);
  return out;
}

double lower_bound_value(double q, double c, double eps) {
  if (!(q > 0.0 && q <= 0.5))
    throw ValidationError("lower_bound_value: q must be in (0, 1/2]");
  if (!(c >= 0.0 && c <= 1.0))
    throw ValidationError("lower_bound_value: c must be in [0,1]");
  if (!(eps >= 0.0))
    throw ValidationError("lower_bound_value: eps must be nonnegative");
  return q * (1.0 + c * (1.0 - std::exp(-eps)));
}

namespace {

Eigen::MatrixXd sample_rows(const Eigen::MatrixXd& cov_root, long n,
                            std::uint64_t seed) {
  const auto p = cov_root.rows();
  auto eng = make_stream(seed, {stream::kDesign});
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd z(n, p);
  for (long i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) z(i, j) = gauss(eng);
  return z * cov_root.transpose();
}

}  // namespace

AdversaryLevels monte_carlo_levels(const AdversaryScenario& scenario,
                                   long replicates, std::uint64_t seed,
                                   int threads) {
  if (replicates <= 0)
    throw ValidationError("monte_carlo_levels: replicates must be positive");
  if (scenario.model.dim() != scenario.estimate.dim())
    throw ValidationError("monte_carlo_levels: dimension mismatch");
  if (scenario.n < 0)
    throw ValidationError("monte_carlo_levels: n must be nonnegative");

  // Covariance roots for both laws. The estimated side must be proper.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_p(scenario.model.theta);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_q(scenario.estimate.theta);
  if (es_p.info() != Eigen::Success || es_q.info() != Eigen::Success)
    throw NumericalError("monte_carlo_levels: eigendecomposition failed");
  if (!(es_q.eigenvalues().minCoeff() > 1e-10))
    throw ValidationError(
        "monte_carlo_levels: the precision estimate is not positive definite, "
        "there is no estimated law to sample the null side from");
  const Eigen::MatrixXd root_p =
      es_p.eigenvectors() *
      es_p.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
      es_p.eigenvectors().transpose();
  const Eigen::MatrixXd root_q =
      es_q.eigenvectors() *
      es_q.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
      es_q.eigenvectors().transpose();

  const KnockoffMechanism mech =
      build_mechanism(scenario.estimate, select_equicorrelated_d(scenario.estimate));
  const ConditionalLogDensity p_log =
      gaussian_conditional_evaluator(scenario.model.theta);
  const ConditionalLogDensity q_log =
      gaussian_conditional_evaluator(scenario.estimate.theta);

  std::vector<char> psi_q(static_cast<std::size_t>(replicates));
  std::vector<char> psi_p(static_cast<std::size_t>(replicates));
  std::vector<double> kl_p(static_cast<std::size_t>(replicates));

  parallel_for_index(replicates, threads, [&](long r) {
    const Eigen::MatrixXd xq = sample_rows(
        root_q, scenario.n, derive_seed(seed, {stream::kSideQ, (std::uint64_t)r}));
    const AdversaryOutcome oq =
        psi_test(xq, mech, scenario.j, scenario.q, p_log, q_log,
                 derive_seed(seed, {stream::kSideQ, (std::uint64_t)r, 1}));
    psi_q[static_cast<std::size_t>(r)] = oq.psi ? 1 : 0;

    const Eigen::MatrixXd xp = sample_rows(
        root_p, scenario.n, derive_seed(seed, {stream::kSideP, (std::uint64_t)r}));
    const AdversaryOutcome op =
        psi_test(xp, mech, scenario.j, scenario.q, p_log, q_log,
                 derive_seed(seed, {stream::kSideP, (std::uint64_t)r, 1}));
    psi_p[static_cast<std::size_t>(r)] = op.psi ? 1 : 0;
    kl_p[static_cast<std::size_t>(r)] = op.kl_j;
  });

  long hits_q = 0, hits_p = 0;
  for (char c : psi_q) hits_q += c;
  for (char c : psi_p) hits_p += c;

  AdversaryLevels out;
  out.replicates = replicates;
  out.level_under_q = wilson_interval(hits_q, replicates);
  out.level_under_p = wilson_interval(hits_p, replicates);

  std::vector<double> positive;
  positive.reserve(kl_p.size());
  for (double v : kl_p)
    if (v > 0.0) positive.push_back(v);
  out.epsilon = positive.empty() ? 0.0 : quantile(positive, 0.25);
  long at_least = 0;
  for (double v : kl_p)
    if (v >= out.epsilon) ++at_least;
  out.c_hat = static_cast<double>(at_least) / static_cast<double>(replicates);
  out.lower_bound = lower_bound_value(scenario.q, out.c_hat, out.epsilon);
  return out;
}

}  // namespace knockoffs
