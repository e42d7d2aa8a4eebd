#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "knockoffs/diagnostics.hpp"
#include "knockoffs/gaussian.hpp"
#include "knockoffs/util.hpp"

namespace knockoffs {

// One run of the randomized detector: sample knockoffs, flip two coins,
// reject when the observed KL for feature j points the wrong way.
//   psi = 1 iff (b and KL_j > 0) or (b_prime and KL_j == 0),
// with b ~ Bernoulli(2q) and b_prime ~ Bernoulli(q). The KL == 0 branch is an
// exact floating-point comparison; it fires in distributions with atoms and
// in the degenerate n = 0 case.
struct AdversaryOutcome {
  bool psi = false;
  bool b = false;
  bool b_prime = false;
  double kl_j = 0.0;
};

// Draw order per seed: knockoffs, then b, then b_prime. q must be in (0, 1/2]
// so that 2q is a probability.
AdversaryOutcome psi_test(const Eigen::MatrixXd& x,
                          const KnockoffMechanism& mech, int j, double q,
                          const ConditionalLogDensity& p_log,
                          const ConditionalLogDensity& q_log,
                          std::uint64_t seed);

// q (1 + c (1 - e^{-eps})): the rejection level the detector is guaranteed
// once KL_j exceeds eps with probability at least c under the true model.
double lower_bound_value(double q, double c, double eps);

// Monte Carlo comparison of the detector's level under the estimated
// distribution (where it is a valid level-q test) and under the true model.
struct AdversaryScenario {
  GaussianModel model;         // true precision
  PrecisionEstimate estimate;  // must be PD so the estimated law is sampleable
  long n = 0;
  int j = 0;
  double q = 0.0;
};

struct AdversaryLevels {
  IntervalEstimate level_under_q;  // should sit at q
  IntervalEstimate level_under_p;  // inflated when the estimate is off
  double epsilon = 0.0;   // 25th percentile of the positive KL draws under P
  double c_hat = 0.0;     // empirical P(KL_j >= epsilon) under P
  double lower_bound = 0.0;
  long replicates = 0;
};

AdversaryLevels monte_carlo_levels(const AdversaryScenario& scenario,
                                   long replicates, std::uint64_t seed,
                                   int threads = 1);

}  // namespace knockoffs
