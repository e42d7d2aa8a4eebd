#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "knockoffs/adversary.hpp"
#include "knockoffs/diagnostics.hpp"
#include "knockoffs/errors.hpp"
#include "knockoffs/gaussian.hpp"
#include "knockoffs/simulator.hpp"

using namespace knockoffs;
using Eigen::MatrixXd;

TEST_SUITE("adversary") {
  TEST_CASE("lower bound arithmetic") {
    CHECK(lower_bound_value(0.1, 0.5, 0.0) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(lower_bound_value(0.1, 0.5, 0.2) ==
          doctest::Approx(0.1 * (1.0 + 0.5 * (1.0 - std::exp(-0.2))))
              .epsilon(1e-15));
    CHECK(lower_bound_value(0.1, 0.5, 0.2) == doctest::Approx(0.1091).epsilon(1e-3));
    // c = 1 and small epsilon approaches q e^eps
    CHECK(lower_bound_value(0.1, 1.0, 0.01) ==
          doctest::Approx(0.1 * std::exp(0.01)).epsilon(1e-4));
    CHECK_THROWS_AS(lower_bound_value(0.0, 0.5, 0.1), ValidationError);
    CHECK_THROWS_AS(lower_bound_value(0.1, 1.5, 0.1), ValidationError);
    CHECK_THROWS_AS(lower_bound_value(0.1, 0.5, -0.1), ValidationError);
  }

  TEST_CASE("psi_test is deterministic and internally consistent") {
    const MatrixXd theta = gen_ar1_precision(3, 0.4);
    const GaussianModel model(theta);
    const PrecisionEstimate pe(theta);
    const KnockoffMechanism mech = build_mechanism(pe, select_equicorrelated_d(pe));
    const auto ev = gaussian_conditional_evaluator(theta);

    Eigen::MatrixXd x(4, 3);
    x << 0.1, -0.4, 1.2, 0.7, 0.0, -0.3, -1.1, 0.5, 0.2, 0.9, -0.8, 0.4;
    const AdversaryOutcome a = psi_test(x, mech, 1, 0.25, ev, ev, 17);
    const AdversaryOutcome b = psi_test(x, mech, 1, 0.25, ev, ev, 17);
    CHECK(a.psi == b.psi);
    CHECK(a.kl_j == b.kl_j);
    CHECK(a.psi == ((a.b && a.kl_j > 0.0) || (a.b_prime && a.kl_j == 0.0)));
    // Q = P: the KL statistic is exactly zero, only the b' branch can fire
    CHECK(a.kl_j == 0.0);

    CHECK_THROWS_AS(psi_test(x, mech, 1, 0.6, ev, ev, 17), ValidationError);
    CHECK_THROWS_AS(psi_test(x, mech, 5, 0.25, ev, ev, 17), ValidationError);
  }

  TEST_CASE("exact case holds level q on both sides") {
    const MatrixXd theta = gen_ar1_precision(3, 0.4);
    const AdversaryScenario scenario{GaussianModel(theta),
                                     PrecisionEstimate(theta), 10, 1, 0.2};
    const AdversaryLevels levels = monte_carlo_levels(scenario, 3000, 99);
    CHECK(levels.replicates == 3000);
    CHECK(levels.level_under_q.lo <= 0.2);
    CHECK(levels.level_under_q.hi >= 0.2);
    CHECK(levels.level_under_p.lo <= 0.2);
    CHECK(levels.level_under_p.hi >= 0.2);
    // Q = P means no positive KL draws at all
    CHECK(levels.epsilon == 0.0);
  }

  TEST_CASE("degenerate n = 0 fires only the second coin") {
    const MatrixXd theta = gen_ar1_precision(2, 0.3);
    const AdversaryScenario scenario{GaussianModel(theta),
                                     PrecisionEstimate(theta), 0, 0, 0.3};
    const AdversaryLevels levels = monte_carlo_levels(scenario, 2000, 5);
    CHECK(levels.level_under_q.lo <= 0.3);
    CHECK(levels.level_under_q.hi >= 0.3);
    CHECK(levels.level_under_p.lo <= 0.3);
    CHECK(levels.level_under_p.hi >= 0.3);
  }

  TEST_CASE("a perturbed estimate inflates the rejection level") {
    const MatrixXd theta = gen_ar1_precision(4, 0.5);
    const GaussianModel model(theta);
    const PrecisionEstimate estimate = perturb_precision(theta, 0.3, 77);
    const AdversaryScenario scenario{model, estimate, 50, 2, 0.1};
    const AdversaryLevels levels = monte_carlo_levels(scenario, 3000, 31);

    CHECK(std::abs(levels.level_under_q.mean - 0.1) <=
          3.0 * levels.level_under_q.se);
    CHECK(levels.epsilon > 0.0);
    CHECK(levels.c_hat > 0.0);
    CHECK(levels.lower_bound > 0.1);
    CHECK(levels.level_under_p.mean >=
          levels.lower_bound - 3.0 * levels.level_under_p.se);
  }

  TEST_CASE("results do not depend on the thread count") {
    const MatrixXd theta = gen_ar1_precision(3, 0.5);
    const GaussianModel model(theta);
    const PrecisionEstimate estimate = perturb_precision(theta, 0.2, 11);
    const AdversaryScenario scenario{model, estimate, 20, 1, 0.15};
    const AdversaryLevels serial = monte_carlo_levels(scenario, 400, 13, 1);
    const AdversaryLevels pooled = monte_carlo_levels(scenario, 400, 13, 4);
    CHECK(serial.level_under_q.mean == pooled.level_under_q.mean);
    CHECK(serial.level_under_p.mean == pooled.level_under_p.mean);
    CHECK(serial.epsilon == pooled.epsilon);
    CHECK(serial.c_hat == pooled.c_hat);
  }

  TEST_CASE("a non-invertible estimate is rejected") {
    const MatrixXd theta = gen_ar1_precision(2, 0.3);
    MatrixXd singular = MatrixXd::Constant(2, 2, 1.0);
    const AdversaryScenario scenario{GaussianModel(theta),
                                     PrecisionEstimate(singular), 10, 0, 0.2};
    CHECK_THROWS_AS(monte_carlo_levels(scenario, 10, 1), ValidationError);
  }
}
