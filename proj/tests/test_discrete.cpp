#include <doctest.h>

#include <cmath>
#include <vector>

#include "knockoffs/discrete.hpp"
#include "knockoffs/errors.hpp"

using namespace knockoffs;

namespace {

// X1 = X2 ~ Bernoulli(1/2): mass 1/2 on (0,0) and (1,1).
DiscreteJoint correlated_pair() {
  return DiscreteJoint({2, 2}, {0.5, 0.0, 0.0, 0.5});
}

DiscreteJoint iid_coins() {
  return DiscreteJoint({2, 2}, {0.25, 0.25, 0.25, 0.25});
}

}  // namespace

TEST_SUITE("discrete sampler") {
  TEST_CASE("product space round trip, last coordinate fastest") {
    const ProductSpace space({2, 3});
    CHECK(space.total == 6);
    CHECK(space.encode({0, 0}) == 0);
    CHECK(space.encode({0, 2}) == 2);
    CHECK(space.encode({1, 0}) == 3);
    std::vector<int> x(2);
    for (long i = 0; i < space.total; ++i) {
      space.decode(i, x);
      CHECK(space.encode(x) == i);
    }
  }

  TEST_CASE("joint validation") {
    CHECK_THROWS_AS(DiscreteJoint({2}, {0.5, 0.6}), ValidationError);
    CHECK_THROWS_AS(DiscreteJoint({2}, {-0.1, 1.1}), ValidationError);
    CHECK_THROWS_AS(DiscreteJoint({2}, {0.5}), ValidationError);
    CHECK_THROWS_AS(DiscreteJoint({2, 2, 2, 2, 2}, std::vector<double>(32, 1.0 / 32)),
                    ValidationError);
    CHECK_THROWS_AS(DiscreteJoint({6}, std::vector<double>(6, 1.0 / 6)),
                    ValidationError);
  }

  TEST_CASE("single binary feature gets an independent copy") {
    const DiscreteJoint joint({2}, {0.3, 0.7});
    const KnockoffJoint kj = scip_knockoffs(joint);
    for (int x = 0; x < 2; ++x)
      for (int xt = 0; xt < 2; ++xt)
        CHECK(kj.at(x, xt) ==
              doctest::Approx(joint.pmf[x] * joint.pmf[xt]).epsilon(1e-14));
  }

  TEST_CASE("iid coins give the uniform knockoff joint") {
    const KnockoffJoint kj = scip_knockoffs(iid_coins());
    for (long x = 0; x < 4; ++x)
      for (long xt = 0; xt < 4; ++xt)
        CHECK(kj.at(x, xt) == doctest::Approx(1.0 / 16.0).epsilon(1e-14));
  }

  TEST_CASE("perfectly correlated pair forces identical knockoffs") {
    const DiscreteMechanism mech = scip_mechanism(correlated_pair());
    const ProductSpace& space = mech.space;
    // On-support rows: the mechanism must keep xt = x with probability 1.
    for (long x : {space.encode({0, 0}), space.encode({1, 1})}) {
      CHECK(mech.at(x, x) == doctest::Approx(1.0).epsilon(1e-14));
      for (long xt = 0; xt < space.total; ++xt)
        if (xt != x) CHECK(mech.at(x, xt) == doctest::Approx(0.0));
    }
  }

  TEST_CASE("knockoff marginal reproduces the input law") {
    const DiscreteJoint joint({2, 3}, {0.05, 0.1, 0.15, 0.3, 0.25, 0.15});
    const KnockoffJoint kj = scip_knockoffs(joint);
    for (long x = 0; x < joint.space.total; ++x) {
      double mass = 0.0;
      for (long xt = 0; xt < joint.space.total; ++xt) mass += kj.at(x, xt);
      CHECK(mass == doctest::Approx(joint.pmf[x]).epsilon(1e-13));
    }
  }

  TEST_CASE("exchangeability holds for every swap subset") {
    const DiscreteJoint joint({2, 2, 3},
                              {0.02, 0.08, 0.05, 0.1, 0.07, 0.08,
                               0.13, 0.02, 0.15, 0.1, 0.1, 0.1});
    const KnockoffJoint kj = scip_knockoffs(joint);
    for (int mask = 0; mask < 8; ++mask) {
      std::vector<int> swap_set;
      for (int j = 0; j < 3; ++j)
        if (mask & (1 << j)) swap_set.push_back(j);
      CHECK(check_exchangeability(kj, swap_set) < 1e-13);
    }
  }

  TEST_CASE("a deliberately broken mechanism is detected") {
    const DiscreteJoint joint({2, 2}, {0.4, 0.1, 0.2, 0.3});
    const ProductSpace& space = joint.space;
    const auto table_index = [&](long x, long xt) {
      return static_cast<std::size_t>(x) * space.total +
             static_cast<std::size_t>(xt);
    };

    // Copying X verbatim is exchangeable (the discrete analogue of D = 0).
    DiscreteMechanism copy;
    copy.space = space;
    copy.cond.assign(static_cast<std::size_t>(space.total) * space.total, 0.0);
    for (long x = 0; x < space.total; ++x) copy.cond[table_index(x, x)] = 1.0;
    CHECK(check_exchangeability(apply_mechanism(joint, copy), {0}) == 0.0);

    // Flipping X1 is not, because the X1 margin is asymmetric.
    DiscreteMechanism flip;
    flip.space = space;
    flip.cond.assign(static_cast<std::size_t>(space.total) * space.total, 0.0);
    std::vector<int> x(2);
    for (long i = 0; i < space.total; ++i) {
      space.decode(i, x);
      flip.cond[table_index(i, space.encode({1 - x[0], x[1]}))] = 1.0;
    }
    const KnockoffJoint kj = apply_mechanism(joint, flip);
    CHECK(check_exchangeability(kj, {0}) > 1e-3);
    CHECK(check_exchangeability(kj, {}) == 0.0);
  }

  TEST_CASE("likelihood ratio hand value 1.5") {
    // Under Q: X1 | X2 ~ Bernoulli(0.5); under P: Bernoulli(0.6). X2 is a
    // fair coin in both. Knockoffs built under Q, data drawn under P.
    const DiscreteJoint q_joint = iid_coins();
    const DiscreteJoint p_joint({2, 2}, {0.2, 0.2, 0.3, 0.3});
    const KnockoffJoint kj = apply_mechanism(p_joint, scip_mechanism(q_joint));
    const DiscreteConditional p_cond = conditional_from_joint(p_joint, 0);
    const DiscreteConditional q_cond = conditional_from_joint(q_joint, 0);

    for (int x2 = 0; x2 < 2; ++x2)
      for (int xt2 = 0; xt2 < 2; ++xt2) {
        const auto sides =
            likelihood_ratio_check(kj, p_cond, q_cond, 0, 1, 0,
                                   {0, x2}, {0, xt2});
        CHECK(sides.rhs == doctest::Approx(1.5).epsilon(1e-14));
        CHECK(sides.lhs == doctest::Approx(sides.rhs).epsilon(1e-12));
      }

    // a = b is symmetric: ratio one on both sides
    const auto same =
        likelihood_ratio_check(kj, p_cond, q_cond, 0, 1, 1, {0, 0}, {0, 1});
    CHECK(same.lhs == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(same.rhs == doctest::Approx(1.0).epsilon(1e-13));

    // Q = P collapses the ratio to the exact exchangeable case
    const KnockoffJoint exact = scip_knockoffs(p_joint);
    const auto both =
        likelihood_ratio_check(exact, p_cond, p_cond, 0, 1, 0, {0, 0}, {0, 0});
    CHECK(both.rhs == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(both.lhs == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("conditional_from_joint normalizes and fills empty rows") {
    const DiscreteConditional cond = conditional_from_joint(correlated_pair(), 0);
    // P(X1 = x2 | X2 = x2) = 1 on the support
    CHECK(cond.at({0, 0}) == doctest::Approx(1.0));
    CHECK(cond.at({1, 0}) == doctest::Approx(0.0));
    CHECK(cond.at({1, 1}) == doctest::Approx(1.0));

    // zero-mass conditioning event: uniform row
    const DiscreteJoint partial({2, 2}, {0.5, 0.0, 0.5, 0.0});
    const DiscreteConditional c2 = conditional_from_joint(partial, 0);
    CHECK(c2.at({0, 1}) == doctest::Approx(0.5));
    CHECK(c2.at({1, 1}) == doctest::Approx(0.5));
  }

  TEST_CASE("apply_mechanism rejects unnormalized rows on the support") {
    const DiscreteJoint joint = iid_coins();
    DiscreteMechanism broken;
    broken.space = joint.space;
    broken.cond.assign(16, 0.0);  // every row sums to zero
    CHECK_THROWS_AS(apply_mechanism(joint, broken), NumericalError);
  }

  TEST_CASE("randomized oracle sweep passes") {
    const OracleVerification v = verify_discrete_oracle(25, 20240817);
    CHECK(v.instances == 25);
    CHECK(v.max_exchangeability_deviation <= 1e-12);
    CHECK(v.max_likelihood_ratio_error <= 1e-10);
    CHECK(v.max_marginalization_error <= 1e-12);
    CHECK(v.passed());
  }
}
