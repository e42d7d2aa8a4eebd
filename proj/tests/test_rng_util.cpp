#include <doctest.h>

#include <cmath>
#include <vector>

#include "knockoffs/errors.hpp"
#include "knockoffs/rng.hpp"
#include "knockoffs/util.hpp"

using namespace knockoffs;

TEST_SUITE("rng") {
  TEST_CASE("derived seeds are stable and order sensitive") {
    CHECK(derive_seed(42, {1, 2}) == derive_seed(42, {1, 2}));
    CHECK(derive_seed(42, {1, 2}) != derive_seed(42, {2, 1}));
    CHECK(derive_seed(42, {1}) != derive_seed(42, {2}));
    CHECK(derive_seed(42, {1}) != derive_seed(43, {1}));
    CHECK(derive_seed(42, {}) != 42);
  }

  TEST_CASE("streams with equal keys produce equal draws") {
    auto a = make_stream(7, {stream::kDesign, 3});
    auto b = make_stream(7, {stream::kDesign, 3});
    auto c = make_stream(7, {stream::kNoise, 3});
    bool equal = true, all_equal_c = true;
    for (int i = 0; i < 100; ++i) {
      const auto va = a(), vb = b(), vc = c();
      equal = equal && va == vb;
      all_equal_c = all_equal_c && va == vc;
    }
    CHECK(equal);
    CHECK_FALSE(all_equal_c);
  }
}

TEST_SUITE("util") {
  TEST_CASE("wilson interval matches hand computation") {
    // 5/10 at z=1.96: center 0.5, half width z*sqrt(.025 + z^2/400)/(1+z^2/10)
    const auto e = wilson_interval(5, 10);
    CHECK(e.mean == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(e.se == doctest::Approx(std::sqrt(0.025)).epsilon(1e-12));
    CHECK(e.lo == doctest::Approx(0.2365930205).epsilon(1e-8));
    CHECK(e.hi == doctest::Approx(0.7634069795).epsilon(1e-8));

    const auto zero = wilson_interval(0, 50);
    CHECK(zero.mean == 0.0);
    CHECK(zero.lo == 0.0);
    CHECK(zero.hi > 0.0);
    const auto full = wilson_interval(50, 50);
    CHECK(full.hi == 1.0);
    CHECK(full.lo < 1.0);
  }

  TEST_CASE("wilson interval rejects impossible counts") {
    CHECK_THROWS_AS(wilson_interval(11, 10), ValidationError);
    CHECK_THROWS_AS(wilson_interval(-1, 10), ValidationError);
    CHECK_THROWS_AS(wilson_interval(0, 0), ValidationError);
  }

  TEST_CASE("mean interval") {
    const auto e = mean_interval({1.0, 2.0, 3.0, 4.0});
    CHECK(e.mean == doctest::Approx(2.5).epsilon(1e-12));
    // sample sd of 1..4 is sqrt(5/3)
    CHECK(e.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-12));
    CHECK(e.lo == doctest::Approx(e.mean - 1.96 * e.se).epsilon(1e-12));
    CHECK_THROWS_AS(mean_interval({}), ValidationError);
  }

  TEST_CASE("quantile interpolates order statistics") {
    const std::vector<double> xs = {4.0, 1.0, 3.0, 2.0};
    CHECK(quantile(xs, 0.0) == 1.0);
    CHECK(quantile(xs, 1.0) == 4.0);
    CHECK(quantile(xs, 0.5) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(quantile(xs, 0.25) == doctest::Approx(1.75).epsilon(1e-12));
    CHECK_THROWS_AS(quantile({}, 0.5), ValidationError);
    CHECK_THROWS_AS(quantile(xs, 1.5), ValidationError);
  }
}
