#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "knockoffs/diagnostics.hpp"
#include "knockoffs/errors.hpp"
#include "knockoffs/simulator.hpp"

using namespace knockoffs;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ScenarioConfig base_config() {
  ScenarioConfig c;
  c.n = 80;
  c.p = 12;
  c.ar1_rho = 0.4;
  c.signal_count = 3;
  c.signal_amplitude = 3.0;
  c.response_kind = ResponseKind::linear_gaussian;
  c.q = 0.25;
  c.statistic_kind = StatisticKind::lcd;
  c.lambda_fraction = 0.1;
  c.variant = FilterVariant::knockoff_plus;
  c.precision.kind = PrecisionModeKind::exact;
  c.replicates = 10;
  c.seed = 2024;
  return c;
}

}  // namespace

TEST_SUITE("simulator") {
  TEST_CASE("ar1 precision closed form and inverse identity") {
    const MatrixXd theta = gen_ar1_precision(2, 0.5);
    CHECK(theta(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    CHECK(theta(1, 1) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    CHECK(theta(0, 1) == doctest::Approx(-2.0 / 3.0).epsilon(1e-14));

    CHECK(gen_ar1_precision(4, 0.0).isIdentity(1e-15));

    for (double rho : {-0.6, 0.3, 0.8}) {
      const int p = 6;
      const MatrixXd t = gen_ar1_precision(p, rho);
      MatrixXd sigma(p, p);
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
          sigma(i, j) = std::pow(rho, std::abs(i - j));
      CHECK(((t * sigma) - MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff() <
            1e-10);
    }
  }

  TEST_CASE("truth placement: evenly spread, alternating signs") {
    ScenarioConfig c = base_config();
    c.p = 10;
    c.signal_count = 3;
    c.signal_amplitude = 2.0;
    const SimulationTruth t = make_truth(c);
    CHECK(t.nonnull == std::vector<int>{0, 3, 6});
    CHECK(t.beta(0) == 2.0);
    CHECK(t.beta(3) == -2.0);
    CHECK(t.beta(6) == 2.0);
    CHECK(t.beta.cwiseAbs().sum() == doctest::Approx(6.0));
    CHECK(t.is_null(1));
    CHECK_FALSE(t.is_null(3));

    c.signal_count = 0;
    const SimulationTruth none = make_truth(c);
    CHECK(none.nonnull.empty());
    CHECK(none.beta.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("perturb_precision hits the target and zero is exact") {
    const MatrixXd theta = gen_ar1_precision(5, 0.5);
    const GaussianModel model(theta);
    const PrecisionEstimate same = perturb_precision(theta, 0.0, 3);
    CHECK((same.theta.array() == model.theta.array()).all());

    for (double target : {0.02, 0.1, 0.3}) {
      const PrecisionEstimate pe = perturb_precision(theta, target, 3);
      CHECK(std::abs(delta_theta(model, pe) - target) <= 1e-6);
      CHECK((pe.theta - pe.theta.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK(pe.theta.diagonal().minCoeff() > 0.0);
    }
  }

  TEST_CASE("nodewise estimate: independent columns give a diagonal") {
    std::mt19937_64 eng(1234);
    std::normal_distribution<double> gauss;
    MatrixXd x(4000, 4);
    for (long i = 0; i < x.rows(); ++i)
      for (int j = 0; j < 4; ++j) x(i, j) = gauss(eng);
    const PrecisionEstimate pe = nodewise_estimate(x, 0.2);
    CHECK((pe.theta - MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 0.15);

    // a huge penalty removes every regression coefficient
    const PrecisionEstimate diag = nodewise_estimate(x, 1.0);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (i != j) CHECK(diag.theta(i, j) == 0.0);
    // residual variance collapses to the column variance
    for (int j = 0; j < 4; ++j)
      CHECK(diag.theta(j, j) ==
            doctest::Approx(static_cast<double>(x.rows()) /
                            x.col(j).squaredNorm())
                .epsilon(1e-12));
  }

  TEST_CASE("nodewise error shrinks with more unlabeled data") {
    const MatrixXd theta = gen_ar1_precision(6, 0.5);
    const GaussianModel model(theta);
    std::vector<double> errs;
    for (long n_u : {200, 1600, 12800}) {
      ScenarioConfig c = base_config();
      c.p = 6;
      c.ar1_rho = 0.5;
      c.precision.kind = PrecisionModeKind::nodewise_lasso;
      c.precision.unlabeled_n = n_u;
      c.precision.lambda_fraction = 0.05;
      c.seed = 91;
      const Scenario s = build_scenario(c);
      errs.push_back(delta_theta(model, s.estimate));
    }
    CHECK(errs[1] < errs[0]);
    CHECK(errs[2] < errs[1]);
  }

  TEST_CASE("replicates are deterministic and thread-count invariant") {
    const ScenarioConfig c = base_config();
    const Scenario s = build_scenario(c);
    const ReplicateRecord a = run_replicate(s, 4);
    const ReplicateRecord b = run_replicate(s, 4);
    CHECK((a.w.array() == b.w.array()).all());
    CHECK(a.selected == b.selected);
    CHECK((a.kl_hat.array() == b.kl_hat.array()).all());

    const auto serial = run_scenario(s, 1);
    const auto pooled = run_scenario(s, 4);
    REQUIRE(serial.size() == pooled.size());
    for (std::size_t r = 0; r < serial.size(); ++r) {
      CHECK((serial[r].w.array() == pooled[r].w.array()).all());
      CHECK(serial[r].selected == pooled[r].selected);
      CHECK(serial[r].fdp == pooled[r].fdp);
    }
    // the convenience overload matches the prebuilt scenario
    const ReplicateRecord direct = run_replicate(c, 4);
    CHECK((direct.w.array() == a.w.array()).all());
  }

  TEST_CASE("global null: fdp is the indicator of any selection") {
    ScenarioConfig c = base_config();
    c.signal_count = 0;
    c.replicates = 200;
    c.q = 0.2;
    const Scenario s = build_scenario(c);
    const auto records = run_scenario(s, 1);
    double mean_fdp = 0.0;
    for (const auto& r : records) {
      CHECK(r.fdp == (r.n_selected > 0 ? 1.0 : 0.0));
      CHECK(r.n_false == r.n_selected);
      CHECK(r.power == 0.0);
      mean_fdp += r.fdp;
    }
    mean_fdp /= static_cast<double>(records.size());
    const double se =
        std::sqrt(0.25 / static_cast<double>(records.size()));
    CHECK(mean_fdp <= 0.2 + 3.0 * se);
  }

  TEST_CASE("zero amplitude equals the global null record for record") {
    ScenarioConfig null_cfg = base_config();
    null_cfg.signal_count = 0;
    null_cfg.replicates = 20;
    ScenarioConfig zero_amp = base_config();
    zero_amp.signal_count = 3;
    zero_amp.signal_amplitude = 0.0;
    zero_amp.replicates = 20;

    const auto a = run_scenario(build_scenario(null_cfg), 1);
    const auto b = run_scenario(build_scenario(zero_amp), 1);
    for (std::size_t r = 0; r < a.size(); ++r) {
      CHECK((a[r].w.array() == b[r].w.array()).all());
      CHECK(a[r].selected == b[r].selected);
      CHECK(a[r].threshold == b[r].threshold);
      CHECK(a[r].fdp == b[r].fdp);
      CHECK(a[r].max_kl == b[r].max_kl);
    }
  }

  TEST_CASE("exact knockoffs keep kl at zero; perturbed ones do not") {
    ScenarioConfig c = base_config();
    c.replicates = 5;
    const auto exact = run_scenario(build_scenario(c), 1);
    for (const auto& r : exact) CHECK(r.max_kl == 0.0);

    c.precision.kind = PrecisionModeKind::column_perturb;
    c.precision.delta_target = 0.1;
    const Scenario s = build_scenario(c);
    CHECK(s.delta_theta_value == doctest::Approx(0.1).epsilon(1e-6));
    const auto perturbed = run_scenario(s, 1);
    bool any_nonzero = false;
    for (const auto& r : perturbed) any_nonzero = any_nonzero || r.max_kl != 0.0;
    CHECK(any_nonzero);
  }

  TEST_CASE("logistic responses stay in {0,1} and the pipeline completes") {
    ScenarioConfig c = base_config();
    c.response_kind = ResponseKind::logistic;
    c.replicates = 3;
    const auto records = run_scenario(build_scenario(c), 1);
    CHECK(records.size() == 3);
    for (const auto& r : records) CHECK(r.w.allFinite());
  }

  TEST_CASE("report aggregation on hand-built records") {
    ScenarioConfig c = base_config();
    c.p = 4;
    c.signal_count = 1;
    c.q = 0.25;
    const SimulationTruth truth = make_truth(c);  // signal at feature 0

    ReplicateRecord r0;
    r0.w = VectorXd::Zero(4);
    r0.kl_hat = VectorXd::Zero(4);
    r0.selected = {0, 1};
    r0.threshold = 1.0;
    r0.n_selected = 2;
    r0.n_false = 1;
    r0.fdp = 0.5;
    r0.power = 1.0;
    r0.max_kl = 0.0;
    r0.max_null_kl = 0.0;
    ReplicateRecord r1 = r0;
    r1.selected = {};
    r1.n_selected = 0;
    r1.n_false = 0;
    r1.fdp = 0.0;
    r1.power = 0.0;

    const MonteCarloReport rep = estimate_fdr_power(
        {r0, r1}, truth, c, {0.0, 1e6}, 0.0);
    CHECK(rep.fdr.mean == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(rep.power.mean == doctest::Approx(0.5).epsilon(1e-12));
    // modified: (1 / (2 + 4) + 0) / 2
    CHECK(rep.modified_fdr.mean == doctest::Approx(0.5 / 6.0).epsilon(1e-12));
    // at a huge epsilon the restriction is vacuous: equals plain fdp mean
    CHECK(rep.restricted_fdr.back() == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(rep.per_replicate.size() == 2);

    // all-empty selections collapse everything to zero
    const MonteCarloReport empty = estimate_fdr_power(
        {r1, r1}, truth, c, {0.0}, 0.0);
    CHECK(empty.fdr.mean == 0.0);
    CHECK(empty.power.mean == 0.0);
  }

  TEST_CASE("restricted fdr at zero epsilon stays near q with exact knockoffs") {
    ScenarioConfig c = base_config();
    c.replicates = 150;
    c.q = 0.25;
    const Scenario s = build_scenario(c);
    const auto records = run_scenario(s, 1);
    const MonteCarloReport rep = estimate_fdr_power(
        records, s.truth, c, default_epsilon_grid(), s.delta_theta_value);
    const double se3 = 3.0 * std::sqrt(0.25 / 150.0);
    CHECK(rep.restricted_fdr.front() <= 0.25 + se3);
    CHECK(rep.fdr.mean <= 0.25 + se3);
  }

  TEST_CASE("config validation rejects bad fields") {
    ScenarioConfig c = base_config();
    c.p = 1;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = base_config();
    c.ar1_rho = 1.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = base_config();
    c.signal_count = 13;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = base_config();
    c.q = 0.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = base_config();
    c.lambda_fraction = 0.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = base_config();
    c.replicates = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = base_config();
    c.precision.kind = PrecisionModeKind::nodewise_lasso;
    c.precision.unlabeled_n = 1;
    CHECK_THROWS_AS(c.validate(), ValidationError);
  }
}
