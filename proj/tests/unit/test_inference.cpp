#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "exmap/glmm.hpp"
#include "exmap/inference.hpp"

using namespace exmap;

namespace {

FitResult manual_fit(Eigen::VectorXd beta, Eigen::MatrixXd covariance, double sigma2 = 0.3) {
  FitResult f;
  f.beta = std::move(beta);
  f.sigma2 = sigma2;
  f.covariance = std::move(covariance);
  f.converged = true;
  f.n_clusters = 100;
  f.n_papers = 70000;
  f.log_likelihood = -100.0;
  for (Eigen::Index i = 0; i < f.beta.size(); ++i) f.column_names.push_back("b" + std::to_string(i));
  return f;
}

}  // namespace

TEST_CASE("variance Wald test") {
  const auto table = wald_variance_test(0.50, 0.015);
  CHECK(table.z == doctest::Approx(33.33).epsilon(1e-3));
  CHECK(table.p_value < 0.05);
  CHECK(table.significant);

  const auto unit = wald_variance_test(1.0, 1.0);
  CHECK(unit.z == 1.0);
  CHECK(unit.p_value == doctest::Approx(0.158655).epsilon(1e-5));
  CHECK_FALSE(unit.significant);

  const auto boundary = wald_variance_test(0.0, 0.0);
  CHECK(boundary.z == 0.0);
  CHECK(boundary.p_value == 0.5);
  CHECK_FALSE(boundary.significant);

  CHECK_THROWS_AS(wald_variance_test(0.4, 0.0), DegenerateError);
}

TEST_CASE("intra-class correlation") {
  CHECK(kLogisticResidualVariance == doctest::Approx(M_PI * M_PI / 3.0).epsilon(1e-15));
  CHECK(icc(0.50) == doctest::Approx(0.132).epsilon(0.001 / 0.132));
  CHECK(icc(0.0) == 0.0);
  CHECK(icc(0.78) == doctest::Approx(0.192).epsilon(0.001 / 0.192));
  double previous = -1.0;
  for (double s = 0.0; s < 50.0; s += 0.37) {
    const double r = icc(s);
    CHECK(r > previous);
    CHECK(r < 1.0);
    previous = r;
  }
}

TEST_CASE("explained variance") {
  CHECK(r2_explained(0.50, 0.34) == doctest::Approx(0.32));
  CHECK(std::abs(r2_explained(0.50, 0.34) - 0.31) <= 0.02);
  CHECK(r2_explained(0.50, 0.50) == 0.0);
  CHECK(r2_explained(0.50, 0.28) == doctest::Approx(0.44));
  CHECK(r2_explained(0.75, 0.0) == 1.0);
  CHECK(r2_explained(0.5, 0.25) == 0.5);
  CHECK(r2_explained(0.4, 0.6) < 0.0);
  CHECK_THROWS_AS(r2_explained(0.0, 0.1), DegenerateError);
}

TEST_CASE("confidence intervals") {
  const auto g = confidence_interval(-2.0, 0.1, kGoldsteinMultiplier, Scale::logit);
  CHECK(g.lower == doctest::Approx(-2.139));
  CHECK(g.upper == doctest::Approx(-1.861));
  CHECK(g.multiplier == 1.39);

  const auto p = confidence_interval(0.0, 0.5, kNormal95Multiplier, Scale::probability);
  CHECK(p.center == 0.5);
  CHECK(p.lower == doctest::Approx(0.273).epsilon(1e-3));
  CHECK(p.upper == doctest::Approx(0.727).epsilon(1e-3));

  for (double c : {-4.0, -1.0, 0.3, 2.5}) {
    for (double se : {0.01, 0.2, 1.5}) {
      const auto narrow = confidence_interval(c, se, kGoldsteinMultiplier, Scale::probability);
      const auto wide = confidence_interval(c, se, kNormal95Multiplier, Scale::probability);
      CHECK(narrow.lower < narrow.center);
      CHECK(narrow.center < narrow.upper);
      CHECK(wide.lower < narrow.lower);
      CHECK(narrow.upper < wide.upper);
      CHECK(wide.lower >= 0.0);
      CHECK(wide.upper <= 1.0);
    }
  }

  // Non-overlap of two equal-se Goldstein intervals <=> |difference| > 2.78 se.
  const double se = 0.2;
  for (double diff : {0.5, 0.55, 0.556, 0.557, 0.6}) {
    const auto a = confidence_interval(0.0, se, kGoldsteinMultiplier, Scale::logit);
    const auto b = confidence_interval(diff, se, kGoldsteinMultiplier, Scale::logit);
    CHECK((a.upper < b.lower) == (diff > 2.78 * se));
  }
  CHECK_THROWS_AS(confidence_interval(0.0, -0.1, 1.39, Scale::logit), UsageError);
}

TEST_CASE("joint Wald F test") {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(3, 3) * 0.04;
  cov(1, 2) = cov(2, 1) = 0.01;

  SUBCASE("null coefficients") {
    const auto fit = manual_fit(Eigen::VectorXd::Zero(3), cov);
    const std::vector<std::size_t> idx = {1, 2};
    const auto t = joint_wald_test(fit, idx);
    CHECK(t.f == 0.0);
    CHECK(t.p_value == 1.0);
    CHECK(t.df_numerator == 2.0);
    CHECK(t.df_denominator == 70000.0 - 3.0);
  }
  SUBCASE("single coefficient equals the squared z") {
    Eigen::VectorXd beta(3);
    beta << -2.0, 0.3, -0.1;
    const auto fit = manual_fit(beta, cov);
    const std::vector<std::size_t> idx = {1};
    const auto t = joint_wald_test(fit, idx);
    const double z = 0.3 / std::sqrt(0.04);
    CHECK(std::abs(t.f - z * z) < 1e-9);
    // F(1, large) tail approaches the two-sided normal tail.
    CHECK(t.p_value == doctest::Approx(2.0 * standard_normal_upper_tail(z)).epsilon(1e-3));
  }
  SUBCASE("quadratic form") {
    Eigen::VectorXd beta(3);
    beta << -2.0, 0.3, -0.1;
    const auto fit = manual_fit(beta, cov);
    const std::vector<std::size_t> idx = {1, 2};
    const Eigen::Vector2d b(0.3, -0.1);
    const Eigen::Matrix2d v = cov.bottomRightCorner(2, 2);
    CHECK(joint_wald_test(fit, idx).f == doctest::Approx(b.dot(v.inverse() * b) / 2.0).epsilon(1e-12));
  }
  SUBCASE("singular covariance") {
    Eigen::MatrixXd singular = Eigen::MatrixXd::Ones(3, 3);
    const auto fit = manual_fit(Eigen::VectorXd::Ones(3), singular);
    const std::vector<std::size_t> idx = {1, 2};
    CHECK_THROWS_AS(joint_wald_test(fit, idx), DegenerateError);
  }
}

TEST_CASE("subject effects are detected in simulated seventeen-subject data") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<std::int64_t> size(500, 1000);
  int significant = 0;
  const int runs = 100;
  for (int run = 0; run < runs; ++run) {
    std::vector<ClusterObservation> obs;
    for (int s = 0; s < 17; ++s) {
      const double subject_effect = -0.4 + 0.05 * s;
      for (int c = 0; c < 8; ++c) {
        ClusterObservation o;
        o.institution_id = "I" + std::to_string(s) + "_" + std::to_string(c);
        o.subject_area = "Subject " + std::string(1, static_cast<char>('A' + s));
        o.n_trials = size(rng);
        const double eta = -1.5 + subject_effect + 0.3 * normal(rng);
        std::binomial_distribution<std::int64_t> draw(o.n_trials, 1.0 / (1.0 + std::exp(-eta)));
        o.n_success = draw(rng);
        obs.push_back(o);
      }
    }
    const auto fit = fit_model(build_dummy_design(std::move(obs)));
    const auto summary = summarize_model(fit, Covariate::none, fit.sigma2);
    REQUIRE(summary.subject_test);
    CHECK(summary.subject_test->df_numerator == 16.0);
    if (summary.subject_test->p_value < 0.05) ++significant;
  }
  CHECK(significant >= 95);
}

TEST_CASE("deviance and BIC") {
  const auto ic = deviance_bic(-100.0, 2, 100);
  CHECK(ic.deviance == 200.0);
  CHECK(ic.bic == doctest::Approx(209.21).epsilon(1e-4));
  CHECK(deviance_bic(-100.0, 3, 100).bic > ic.bic);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(2, 2) * 0.01;
  const auto fit = manual_fit(Eigen::VectorXd::Zero(1), cov);
  const auto from_fit = deviance_bic(fit);
  CHECK(from_fit.bic == doctest::Approx(200.0 + 2.0 * std::log(100.0)));
}

TEST_CASE("adding a covariate never increases the deviance") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  std::vector<ClusterObservation> obs;
  std::vector<double> x;
  for (int i = 0; i < 80; ++i) {
    ClusterObservation o;
    o.institution_id = "I" + std::to_string(i);
    o.subject_area = "S";
    o.n_trials = 600;
    x.push_back(normal(rng));
    const double eta = -2.0 + 0.3 * x.back() + 0.4 * normal(rng);
    std::binomial_distribution<std::int64_t> draw(600, 1.0 / (1.0 + std::exp(-eta)));
    o.n_success = draw(rng);
    obs.push_back(o);
  }
  const auto m0 = fit_model(make_design(obs));
  const auto m1 = fit_model(make_design(obs, std::span<const double>(x)));
  CHECK(deviance_bic(m1).deviance <= deviance_bic(m0).deviance + 1e-9);
  const auto s0 = summarize_model(m0, Covariate::none, m0.sigma2);
  const auto s1 = summarize_model(m1, Covariate::gdp, m0.sigma2);
  CHECK(s0.label == "M0");
  CHECK(s1.label == "M4");
  CHECK(s0.r2 == 0.0);
  CHECK(s1.r2 == doctest::Approx(r2_explained(m0.sigma2, m1.sigma2)));
  REQUIRE(s1.slope);
  CHECK(s1.slope->lower < m1.beta(1));
  CHECK(s1.icc == doctest::Approx(icc(m1.sigma2)));
  CHECK(s1.variance_test.significant);
  CHECK_FALSE(s1.subject_test);
}
