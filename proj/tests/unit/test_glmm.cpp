#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "exmap/glmm.hpp"
#include "exmap/simulate.hpp"
#include "oracles.hpp"

using namespace exmap;

namespace {

ClusterObservation cluster(std::string id, std::int64_t n, std::int64_t y, std::string subject = "S") {
  ClusterObservation o;
  o.institution_id = std::move(id);
  o.subject_area = std::move(subject);
  o.n_trials = n;
  o.n_success = y;
  return o;
}

struct Toy {
  FitSpec spec;
  Eigen::VectorXd beta;
  double sigma2;
};

Toy random_toy(std::uint64_t seed, std::size_t clusters, bool with_covariate) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> size(20, 400);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Toy t;
  t.sigma2 = 0.1 + 1.5 * unit(rng);
  t.beta = Eigen::VectorXd(with_covariate ? 2 : 1);
  t.beta(0) = -2.0 + 2.0 * unit(rng);
  if (with_covariate) t.beta(1) = normal(rng) * 0.5;
  std::vector<ClusterObservation> obs;
  std::vector<double> x;
  for (std::size_t i = 0; i < clusters; ++i) {
    const auto n = size(rng);
    x.push_back(normal(rng));
    double eta = t.beta(0) + normal(rng) * std::sqrt(t.sigma2);
    if (with_covariate) eta += t.beta(1) * x.back();
    std::binomial_distribution<std::int64_t> draw(n, 1.0 / (1.0 + std::exp(-eta)));
    obs.push_back(cluster("C" + std::to_string(i), n, draw(rng)));
  }
  t.spec = with_covariate ? make_design(std::move(obs), std::span<const double>(x))
                          : make_design(std::move(obs));
  return t;
}

double brute_loglik(const FitSpec& spec, const Eigen::VectorXd& beta, double sigma2) {
  const Eigen::VectorXd eta = spec.design * beta;
  double total = 0.0;
  for (std::size_t i = 0; i < spec.observations.size(); ++i) {
    const auto& o = spec.observations[i];
    total += oracle::trapezoid_cluster(o.n_trials, o.n_success, eta(i), sigma2);
  }
  return total;
}

}  // namespace

TEST_CASE("logistic and logit") {
  CHECK(logistic(0.0) == 0.5);
  CHECK(logistic(-2.03) == doctest::Approx(0.116).epsilon(1e-3));
  CHECK(logistic(-2.03 + 0.53) == doctest::Approx(0.182).epsilon(1e-3));
  CHECK(logistic(-800.0) >= 0.0);
  CHECK(logistic(800.0) <= 1.0);
  CHECK(logit(logistic(1.7)) == doctest::Approx(1.7).epsilon(1e-14));
}

TEST_CASE("predict_probability evaluates the logistic of the linear predictor") {
  Eigen::VectorXd beta(2);
  beta << -2.03, 0.53;
  Eigen::VectorXd row(2);
  row << 1.0, 1.0;
  CHECK(predict_probability(beta, row, 0.0) == doctest::Approx(0.182).epsilon(2e-3));
  row << 1.0, 0.0;
  CHECK(predict_probability(beta, row, 0.0) == doctest::Approx(0.116).epsilon(2e-3));
  Eigen::VectorXd zero(1);
  zero << 0.0;
  Eigen::VectorXd one(1);
  one << 1.0;
  CHECK(predict_probability(zero, one, 0.0) == 0.5);
}

TEST_CASE("marginal likelihood with zero variance is the binomial likelihood") {
  SUBCASE("single trial at p = 1/2") {
    auto spec = make_design({cluster("A", 1, 0), cluster("B", 1, 1)});
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(1);
    CHECK(marginal_loglik(spec, beta, 0.0) == doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-14));
  }
  SUBCASE("random instance") {
    auto toy = random_toy(11, 12, true);
    const Eigen::VectorXd eta = toy.spec.design * toy.beta;
    double expected = 0.0;
    for (std::size_t i = 0; i < toy.spec.observations.size(); ++i) {
      const auto& o = toy.spec.observations[i];
      expected += oracle::log_binomial_pmf(o.n_trials, o.n_success, eta(i));
    }
    CHECK(marginal_loglik(toy.spec, toy.beta, 0.0) == doctest::Approx(expected).epsilon(1e-13));
  }
  auto spec = make_design({cluster("A", 1, 0), cluster("B", 1, 1)});
  CHECK_THROWS_AS(marginal_loglik(spec, Eigen::VectorXd::Zero(1), -1.0), UsageError);
}

TEST_CASE("adaptive quadrature matches brute-force trapezoid integration") {
  auto spec = make_design({cluster("A", 40, 3), cluster("B", 120, 31), cluster("C", 15, 0),
                           cluster("D", 300, 200), cluster("E", 1, 1)});
  spec.quadrature_nodes = 32;
  Eigen::VectorXd beta(1);
  beta << -0.7;
  for (double sigma2 : {0.05, 0.5, 2.0}) {
    CAPTURE(sigma2);
    CHECK(std::abs(marginal_loglik(spec, beta, sigma2) - brute_loglik(spec, beta, sigma2)) < 1e-6);
  }
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto toy = random_toy(seed, 5, true);
    toy.spec.quadrature_nodes = 32;
    CHECK(std::abs(marginal_loglik(toy.spec, toy.beta, toy.sigma2) -
                   brute_loglik(toy.spec, toy.beta, toy.sigma2)) < 1e-6);
  }
}

TEST_CASE("more quadrature nodes converge and Laplace error shrinks with the variance") {
  auto toy = random_toy(7, 30, false);
  auto with_nodes = [&](int nodes, double sigma2) {
    auto spec = toy.spec;
    spec.quadrature_nodes = nodes;
    return marginal_loglik(spec, toy.beta, sigma2);
  };
  for (double sigma2 : {0.1, 1.0, 2.0}) {
    CHECK(std::abs(with_nodes(32, sigma2) - with_nodes(64, sigma2)) < 1e-8);
  }
  double previous = INFINITY;
  for (double sigma2 : {2.0, 1.0, 0.5, 0.1, 0.01}) {
    const double gap = std::abs(with_nodes(1, sigma2) - with_nodes(64, sigma2));
    CHECK(gap < previous);
    previous = gap;
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto toy = random_toy(100 + seed, 8, true);
    const double tau = std::log(toy.sigma2);
    const auto g = marginal_loglik_gradient(toy.spec, toy.beta, tau);
    CHECK(g.value == doctest::Approx(marginal_loglik(toy.spec, toy.beta, toy.sigma2)).epsilon(1e-12));
    const double h = 1e-5;
    for (Eigen::Index k = 0; k <= toy.beta.size(); ++k) {
      auto eval = [&](double step) {
        Eigen::VectorXd b = toy.beta;
        double t = tau;
        if (k < toy.beta.size()) {
          b(k) += step;
        } else {
          t += step;
        }
        return marginal_loglik(toy.spec, b, std::exp(t));
      };
      const double fd = (eval(h) - eval(-h)) / (2.0 * h);
      CHECK(std::abs(g.gradient(k) - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("cluster mode agrees with a golden-section search") {
  for (auto [n, y, eta, s2] : std::vector<std::tuple<int, int, double, double>>{
           {500, 120, -2.0, 0.3}, {1000, 0, -1.0, 0.5}, {30, 30, 0.5, 2.0}, {1, 0, 0.0, 1.0},
           {3000, 400, -2.03, 0.28}}) {
    const auto m = cluster_mode(n, y, eta, s2);
    CHECK(m.mode == doctest::Approx(oracle::golden_mode(n, y, eta, s2)).epsilon(1e-8));
    const double p = logistic(eta + m.mode);
    CHECK(m.curvature == doctest::Approx(n * p * (1.0 - p) + 1.0 / s2).epsilon(1e-10));
  }
}

TEST_CASE("raw residual logit uses a continuity correction at the extremes") {
  CHECK(raw_residual_logit(100, 25, 0.0) == doctest::Approx(std::log(25.0 / 75.0)));
  CHECK(raw_residual_logit(100, 0, 0.0) == doctest::Approx(std::log(0.5 / 100.5)));
  CHECK(raw_residual_logit(100, 100, 1.0) == doctest::Approx(std::log(100.5 / 0.5) - 1.0));
}

TEST_CASE("fit recovers simulated parameters") {
  ClusterSimulation sim;
  sim.seed = 1;
  const auto data = simulate_clusters(sim);
  auto spec = make_design(data.observations, std::span<const double>(data.covariate));
  const auto fit = fit_model(spec);
  REQUIRE(fit.converged);
  CHECK_FALSE(fit.boundary);
  CHECK(fit.n_clusters == 600);
  CHECK(std::abs(fit.beta(0) - sim.truth.beta0) < 3.0 * fit.beta_se(0));
  CHECK(std::abs(fit.beta(1) - sim.truth.beta1) < 3.0 * fit.beta_se(1));
  CHECK(std::abs(fit.sigma2 - sim.truth.sigma2) < 3.0 * fit.sigma2_se());
  CHECK(fit.gradient_norm < spec.tolerance);
  CHECK(fit.covariance.rows() == 3);
  CHECK((fit.covariance - fit.covariance.transpose()).norm() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fit.covariance);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
  for (std::size_t i = 1; i < fit.loglik_trace.size(); ++i) {
    CHECK(fit.loglik_trace[i] >= fit.loglik_trace[i - 1] - 1e-12 * std::abs(fit.loglik_trace[i - 1]));
  }
  CHECK(fit.column("covariate") == 1);
  CHECK_THROWS_AS(fit.column("gdp"), NotFoundError);
}

TEST_CASE("identical clusters give a boundary fit at the common rate") {
  std::vector<ClusterObservation> obs;
  for (int i = 0; i < 20; ++i) obs.push_back(cluster("C" + std::to_string(i), 800, 120));
  const auto fit = fit_model(make_design(std::move(obs)));
  CHECK(fit.converged);
  CHECK(fit.boundary);
  CHECK(fit.sigma2 == 0.0);
  CHECK(fit.beta(0) == doctest::Approx(std::log(120.0 / 680.0)).epsilon(1e-8));
}

TEST_CASE("fixed zero variance reproduces plain logistic regression") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto toy = random_toy(200 + seed, 40, true);
    toy.spec.fix_sigma2_zero = true;
    toy.spec.tolerance = 1e-9;
    const auto fit = fit_model(toy.spec);
    std::vector<std::int64_t> n, y;
    for (const auto& o : toy.spec.observations) {
      n.push_back(o.n_trials);
      y.push_back(o.n_success);
    }
    const auto reference = oracle::irls_logistic(toy.spec.design, n, y);
    CHECK(fit.sigma2 == 0.0);
    CHECK((fit.beta - reference).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("shifting the covariate only moves the intercept") {
  auto toy = random_toy(5, 60, true);
  const auto base = fit_model(toy.spec);
  const double c = 3.5;
  auto shifted = toy.spec;
  shifted.design.col(1).array() += c;
  const auto moved = fit_model(shifted);
  CHECK(moved.beta(0) == doctest::Approx(base.beta(0) - base.beta(1) * c).epsilon(1e-4));
  CHECK(moved.beta(1) == doctest::Approx(base.beta(1)).epsilon(1e-4));
  CHECK(moved.sigma2 == doctest::Approx(base.sigma2).epsilon(1e-4));
  const auto eb_a = eb_estimates(toy.spec, base);
  const auto eb_b = eb_estimates(shifted, moved);
  for (std::size_t i = 0; i < eb_a.size(); ++i) {
    CHECK(eb_a[i].u_mode == doctest::Approx(eb_b[i].u_mode).epsilon(1e-4));
  }
}

TEST_CASE("empirical Bayes estimates shrink toward zero") {
  auto toy = random_toy(9, 50, true);
  const auto fit = fit_model(toy.spec);
  REQUIRE_FALSE(fit.boundary);
  const auto eb = eb_estimates(toy.spec, fit);
  const Eigen::VectorXd eta = toy.spec.design * fit.beta;
  for (std::size_t i = 0; i < eb.size(); ++i) {
    const auto& o = toy.spec.observations[i];
    const double raw = raw_residual_logit(o.n_trials, o.n_success, eta(i));
    CHECK(eb[i].institution_id == o.institution_id);
    CHECK(eb[i].u_se > 0.0);
    CHECK(eb[i].u_mode == doctest::Approx(oracle::golden_mode(o.n_trials, o.n_success, eta(i), fit.sigma2))
                              .epsilon(1e-7));
    if (o.n_success > 0 && o.n_success < o.n_trials && raw != 0.0) {
      CHECK(eb[i].u_mode * raw > 0.0);
      CHECK(std::abs(eb[i].u_mode) < std::abs(raw));
    }
  }
}

TEST_CASE("cluster at the fixed-effect prediction has zero mode") {
  // Rate exactly 1/4 at eta = logit(1/4).
  const auto m = cluster_mode(400, 100, std::log(1.0 / 3.0), 0.7);
  CHECK(std::abs(m.mode) < 1e-9);
}

TEST_CASE("zero variance forces zero EB estimates") {
  std::vector<ClusterObservation> obs;
  for (int i = 0; i < 10; ++i) obs.push_back(cluster("C" + std::to_string(i), 1000, 200));
  auto spec = make_design(std::move(obs));
  const auto fit = fit_model(spec);
  REQUIRE(fit.boundary);
  for (const auto& e : eb_estimates(spec, fit)) {
    CHECK(e.u_mode == 0.0);
    CHECK(e.u_se == 0.0);
  }
}

TEST_CASE("spec validation") {
  SUBCASE("fewer than two clusters") {
    CHECK_THROWS_AS(fit_model(make_design({cluster("A", 10, 2)})), ValidationError);
  }
  SUBCASE("rank-deficient design") {
    std::vector<double> x(5, 1.0);
    auto spec = make_design({cluster("A", 10, 2), cluster("B", 10, 3), cluster("C", 10, 4),
                             cluster("D", 10, 5), cluster("E", 10, 6)},
                            std::span<const double>(x));
    CHECK_THROWS_AS(fit_model(spec), ValidationError);
  }
  SUBCASE("successes above trials") {
    CHECK_THROWS_AS(fit_model(make_design({cluster("A", 10, 11), cluster("B", 10, 3)})), ValidationError);
  }
  SUBCASE("covariate length mismatch") {
    std::vector<double> x(1, 0.0);
    CHECK_THROWS_AS(make_design({cluster("A", 10, 2), cluster("B", 10, 3)}, std::span<const double>(x)),
                    ValidationError);
  }
}

TEST_CASE("dummy design coding") {
  std::vector<ClusterObservation> obs;
  std::vector<double> x;
  const char* subjects[] = {"Physics", "Chemistry", "Biology"};
  for (int i = 0; i < 9; ++i) {
    obs.push_back(cluster("C" + std::to_string(i), 100, 10 + i, subjects[i % 3]));
    x.push_back(0.5 * i - 2.0);
  }
  SUBCASE("two subjects without covariate have width two") {
    std::vector<ClusterObservation> two(obs.begin(), obs.begin() + 2);
    const auto spec = build_dummy_design(two);
    CHECK(spec.design.cols() == 2);
    CHECK(spec.subject_levels == std::vector<std::string>{"Chemistry", "Physics"});
  }
  SUBCASE("reference subject row is (1, x, 0, 0, 0, 0)") {
    const auto spec = build_dummy_design(obs, std::span<const double>(x));
    CHECK(spec.design.cols() == 1 + 1 + 2 + 2);
    CHECK(spec.column_names ==
          std::vector<std::string>{"intercept", "covariate", "subject[Chemistry]", "subject[Physics]",
                                   "subject[Chemistry]:covariate", "subject[Physics]:covariate"});
    // row 2 is Biology, the alphabetical reference
    CHECK(spec.design(2, 0) == 1.0);
    CHECK(spec.design(2, 1) == x[2]);
    CHECK(spec.design.row(2).tail(4).isZero());
    // row 0 is Physics
    CHECK(spec.design(0, 3) == 1.0);
    CHECK(spec.design(0, 5) == x[0]);
    CHECK(spec.design(0, 2) == 0.0);
  }
  SUBCASE("seventeen subjects with covariate give width 34") {
    std::vector<ClusterObservation> many;
    std::vector<double> z;
    for (int s = 0; s < 17; ++s) {
      for (int k = 0; k < 2; ++k) {
        many.push_back(cluster("C" + std::to_string(s) + "_" + std::to_string(k), 100, 10,
                               "Subject " + std::string(1, static_cast<char>('A' + s))));
        z.push_back(k == 0 ? -1.0 : 1.0);
      }
    }
    CHECK(build_dummy_design(many, std::span<const double>(z)).design.cols() == 34);
  }
  SUBCASE("single subject is rejected") {
    std::vector<ClusterObservation> one = {obs[0], obs[3]};
    CHECK_THROWS_AS(build_dummy_design(one), UsageError);
  }
}
