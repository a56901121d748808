#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exmap/error.hpp"
#include "exmap/types.hpp"

namespace exmap {

/// Random-intercept binomial logistic model
///   logit p_i = x_i' beta + u_i,  y_i | u_i ~ Binomial(n_i, p_i),  u_i ~ N(0, sigma2)
/// over one row of `design` per observation.
struct FitSpec {
  std::vector<ClusterObservation> observations;
  Eigen::MatrixXd design;
  std::vector<std::string> column_names;
  /// Subject levels when the design carries subject dummies; the first entry
  /// is the reference level.
  std::vector<std::string> subject_levels;
  int quadrature_nodes = 8;
  double tolerance = 1e-6;
  int max_iterations = 500;
  bool fix_sigma2_zero = false;

  /// Throws ValidationError for shape mismatches, invalid counts or a
  /// rank-deficient design.
  void validate() const;
};

struct FitResult {
  std::vector<std::string> column_names;
  std::vector<std::string> subject_levels;
  Eigen::VectorXd beta;
  double sigma2 = 0.0;
  /// Covariance over (beta, sigma2); the variance parameter is last.
  Eigen::MatrixXd covariance;
  double log_likelihood = 0.0;
  bool converged = false;
  /// The estimate sits on sigma2 = 0.
  bool boundary = false;
  std::size_t n_clusters = 0;
  std::int64_t n_papers = 0;
  int iterations = 0;
  double gradient_norm = 0.0;
  int quadrature_nodes = 0;
  /// Marginal log-likelihood of every accepted optimizer iterate of the
  /// selected start.
  std::vector<double> loglik_trace;

  double beta_se(std::size_t i) const;
  double sigma2_se() const;
  std::size_t column(const std::string& name) const;
};

class FitError : public Error {
 public:
  FitError(const std::string& what, FitResult best) : Error(what), best_(std::move(best)) {}
  const FitResult& best_iterate() const noexcept { return best_; }

 private:
  FitResult best_;
};

struct EBEstimate {
  std::string institution_id;
  double u_mode = 0.0;
  double u_se = 0.0;
};

double logistic(double eta);
double logit(double p);

/// Posterior mode of one cluster's random intercept and the negative second
/// derivative of the joint log density there.
struct ClusterMode {
  double mode = 0.0;
  double curvature = 0.0;
};
ClusterMode cluster_mode(std::int64_t n, std::int64_t y, double eta, double sigma2);

/// logit(y / n) - eta, with (y + 0.5) / (n + 1) when y is 0 or n.
double raw_residual_logit(std::int64_t n, std::int64_t y, double eta);

/// Marginal log-likelihood with binomial coefficients included.
double marginal_loglik(const FitSpec& spec, const Eigen::VectorXd& beta, double sigma2);

struct LoglikGradient {
  double value = 0.0;
  /// d/d(beta, log sigma2).
  Eigen::VectorXd gradient;
};

/// Value and exact gradient of the quadrature approximation with respect to
/// (beta, log sigma2). Requires sigma2 > 0.
LoglikGradient marginal_loglik_gradient(const FitSpec& spec, const Eigen::VectorXd& beta,
                                        double log_sigma2);

/// Maximum-likelihood fit. Throws FitError when no start converges and
/// ValidationError for an invalid spec.
FitResult fit_model(const FitSpec& spec);

std::vector<EBEstimate> eb_estimates(const FitSpec& spec, const FitResult& fit);

double predict_probability(const Eigen::VectorXd& beta, const Eigen::VectorXd& design_row,
                           double u);

/// Intercept plus, when `covariate` is given, one standardized covariate
/// column.
FitSpec make_design(std::vector<ClusterObservation> observations,
                    std::optional<std::span<const double>> covariate = std::nullopt);

/// Pooled design with reference-coded subject dummies (first subject in
/// alphabetical order is the reference) and, with a covariate, the
/// dummy x covariate interactions. Column order: intercept, covariate,
/// dummies, interactions. Throws UsageError for fewer than two subjects.
FitSpec build_dummy_design(std::vector<ClusterObservation> observations,
                           std::optional<std::span<const double>> covariate = std::nullopt);

}  // namespace exmap
