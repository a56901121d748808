#include "exmap/inference.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <cmath>

#include "exmap/error.hpp"

namespace exmap {

double standard_normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

WaldTest wald_variance_test(double sigma2, double se) {
  WaldTest t;
  if (sigma2 == 0.0) {
    t.z = 0.0;
    t.p_value = 0.5;
    return t;
  }
  if (!(se > 0.0)) throw DegenerateError("variance estimate has no positive standard error");
  t.z = sigma2 / se;
  t.p_value = standard_normal_upper_tail(t.z);
  t.significant = t.p_value < 0.05;
  return t;
}

WaldTest wald_variance_test(const FitResult& fit) {
  if (!fit.converged) throw UsageError("Wald test needs a converged fit");
  return wald_variance_test(fit.sigma2, fit.sigma2_se());
}

double icc(double sigma2) {
  if (sigma2 < 0.0) throw UsageError("variance must be non-negative");
  return sigma2 / (kLogisticResidualVariance + sigma2);
}

double r2_explained(double sigma2_null, double sigma2_covariate) {
  if (sigma2_null == 0.0) throw DegenerateError("R^2 undefined for a zero null variance");
  return (sigma2_null - sigma2_covariate) / sigma2_null;
}

IntervalEstimate confidence_interval(double center, double se, double multiplier, Scale scale) {
  if (se < 0.0) throw UsageError("standard error must be non-negative");
  if (!(multiplier > 0.0)) throw UsageError("multiplier must be positive");
  IntervalEstimate out;
  out.multiplier = multiplier;
  out.scale = scale;
  out.center = center;
  out.lower = center - multiplier * se;
  out.upper = center + multiplier * se;
  if (scale == Scale::probability) {
    out.center = logistic(out.center);
    out.lower = logistic(out.lower);
    out.upper = logistic(out.upper);
  }
  return out;
}

JointTest joint_wald_test(const FitResult& fit, std::span<const std::size_t> coefficient_indices) {
  const auto q = static_cast<Eigen::Index>(coefficient_indices.size());
  if (q == 0) throw UsageError("joint test needs at least one coefficient");
  Eigen::VectorXd b(q);
  Eigen::MatrixXd v(q, q);
  for (Eigen::Index i = 0; i < q; ++i) {
    const auto ii = coefficient_indices[i];
    if (ii >= static_cast<std::size_t>(fit.beta.size())) {
      throw UsageError("coefficient index " + std::to_string(ii) + " out of range");
    }
    b(i) = fit.beta(ii);
    for (Eigen::Index j = 0; j < q; ++j) v(i, j) = fit.covariance(ii, coefficient_indices[j]);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(v);
  if (lu.rank() < q) throw DegenerateError("singular covariance for the tested coefficients");

  JointTest t;
  t.df_numerator = static_cast<double>(q);
  t.df_denominator = static_cast<double>(fit.n_papers) - static_cast<double>(fit.beta.size());
  if (!(t.df_denominator > 0.0)) throw DegenerateError("no residual degrees of freedom");
  const double wald = b.dot(lu.solve(b));
  t.f = wald / t.df_numerator;
  if (t.f <= 0.0) {
    t.f = 0.0;
    t.p_value = 1.0;
  } else {
    boost::math::fisher_f dist(t.df_numerator, t.df_denominator);
    t.p_value = boost::math::cdf(boost::math::complement(dist, t.f));
  }
  return t;
}

InformationCriteria deviance_bic(double log_likelihood, std::size_t parameters,
                                 std::size_t n_clusters) {
  InformationCriteria ic;
  ic.deviance = -2.0 * log_likelihood;
  ic.bic = ic.deviance + static_cast<double>(parameters) * std::log(static_cast<double>(n_clusters));
  return ic;
}

InformationCriteria deviance_bic(const FitResult& fit) {
  return deviance_bic(fit.log_likelihood, static_cast<std::size_t>(fit.beta.size()) + 1,
                      fit.n_clusters);
}

ModelSummary summarize_model(const FitResult& fit, Covariate covariate, double sigma2_null) {
  ModelSummary s;
  s.label = std::string(model_label(covariate));
  s.covariate = covariate;
  s.n_clusters = fit.n_clusters;
  s.n_papers = fit.n_papers;
  s.boundary = fit.boundary;
  s.intercept = confidence_interval(fit.beta(0), fit.beta_se(0), kNormal95Multiplier, Scale::logit);

  std::vector<std::size_t> dummies;
  std::vector<std::size_t> interactions;
  for (std::size_t j = 0; j < fit.column_names.size(); ++j) {
    const auto& name = fit.column_names[j];
    if (name == "covariate") {
      s.slope = confidence_interval(fit.beta(j), fit.beta_se(j), kNormal95Multiplier, Scale::logit);
      if (fit.beta_se(j) > 0.0) s.slope_t = fit.beta(j) / fit.beta_se(j);
    } else if (name.rfind("subject[", 0) == 0) {
      (name.ends_with(":covariate") ? interactions : dummies).push_back(j);
    }
  }
  if (!dummies.empty()) s.subject_test = joint_wald_test(fit, dummies);
  if (!interactions.empty()) s.interaction_test = joint_wald_test(fit, interactions);

  const double se = fit.boundary ? 0.0 : fit.sigma2_se();
  s.sigma2 = confidence_interval(fit.sigma2, se, kNormal95Multiplier, Scale::logit);
  s.sigma2.lower = std::max(0.0, s.sigma2.lower);
  s.variance_test = wald_variance_test(fit.sigma2, se);
  s.icc = icc(fit.sigma2);
  s.r2 = sigma2_null > 0.0 ? r2_explained(sigma2_null, fit.sigma2) : 0.0;
  const auto ic = deviance_bic(fit);
  s.deviance = ic.deviance;
  s.bic = ic.bic;
  return s;
}

}  // namespace exmap
