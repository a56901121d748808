#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exmap/glmm.hpp"

namespace exmap {

/// Residual variance of the standard logistic distribution, pi^2 / 3
/// (printed as 3.29 in summaries).
inline constexpr double kLogisticResidualVariance = 3.28986813369645287294;

/// Interval multiplier under which non-overlap of two equal-precision
/// intervals corresponds to a 5% level difference.
inline constexpr double kGoldsteinMultiplier = 1.39;
inline constexpr double kNormal95Multiplier = 1.96;

enum class Scale { logit, probability };

struct IntervalEstimate {
  double center = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double multiplier = kNormal95Multiplier;
  Scale scale = Scale::logit;
};

struct WaldTest {
  double z = 0.0;
  double p_value = 1.0;
  bool significant = false;  // p < 0.05
};

/// One-sided test of sigma2 = 0. A boundary estimate returns z = 0, p = 0.5.
/// Throws DegenerateError when the variance has no positive standard error.
WaldTest wald_variance_test(const FitResult& fit);
WaldTest wald_variance_test(double sigma2, double se);

/// Intra-class correlation on the latent logistic scale.
double icc(double sigma2);

/// Proportional reduction of the random-intercept variance. Not clamped.
double r2_explained(double sigma2_null, double sigma2_covariate);

/// center +/- multiplier * se on the logit scale; on the probability scale
/// all three values are passed through the logistic function.
IntervalEstimate confidence_interval(double center, double se, double multiplier, Scale scale);

struct JointTest {
  double f = 0.0;
  double df_numerator = 0.0;
  double df_denominator = 0.0;
  double p_value = 1.0;
};

/// Wald F test of the selected fixed effects being jointly zero; the
/// denominator degrees of freedom are n_papers - rank(design).
JointTest joint_wald_test(const FitResult& fit, std::span<const std::size_t> coefficient_indices);

struct InformationCriteria {
  double deviance = 0.0;
  double bic = 0.0;
};

/// BIC counts the fixed effects plus one variance parameter and uses the
/// number of clusters as sample size.
InformationCriteria deviance_bic(const FitResult& fit);
InformationCriteria deviance_bic(double log_likelihood, std::size_t parameters,
                                 std::size_t n_clusters);

double standard_normal_upper_tail(double z);

/// One column of the model comparison report.
struct ModelSummary {
  std::string label;  // M0..M4
  Covariate covariate = Covariate::none;
  std::size_t n_clusters = 0;
  std::int64_t n_papers = 0;
  IntervalEstimate intercept;  // 95% interval, logit scale
  std::optional<IntervalEstimate> slope;
  std::optional<double> slope_t;
  std::optional<JointTest> subject_test;
  std::optional<JointTest> interaction_test;
  IntervalEstimate sigma2;  // 95% interval
  WaldTest variance_test;
  double icc = 0.0;
  double r2 = 0.0;
  double deviance = 0.0;
  double bic = 0.0;
  bool boundary = false;
};

/// Summary of `fit`; `sigma2_null` is the M0 variance used for R^2.
ModelSummary summarize_model(const FitResult& fit, Covariate covariate, double sigma2_null);

}  // namespace exmap
