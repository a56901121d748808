#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "exmap/glmm.hpp"
#include "exmap/inference.hpp"
#include "exmap/types.hpp"

namespace exmap {

struct InstitutionMeta {
  std::string name;
  std::string country;
  double latitude = 0.0;
  double longitude = 0.0;
};

struct RankingEntry {
  std::string institution_id;
  std::string name;
  std::string country;
  double latitude = 0.0;
  double longitude = 0.0;
  std::int64_t n_papers = 0;
  std::int64_t n_success = 0;
  double u_mode = 0.0;
  double u_se = 0.0;
  double probability = 0.0;
  IntervalEstimate interval_goldstein;  // probability scale, 1.39
  IntervalEstimate interval_95;         // probability scale, 1.96
  IntervalEstimate goldstein_logit;     // logit scale, 1.39
  int rank = 0;
  std::optional<int> delta_rank;
  bool significant_vs_mean = false;
  /// +1 above the reference probability, -1 below, 0 not significant.
  int direction = 0;
};

struct RankingTable {
  std::string subject_area;
  Indicator indicator = Indicator::best_paper;
  Covariate covariate = Covariate::none;
  double beta0 = 0.0;
  double sigma2 = 0.0;
  double reference_probability = 0.5;
  /// Sorted by rank.
  std::vector<RankingEntry> entries;
};

/// Probability logistic(beta0 + u_mode) for every cluster of the fit, with
/// the covariate (if any) held at its standardized mean. Throws
/// NotFoundError when a cluster has no EB estimate.
RankingTable build_ranking(const FitResult& fit, std::span<const EBEstimate> eb,
                           std::span<const ClusterObservation> observations,
                           const std::map<std::string, InstitutionMeta>& metadata,
                           const std::string& subject, Indicator indicator, Covariate covariate);

/// Assigns ranks 1..N by descending probability, ties by institution id,
/// and sorts the entries accordingly.
void assign_ranks(RankingTable& table);

/// Subset of `table` re-ranked among `institution_ids`; delta ranks are
/// dropped.
RankingTable restrict_to(const RankingTable& table, const std::set<std::string>& institution_ids);

/// Copy of `adjusted` with delta_rank = unadjusted rank - adjusted rank.
/// Throws ValidationError naming the difference when the institution sets
/// differ.
RankingTable delta_rank(const RankingTable& adjusted, const RankingTable& unadjusted);

enum class PairwiseVerdict { a_higher, b_higher, indistinguishable };

/// Compares the closed 1.39 intervals on the logit scale.
PairwiseVerdict pairwise_compare(const RankingEntry& a, const RankingEntry& b);

/// Entries flagged significant against the reference, in table order.
RankingTable significance_filter(const RankingTable& table);

struct CurvePoint {
  double raw_value = 0.0;
  std::string subject;
  double predicted_rate = 0.0;
};

/// Predicted rate along a raw covariate grid from a pooled model with
/// subject dummies and interactions; random effects are set to zero.
/// Throws NotFoundError for a subject the fit does not know.
std::vector<CurvePoint> predict_curve(const FitResult& overall_fit,
                                      const Standardization& standardization,
                                      std::span<const double> raw_grid,
                                      const std::string& subject);

}  // namespace exmap
