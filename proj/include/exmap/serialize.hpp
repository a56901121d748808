#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "exmap/glmm.hpp"
#include "exmap/inference.hpp"
#include "exmap/ranking.hpp"
#include "exmap/types.hpp"

namespace exmap {

using Json = nlohmann::ordered_json;

struct Edition {
  std::string edition_id;
  int window_first = 0;
  int window_last = 0;
  std::string citation_cutoff;
  std::string created_at;
  std::vector<std::string> subjects;
  std::vector<Indicator> indicators;
  /// Always starts with Covariate::none.
  std::vector<Covariate> covariates;
};

Json to_json(const FitResult& fit);
FitResult fit_from_json(const Json& doc);

/// Ranking export document. `edition_id` is written alongside the table.
Json to_json(const RankingTable& table, const std::string& edition_id);
RankingTable ranking_from_json(const Json& doc);

Json to_json(const SubjectDataset& dataset);
Json to_json(const Edition& edition);
Edition edition_from_json(const Json& doc);

Json to_json(const ModelSummary& summary);
/// Model comparison report: one column group (Est, CL, CU) per model.
Json report_json(Indicator indicator, const std::vector<ModelSummary>& models);
std::string report_tsv(const std::vector<ModelSummary>& models);

struct CorrelationMatrix {
  std::vector<std::string> variables;
  std::size_t n = 0;
  std::vector<std::vector<double>> r;
  std::vector<std::vector<double>> p_value;
};

/// Pearson correlations with two-sided t-test p-values.
CorrelationMatrix pearson_matrix(const std::vector<std::string>& names,
                                 const std::vector<std::vector<double>>& columns);
Json to_json(const CorrelationMatrix& m);
std::string correlation_tsv(const CorrelationMatrix& m);

std::string curve_csv(const std::vector<CurvePoint>& points);

}  // namespace exmap
