#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "exmap/ingest.hpp"
#include "exmap/persistence.hpp"
#include "exmap/ranking.hpp"

namespace exmap {

struct PipelineConfig {
  std::string edition_id;
  int window_first = 2006;
  int window_last = 2010;
  std::string citation_cutoff;
  std::string created_at;

  std::optional<std::filesystem::path> papers;
  std::optional<std::filesystem::path> journals;
  std::optional<std::filesystem::path> aggregated;
  std::filesystem::path institutions;
  std::filesystem::path countries;
  std::filesystem::path store;

  std::vector<Indicator> indicators{kAllIndicators.begin(), kAllIndicators.end()};
  /// Adjusted models to fit; the unadjusted model is always fitted.
  std::vector<Covariate> covariates{kAllCovariates.begin(), kAllCovariates.end()};
  int quadrature_nodes = 8;
  double tolerance = 1e-6;
  int max_iterations = 500;
  unsigned workers = 1;
  std::size_t curve_points = 25;

  /// Reads the declarative config; relative paths resolve against
  /// `base_dir`. Throws UsageError for unknown names or missing fields.
  static PipelineConfig from_json(const Json& doc, const std::filesystem::path& base_dir);
  void validate() const;
};

struct IngestResult {
  std::vector<InstitutionRecord> institutions;
  std::vector<CountryCovariates> countries;
  std::vector<InstitutionSubjectCounts> counts;
  std::map<Indicator, std::vector<SubjectDataset>> datasets;
  std::vector<std::string> warnings;

  std::map<std::string, InstitutionMeta> metadata() const;
};

/// Loads the configured inputs, runs the indicator stage for paper-level
/// input and builds the per-subject datasets for every configured indicator.
IngestResult ingest_inputs(const PipelineConfig& config);

struct SubjectFit {
  FitResult fit;
  RankingTable table;
};

/// Per-subject model for one covariate (or none) with its ranking table.
SubjectFit fit_subject(const SubjectDataset& dataset, Covariate covariate,
                       const PipelineConfig& config,
                       const std::map<std::string, InstitutionMeta>& metadata);

struct PipelineOutput {
  EditionBundle bundle;
  std::vector<std::string> warnings;
};

/// Everything up to, but not including, the write to the store.
PipelineOutput compute_edition(const PipelineConfig& config);

struct PipelineRun {
  std::string checksum;
  PipelineOutput output;
};

/// ingest -> indicators -> fits -> rankings -> reports -> store. Any failure
/// propagates before the store is touched, so no partial edition is written.
PipelineRun run_pipeline(const PipelineConfig& config);

/// Runs `task(i)` for i in [0, count) on up to `workers` threads and
/// rethrows the first failure by index.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& task);

}  // namespace exmap
