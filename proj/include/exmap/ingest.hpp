#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "exmap/types.hpp"

namespace exmap {

/// Minimum papers an institution needs in a subject to be ranked.
inline constexpr std::int64_t kMinPapersPerInstitution = 500;
/// Minimum qualifying institutions for a subject to be published.
inline constexpr std::size_t kMinInstitutionsPerSubject = 50;

struct YearWindow {
  int first = 0;
  int last = 0;
  bool contains(int year) const { return year >= first && year <= last; }
};

/// Columns: paper_id, subject, year, citations, journal_id,
/// institutions (;-separated), countries (;-separated).
std::vector<PaperRecord> load_papers(std::istream& source,
                                     std::optional<YearWindow> window = std::nullopt);

/// Columns: journal_id, subject, sjr, sjr2. Empty prestige fields mean
/// "missing".
std::vector<JournalRecord> load_journals(std::istream& source);

/// Columns: institution_id, name, country, lat, lon.
std::vector<InstitutionRecord> load_institutions(std::istream& source);

/// Columns: country, corruption, residents_millions, gdp_per_capita.
std::vector<CountryCovariates> load_country_covariates(std::istream& source);

/// Columns: institution_id, subject, n_trials, n_success_bp, n_success_bj,
/// optionally collaboration.
std::vector<InstitutionSubjectCounts> load_aggregated(std::istream& source);
void write_aggregated(std::ostream& out, std::span<const InstitutionSubjectCounts> counts);

/// Share of the institution's papers whose affiliations name more than one
/// country. Papers not attributed to the institution are ignored.
double compute_international_collaboration(std::span<const PaperRecord> papers,
                                           const std::string& institution_id);

struct ZTransform {
  std::vector<double> values;
  double mean = 0.0;
  double sd = 1.0;
};

/// Standardizes to mean 0 and sample standard deviation 1 (n - 1
/// denominator). Throws DegenerateError for fewer than two values or zero
/// spread.
ZTransform z_transform(std::span<const double> values);

struct DatasetWarning {
  std::string institution_id;
  std::string subject_area;
  std::string message;
};

struct DatasetBuild {
  std::vector<SubjectDataset> datasets;
  std::vector<DatasetWarning> warnings;
};

/// Applies the inclusion thresholds, joins covariates and fits the pooled
/// z-transform. Institutions missing from `institutions` are dropped with a
/// warning; institutions whose country has no covariates keep their row with
/// the country-level covariates unset, so only the covariate models skip them.
DatasetBuild build_subject_datasets(std::span<const InstitutionSubjectCounts> counts,
                                    std::span<const InstitutionRecord> institutions,
                                    std::span<const CountryCovariates> covariates,
                                    Indicator indicator);

/// Rows of `dataset` that carry `covariate`, with the standardized value.
/// For Covariate::none every row is returned and the values are empty.
std::pair<std::vector<ClusterObservation>, std::vector<double>> observations_for(
    const SubjectDataset& dataset, Covariate covariate);

}  // namespace exmap
