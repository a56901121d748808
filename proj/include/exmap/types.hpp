#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace exmap {

enum class Indicator { best_paper, best_journal };

/// Covariates a model can be adjusted for. `none` is the unadjusted model.
enum class Covariate { none, collaboration, corruption, residents, gdp };

inline constexpr std::array<Covariate, 4> kAllCovariates = {
    Covariate::collaboration, Covariate::corruption, Covariate::residents,
    Covariate::gdp};
inline constexpr std::array<Indicator, 2> kAllIndicators = {
    Indicator::best_paper, Indicator::best_journal};

std::string_view to_string(Indicator indicator);
std::string_view to_string(Covariate covariate);
/// Model label used in reports: M0 for `none`, M1..M4 in declaration order.
std::string_view model_label(Covariate covariate);
Indicator parse_indicator(std::string_view text);
Covariate parse_covariate(std::string_view text);
/// Index into a four-slot covariate array; `none` has no slot.
std::size_t covariate_slot(Covariate covariate);

struct PaperRecord {
  std::string paper_id;
  std::string subject_area;
  int pub_year = 0;
  std::int64_t citations = 0;
  std::string journal_id;
  std::vector<std::string> institution_ids;
  std::vector<std::string> country_codes;
};

struct JournalRecord {
  std::string journal_id;
  std::string subject_area;
  std::optional<double> sjr;
  std::optional<double> sjr2;
};

struct InstitutionRecord {
  std::string institution_id;
  std::string name;
  std::string country_code;
  double latitude = 0.0;
  double longitude = 0.0;
};

struct CountryCovariates {
  std::string country_code;
  double corruption_index = 0.0;
  double residents = 0.0;  // millions
  double gdp_per_capita = 0.0;
};

/// Per institution and subject counts, either aggregated from paper rows
/// or read from a pre-aggregated file.
struct InstitutionSubjectCounts {
  std::string institution_id;
  std::string subject_area;
  std::int64_t n_trials = 0;
  std::int64_t n_success_best_paper = 0;
  std::int64_t n_success_best_journal = 0;
  std::optional<double> collaboration;
};

using CovariateValues = std::array<std::optional<double>, 4>;

struct ClusterObservation {
  std::string institution_id;
  std::string subject_area;
  std::int64_t n_trials = 0;
  std::int64_t n_success = 0;
  /// Raw (unstandardized) covariates indexed by covariate_slot().
  CovariateValues covariates{};
};

struct Standardization {
  double mean = 0.0;
  double sd = 1.0;

  double apply(double raw) const { return (raw - mean) / sd; }
};

struct SubjectDataset {
  std::string subject_area;
  Indicator indicator = Indicator::best_paper;
  std::vector<ClusterObservation> observations;
  std::array<std::optional<Standardization>, 4> covariate_standardization{};
};

}  // namespace exmap
