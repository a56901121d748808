#include "exmap/ingest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>
#include <string_view>
#include <unordered_map>

#include "exmap/csv.hpp"
#include "exmap/error.hpp"

namespace exmap {

using namespace std::string_view_literals;

std::vector<PaperRecord> load_papers(std::istream& source, std::optional<YearWindow> window) {
  static constexpr std::array required = {"paper_id"sv,   "subject"sv,      "year"sv,
                                          "citations"sv,  "journal_id"sv,   "institutions"sv,
                                          "countries"sv};
  csv::Reader reader(source);
  reader.read_header(required);

  std::vector<PaperRecord> papers;
  std::set<std::tuple<std::string, int, std::string>> seen;
  while (reader.next()) {
    PaperRecord paper;
    paper.paper_id = reader.text("paper_id");
    paper.subject_area = reader.text("subject");
    paper.pub_year = static_cast<int>(reader.integer("year"));
    paper.citations = reader.integer("citations");
    paper.journal_id = reader.text("journal_id");
    paper.institution_ids = reader.list("institutions");
    paper.country_codes = reader.list("countries");

    if (paper.citations < 0) {
      throw ParseError(reader.line(), "negative citation count for paper " + paper.paper_id);
    }
    if (paper.institution_ids.empty()) {
      throw ParseError(reader.line(), "paper " + paper.paper_id + " has no institutions");
    }
    if (paper.country_codes.empty()) {
      throw ParseError(reader.line(), "paper " + paper.paper_id + " has no countries");
    }
    if (window && !window->contains(paper.pub_year)) {
      throw ParseError(reader.line(), "paper " + paper.paper_id + " year " +
                                          std::to_string(paper.pub_year) +
                                          " outside the publication window");
    }
    // Full counting: an institution listed twice still counts once.
    std::sort(paper.institution_ids.begin(), paper.institution_ids.end());
    paper.institution_ids.erase(
        std::unique(paper.institution_ids.begin(), paper.institution_ids.end()),
        paper.institution_ids.end());
    std::sort(paper.country_codes.begin(), paper.country_codes.end());
    paper.country_codes.erase(std::unique(paper.country_codes.begin(), paper.country_codes.end()),
                              paper.country_codes.end());

    if (!seen.emplace(paper.subject_area, paper.pub_year, paper.paper_id).second) {
      throw ValidationError("duplicate paper_id '" + paper.paper_id + "' in " +
                            paper.subject_area + " " + std::to_string(paper.pub_year) +
                            " (line " + std::to_string(reader.line()) + ")");
    }
    papers.push_back(std::move(paper));
  }
  return papers;
}

std::vector<JournalRecord> load_journals(std::istream& source) {
  static constexpr std::array required = {"journal_id"sv, "subject"sv, "sjr"sv, "sjr2"sv};
  csv::Reader reader(source);
  reader.read_header(required);

  std::vector<JournalRecord> journals;
  std::set<std::pair<std::string, std::string>> seen;
  while (reader.next()) {
    JournalRecord journal;
    journal.journal_id = reader.text("journal_id");
    journal.subject_area = reader.text("subject");
    journal.sjr = reader.optional_real("sjr");
    journal.sjr2 = reader.optional_real("sjr2");
    if ((journal.sjr && *journal.sjr <= 0) || (journal.sjr2 && *journal.sjr2 <= 0)) {
      throw ValidationError("journal " + journal.journal_id + " has non-positive prestige (line " +
                            std::to_string(reader.line()) + ")");
    }
    if (!seen.emplace(journal.subject_area, journal.journal_id).second) {
      throw ValidationError("duplicate journal '" + journal.journal_id + "' in " +
                            journal.subject_area);
    }
    journals.push_back(std::move(journal));
  }
  return journals;
}

std::vector<InstitutionRecord> load_institutions(std::istream& source) {
  static constexpr std::array required = {"institution_id"sv, "name"sv, "country"sv, "lat"sv,
                                          "lon"sv};
  csv::Reader reader(source);
  reader.read_header(required);

  std::vector<InstitutionRecord> out;
  std::set<std::string> seen;
  while (reader.next()) {
    InstitutionRecord inst;
    inst.institution_id = reader.text("institution_id");
    inst.name = reader.text("name");
    inst.country_code = reader.text("country");
    inst.latitude = reader.real("lat");
    inst.longitude = reader.real("lon");
    if (std::abs(inst.latitude) > 90.0 || std::abs(inst.longitude) > 180.0) {
      throw ValidationError("institution " + inst.institution_id +
                            " has coordinates outside the valid range (line " +
                            std::to_string(reader.line()) + ")");
    }
    if (!seen.insert(inst.institution_id).second) {
      throw ValidationError("duplicate institution_id '" + inst.institution_id + "'");
    }
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<CountryCovariates> load_country_covariates(std::istream& source) {
  static constexpr std::array required = {"country"sv, "corruption"sv, "residents_millions"sv,
                                          "gdp_per_capita"sv};
  csv::Reader reader(source);
  reader.read_header(required);

  std::vector<CountryCovariates> out;
  std::set<std::string> seen;
  while (reader.next()) {
    CountryCovariates c;
    c.country_code = reader.text("country");
    c.corruption_index = reader.real("corruption");
    c.residents = reader.real("residents_millions");
    c.gdp_per_capita = reader.real("gdp_per_capita");
    auto where = " for " + c.country_code + " (line " + std::to_string(reader.line()) + ")";
    if (c.corruption_index < 0.0 || c.corruption_index > 100.0) {
      throw ValidationError("corruption index outside [0, 100]" + where);
    }
    if (c.residents <= 0.0) throw ValidationError("residents must be positive" + where);
    if (c.gdp_per_capita <= 0.0) throw ValidationError("GDP per capita must be positive" + where);
    if (!seen.insert(c.country_code).second) {
      throw ValidationError("duplicate country '" + c.country_code + "'");
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<InstitutionSubjectCounts> load_aggregated(std::istream& source) {
  static constexpr std::array required = {"institution_id"sv, "subject"sv, "n_trials"sv,
                                          "n_success_bp"sv, "n_success_bj"sv};
  csv::Reader reader(source);
  reader.read_header(required);

  std::vector<InstitutionSubjectCounts> out;
  std::set<std::pair<std::string, std::string>> seen;
  while (reader.next()) {
    InstitutionSubjectCounts row;
    row.institution_id = reader.text("institution_id");
    row.subject_area = reader.text("subject");
    row.n_trials = reader.integer("n_trials");
    row.n_success_best_paper = reader.integer("n_success_bp");
    row.n_success_best_journal = reader.integer("n_success_bj");
    row.collaboration = reader.optional_real("collaboration");
    auto where = " for " + row.institution_id + " (line " + std::to_string(reader.line()) + ")";
    if (row.n_trials < 0 || row.n_success_best_paper < 0 || row.n_success_best_journal < 0 ||
        row.n_success_best_paper > row.n_trials || row.n_success_best_journal > row.n_trials) {
      throw ValidationError("counts violate 0 <= successes <= trials" + where);
    }
    if (row.collaboration && (*row.collaboration < 0.0 || *row.collaboration > 1.0)) {
      throw ValidationError("collaboration share outside [0, 1]" + where);
    }
    if (!seen.emplace(row.institution_id, row.subject_area).second) {
      throw ValidationError("duplicate row for " + row.institution_id + " in " + row.subject_area);
    }
    out.push_back(std::move(row));
  }
  return out;
}

double compute_international_collaboration(std::span<const PaperRecord> papers,
                                           const std::string& institution_id) {
  std::size_t attributed = 0;
  std::size_t international = 0;
  for (const auto& paper : papers) {
    if (std::find(paper.institution_ids.begin(), paper.institution_ids.end(), institution_id) ==
        paper.institution_ids.end()) {
      continue;
    }
    ++attributed;
    if (paper.country_codes.size() > 1) ++international;
  }
  if (attributed == 0) {
    throw DegenerateError("institution " + institution_id + " has no attributed papers");
  }
  return static_cast<double>(international) / static_cast<double>(attributed);
}

ZTransform z_transform(std::span<const double> values) {
  if (values.size() < 2) throw DegenerateError("z-transform needs at least two values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0) || sd <= 1e-14 * std::max(1.0, std::abs(mean))) {
    throw DegenerateError("degenerate covariate: zero variance");
  }
  ZTransform out;
  out.mean = mean;
  out.sd = sd;
  out.values.reserve(values.size());
  for (double v : values) out.values.push_back((v - mean) / sd);
  return out;
}

DatasetBuild build_subject_datasets(std::span<const InstitutionSubjectCounts> counts,
                                    std::span<const InstitutionRecord> institutions,
                                    std::span<const CountryCovariates> covariates,
                                    Indicator indicator) {
  std::unordered_map<std::string, const InstitutionRecord*> by_institution;
  for (const auto& inst : institutions) by_institution[inst.institution_id] = &inst;
  std::unordered_map<std::string, const CountryCovariates*> by_country;
  for (const auto& c : covariates) by_country[c.country_code] = &c;

  DatasetBuild build;
  std::map<std::string, std::vector<ClusterObservation>> by_subject;
  std::set<std::string> warned_countries;

  for (const auto& row : counts) {
    if (row.n_trials < kMinPapersPerInstitution) continue;
    auto inst = by_institution.find(row.institution_id);
    if (inst == by_institution.end()) {
      build.warnings.push_back({row.institution_id, row.subject_area,
                                "institution missing from the institution file; excluded"});
      continue;
    }
    ClusterObservation obs;
    obs.institution_id = row.institution_id;
    obs.subject_area = row.subject_area;
    obs.n_trials = row.n_trials;
    obs.n_success = indicator == Indicator::best_paper ? row.n_success_best_paper
                                                       : row.n_success_best_journal;
    obs.covariates[covariate_slot(Covariate::collaboration)] = row.collaboration;
    const auto& country = inst->second->country_code;
    if (auto c = by_country.find(country); c != by_country.end()) {
      obs.covariates[covariate_slot(Covariate::corruption)] = c->second->corruption_index;
      obs.covariates[covariate_slot(Covariate::residents)] = c->second->residents;
      obs.covariates[covariate_slot(Covariate::gdp)] = c->second->gdp_per_capita;
    } else {
      build.warnings.push_back(
          {row.institution_id, row.subject_area,
           "no covariates for country '" + country + "'; excluded from country-level models"});
    }
    by_subject[row.subject_area].push_back(std::move(obs));
  }

  for (auto& [subject, rows] : by_subject) {
    if (rows.size() < kMinInstitutionsPerSubject) continue;
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      return a.institution_id < b.institution_id;
    });
    SubjectDataset ds;
    ds.subject_area = subject;
    ds.indicator = indicator;
    ds.observations = std::move(rows);
    build.datasets.push_back(std::move(ds));
  }

  // One standardization per covariate over the pooled retained rows.
  for (auto covariate : kAllCovariates) {
    const auto slot = covariate_slot(covariate);
    std::vector<double> pooled;
    for (const auto& ds : build.datasets) {
      for (const auto& obs : ds.observations) {
        if (obs.covariates[slot]) pooled.push_back(*obs.covariates[slot]);
      }
    }
    try {
      auto z = z_transform(pooled);
      for (auto& ds : build.datasets) {
        ds.covariate_standardization[slot] = Standardization{z.mean, z.sd};
      }
    } catch (const DegenerateError& e) {
      build.warnings.push_back({"", "", "covariate '" + std::string(to_string(covariate)) +
                                            "' unavailable: " + e.what()});
    }
  }
  return build;
}

std::pair<std::vector<ClusterObservation>, std::vector<double>> observations_for(
    const SubjectDataset& dataset, Covariate covariate) {
  if (covariate == Covariate::none) return {dataset.observations, {}};
  const auto slot = covariate_slot(covariate);
  const auto& standardization = dataset.covariate_standardization[slot];
  if (!standardization) {
    throw DegenerateError("covariate '" + std::string(to_string(covariate)) +
                          "' has no standardization in " + dataset.subject_area);
  }
  std::vector<ClusterObservation> rows;
  std::vector<double> z;
  for (const auto& obs : dataset.observations) {
    if (!obs.covariates[slot]) continue;
    rows.push_back(obs);
    z.push_back(standardization->apply(*obs.covariates[slot]));
  }
  return {std::move(rows), std::move(z)};
}

void write_aggregated(std::ostream& out, std::span<const InstitutionSubjectCounts> counts) {
  out << "institution_id,subject,n_trials,n_success_bp,n_success_bj,collaboration\n";
  for (const auto& a : counts) {
    const std::vector<std::string> row = {
        a.institution_id, a.subject_area, std::to_string(a.n_trials),
        std::to_string(a.n_success_best_paper), std::to_string(a.n_success_best_journal),
        a.collaboration ? csv::format_real(*a.collaboration) : std::string()};
    csv::write_row(out, row);
  }
}

}  // namespace exmap
