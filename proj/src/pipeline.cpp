#include "exmap/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "exmap/error.hpp"
#include "exmap/glmm.hpp"
#include "exmap/indicators.hpp"
#include "exmap/inference.hpp"
#include "exmap/ranking.hpp"

namespace exmap {

namespace fs = std::filesystem;

void parallel_for(std::size_t count, unsigned workers,
                  const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

PipelineConfig PipelineConfig::from_json(const Json& doc, const fs::path& base_dir) {
  PipelineConfig c;
  auto resolve = [&](const Json& v) {
    fs::path p = v.get<std::string>();
    return p.is_absolute() ? p : base_dir / p;
  };
  try {
    const auto& ed = doc.at("edition");
    c.edition_id = ed.at("id").get<std::string>();
    c.window_first = ed.at("window").at(0).get<int>();
    c.window_last = ed.at("window").at(1).get<int>();
    c.citation_cutoff = ed.value("citation_cutoff", "");
    c.created_at = ed.value("created_at", "");
    const auto& in = doc.at("inputs");
    if (in.contains("papers")) c.papers = resolve(in.at("papers"));
    if (in.contains("journals")) c.journals = resolve(in.at("journals"));
    if (in.contains("aggregated")) c.aggregated = resolve(in.at("aggregated"));
    c.institutions = resolve(in.at("institutions"));
    c.countries = resolve(in.at("countries"));
    if (doc.contains("store")) c.store = resolve(doc.at("store"));
    if (doc.contains("indicators")) {
      c.indicators.clear();
      for (const auto& i : doc.at("indicators")) c.indicators.push_back(parse_indicator(i.get<std::string>()));
    }
    if (doc.contains("covariates")) {
      c.covariates.clear();
      for (const auto& v : doc.at("covariates")) {
        const auto cov = parse_covariate(v.get<std::string>());
        if (cov != Covariate::none) c.covariates.push_back(cov);
      }
    }
    c.quadrature_nodes = doc.value("quadrature_nodes", c.quadrature_nodes);
    c.tolerance = doc.value("tolerance", c.tolerance);
    c.max_iterations = doc.value("max_iterations", c.max_iterations);
    c.workers = doc.value("workers", c.workers);
    c.curve_points = doc.value("curve_points", c.curve_points);
  } catch (const Json::exception& e) {
    throw UsageError(std::string("invalid config: ") + e.what());
  }
  c.validate();
  return c;
}

void PipelineConfig::validate() const {
  if (edition_id.empty()) throw UsageError("config: edition id is required");
  if (window_first > window_last) throw UsageError("config: window start after end");
  if (!aggregated && !(papers && journals)) {
    throw UsageError("config: need either papers + journals or an aggregated file");
  }
  if (indicators.empty()) throw UsageError("config: no indicators selected");
  if (quadrature_nodes < 1) throw UsageError("config: quadrature_nodes must be positive");
  if (!(tolerance > 0.0)) throw UsageError("config: tolerance must be positive");
  if (curve_points < 2) throw UsageError("config: curve_points must be at least 2");
  std::set<Covariate> seen;
  for (auto c : covariates) {
    if (!seen.insert(c).second) throw UsageError("config: duplicate covariate");
  }
}

namespace {

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open input " + path.string());
  return in;
}

FitSpec configure(FitSpec spec, const PipelineConfig& config) {
  spec.quadrature_nodes = config.quadrature_nodes;
  spec.tolerance = config.tolerance;
  spec.max_iterations = config.max_iterations;
  return spec;
}

struct OverallModel {
  FitResult fit;
  std::optional<Standardization> standardization;
};

std::vector<double> raw_values(const std::vector<SubjectDataset>& datasets, Covariate covariate) {
  std::vector<double> out;
  const auto slot = covariate_slot(covariate);
  for (const auto& ds : datasets) {
    for (const auto& obs : ds.observations) {
      if (obs.covariates[slot]) out.push_back(*obs.covariates[slot]);
    }
  }
  return out;
}

}  // namespace

std::map<std::string, InstitutionMeta> IngestResult::metadata() const {
  std::map<std::string, InstitutionMeta> out;
  for (const auto& inst : institutions) {
    out[inst.institution_id] = {inst.name, inst.country_code, inst.latitude, inst.longitude};
  }
  return out;
}

IngestResult ingest_inputs(const PipelineConfig& config) {
  config.validate();
  IngestResult result;
  {
    auto in = open_input(config.institutions);
    result.institutions = load_institutions(in);
  }
  {
    auto in = open_input(config.countries);
    result.countries = load_country_covariates(in);
  }
  if (config.papers) {
    auto papers_in = open_input(*config.papers);
    const auto papers = load_papers(papers_in, YearWindow{config.window_first, config.window_last});
    auto journals_in = open_input(*config.journals);
    const auto journals = load_journals(journals_in);
    result.counts = compute_institution_counts(papers, journals);
  } else {
    auto in = open_input(*config.aggregated);
    result.counts = load_aggregated(in);
  }
  for (auto indicator : config.indicators) {
    auto build = build_subject_datasets(result.counts, result.institutions, result.countries, indicator);
    if (build.datasets.empty()) {
      throw ValidationError("no subject reaches the inclusion thresholds");
    }
    if (indicator == config.indicators.front()) {
      for (const auto& w : build.warnings) {
        result.warnings.push_back(
            (w.institution_id.empty() ? "" : w.institution_id + "/" + w.subject_area + ": ") + w.message);
      }
    }
    result.datasets[indicator] = std::move(build.datasets);
  }
  return result;
}

SubjectFit fit_subject(const SubjectDataset& dataset, Covariate covariate,
                       const PipelineConfig& config,
                       const std::map<std::string, InstitutionMeta>& metadata) {
  auto [rows, z] = observations_for(dataset, covariate);
  auto spec = configure(covariate == Covariate::none
                            ? make_design(std::move(rows))
                            : make_design(std::move(rows), std::span<const double>(z)),
                        config);
  SubjectFit out;
  try {
    out.fit = fit_model(spec);
  } catch (const FitError& e) {
    throw FitError(dataset.subject_area + "/" + std::string(to_string(dataset.indicator)) + "/" +
                       std::string(to_string(covariate)) + ": " + e.what(),
                   e.best_iterate());
  }
  const auto eb = eb_estimates(spec, out.fit);
  out.table = build_ranking(out.fit, eb, spec.observations, metadata, dataset.subject_area,
                            dataset.indicator, covariate);
  return out;
}

PipelineOutput compute_edition(const PipelineConfig& config) {
  PipelineOutput out;
  auto& bundle = out.bundle;
  auto ingested = ingest_inputs(config);
  out.warnings = ingested.warnings;
  auto& datasets = ingested.datasets;
  const auto& institutions = ingested.institutions;
  const auto& countries = ingested.countries;

  const auto& reference = datasets.at(config.indicators.front());
  std::vector<Covariate> covariates = {Covariate::none};
  for (auto c : config.covariates) {
    if (reference.front().covariate_standardization[covariate_slot(c)]) {
      covariates.push_back(c);
    } else {
      out.warnings.push_back("covariate '" + std::string(to_string(c)) + "' skipped: no usable values");
    }
  }

  auto& edition = bundle.edition;
  edition.edition_id = config.edition_id;
  edition.window_first = config.window_first;
  edition.window_last = config.window_last;
  edition.citation_cutoff = config.citation_cutoff;
  edition.created_at = config.created_at;
  for (const auto& ds : reference) edition.subjects.push_back(ds.subject_area);
  edition.indicators = config.indicators;
  edition.covariates = covariates;

  const auto metadata = ingested.metadata();

  // Per-subject fits.
  struct Job {
    const SubjectDataset* dataset;
    Covariate covariate;
    FitResult fit;
    RankingTable table;
  };
  std::vector<Job> jobs;
  for (auto indicator : config.indicators) {
    for (const auto& ds : datasets.at(indicator)) {
      for (auto c : covariates) jobs.push_back({&ds, c, {}, {}});
    }
  }
  parallel_for(jobs.size(), config.workers, [&](std::size_t i) {
    auto& job = jobs[i];
    auto result = fit_subject(*job.dataset, job.covariate, config, metadata);
    job.fit = std::move(result.fit);
    job.table = std::move(result.table);
  });

  std::map<TableKey, RankingTable> unadjusted;
  for (const auto& job : jobs) {
    if (job.covariate == Covariate::none) {
      unadjusted[{job.dataset->subject_area, job.dataset->indicator, Covariate::none}] = job.table;
    }
  }
  for (auto& job : jobs) {
    TableKey key{job.dataset->subject_area, job.dataset->indicator, job.covariate};
    bundle.fits[key] = job.fit;
    if (job.covariate == Covariate::none) {
      bundle.rankings[key] = job.table;
      continue;
    }
    std::set<std::string> ids;
    for (const auto& e : job.table.entries) ids.insert(e.institution_id);
    const auto& base = unadjusted.at({key.subject, key.indicator, Covariate::none});
    bundle.rankings[key] = delta_rank(job.table, restrict_to(base, ids));
  }

  // Pooled models with subject dummies for the comparison report and curves.
  struct OverallJob {
    Indicator indicator;
    Covariate covariate;
    OverallModel model;
  };
  std::vector<OverallJob> overall;
  for (auto indicator : config.indicators) {
    for (auto c : covariates) overall.push_back({indicator, c, {}});
  }
  parallel_for(overall.size(), config.workers, [&](std::size_t i) {
    auto& job = overall[i];
    std::vector<ClusterObservation> rows;
    std::vector<double> z;
    const auto& sets = datasets.at(job.indicator);
    for (const auto& ds : sets) {
      auto [r, zz] = observations_for(ds, job.covariate);
      rows.insert(rows.end(), r.begin(), r.end());
      z.insert(z.end(), zz.begin(), zz.end());
    }
    const bool with_cov = job.covariate != Covariate::none;
    FitSpec spec;
    if (sets.size() >= 2) {
      spec = with_cov ? build_dummy_design(std::move(rows), std::span<const double>(z))
                      : build_dummy_design(std::move(rows));
    } else {
      spec = with_cov ? make_design(std::move(rows), std::span<const double>(z))
                      : make_design(std::move(rows));
      spec.subject_levels = {sets.front().subject_area};
    }
    try {
      job.model.fit = fit_model(configure(std::move(spec), config));
    } catch (const FitError& e) {
      throw FitError("pooled " + std::string(to_string(job.indicator)) + "/" +
                         std::string(to_string(job.covariate)) + ": " + e.what(),
                     e.best_iterate());
    }
    if (with_cov) job.model.standardization = sets.front().covariate_standardization[covariate_slot(job.covariate)];
  });

  for (auto indicator : config.indicators) {
    std::vector<ModelSummary> summaries;
    double sigma2_null = 0.0;
    for (const auto& job : overall) {
      if (job.indicator != indicator) continue;
      if (job.covariate == Covariate::none) sigma2_null = job.model.fit.sigma2;
      summaries.push_back(summarize_model(job.model.fit, job.covariate, sigma2_null));

      Json doc;
      doc["indicator"] = std::string(to_string(indicator));
      doc["covariate"] = std::string(to_string(job.covariate));
      if (job.model.standardization) {
        doc["standardization"] = Json{{"mean", job.model.standardization->mean},
                                      {"sd", job.model.standardization->sd}};
      }
      doc["fit"] = to_json(job.model.fit);
      bundle.documents["overall/" + std::string(to_string(indicator)) + "/" +
                       std::string(to_string(job.covariate)) + ".json"] = doc.dump(1);

      if (job.covariate != Covariate::none) {
        const auto raw = raw_values(datasets.at(indicator), job.covariate);
        const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
        std::vector<double> grid;
        for (std::size_t k = 0; k < config.curve_points; ++k) {
          grid.push_back(*lo + (*hi - *lo) * static_cast<double>(k) /
                                   static_cast<double>(config.curve_points - 1));
        }
        std::vector<CurvePoint> points;
        for (const auto& subject : job.model.fit.subject_levels) {
          auto curve = predict_curve(job.model.fit, *job.model.standardization, grid, subject);
          points.insert(points.end(), curve.begin(), curve.end());
        }
        bundle.documents["curves/" + std::string(to_string(indicator)) + "/" +
                         std::string(to_string(job.covariate)) + ".csv"] = curve_csv(points);
      }
    }
    bundle.documents["report/" + std::string(to_string(indicator)) + ".json"] =
        report_json(indicator, summaries).dump(1);
    bundle.documents["report/" + std::string(to_string(indicator)) + ".tsv"] = report_tsv(summaries);
  }

  // Country-level covariate correlations over countries with retained institutions.
  std::set<std::string> used_countries;
  std::map<std::string, std::string> country_of;
  for (const auto& inst : institutions) country_of[inst.institution_id] = inst.country_code;
  for (const auto& ds : reference) {
    for (const auto& obs : ds.observations) used_countries.insert(country_of.at(obs.institution_id));
  }
  std::vector<std::vector<double>> columns(3);
  for (const auto& c : countries) {
    if (!used_countries.contains(c.country_code)) continue;
    columns[0].push_back(c.corruption_index);
    columns[1].push_back(c.residents);
    columns[2].push_back(c.gdp_per_capita);
  }
  try {
    const auto matrix = pearson_matrix({"corruption", "residents", "gdp"}, columns);
    bundle.documents["report/correlations.json"] = to_json(matrix).dump(1);
    bundle.documents["report/correlations.tsv"] = correlation_tsv(matrix);
  } catch (const DegenerateError& e) {
    out.warnings.push_back(std::string("covariate correlations skipped: ") + e.what());
  }

  for (auto& [indicator, sets] : datasets) {
    for (auto& ds : sets) bundle.datasets.push_back(std::move(ds));
  }
  return out;
}

PipelineRun run_pipeline(const PipelineConfig& config) {
  if (config.store.empty()) throw UsageError("config: store directory is required");
  PipelineRun run;
  run.output = compute_edition(config);
  EditionStore store(config.store);
  run.checksum = store.store_edition(run.output.bundle);
  return run;
}

}  // namespace exmap
