#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "exmap/error.hpp"
#include "exmap/glmm.hpp"
#include "exmap/ingest.hpp"
#include "exmap/persistence.hpp"
#include "exmap/pipeline.hpp"
#include "exmap/ranking.hpp"
#include "exmap/serialize.hpp"
#include "exmap/service.hpp"
#include "exmap/simulate.hpp"

namespace fs = std::filesystem;
using namespace exmap;

namespace {

struct ConfigFlags {
  std::string config;
  std::string edition;
  std::string papers, journals, aggregated, institutions, countries, store;
  std::optional<int> window_first, window_last;
  std::optional<int> nodes, max_iterations;
  std::optional<double> tolerance;
  std::optional<unsigned> workers;
  std::vector<std::string> indicators, covariates;

  void attach(CLI::App* app, bool with_store) {
    app->add_option("-c,--config", config, "JSON pipeline config");
    app->add_option("--edition", edition, "edition id");
    app->add_option("--papers", papers, "paper-level CSV");
    app->add_option("--journals", journals, "journal CSV");
    app->add_option("--aggregated", aggregated, "pre-aggregated counts CSV");
    app->add_option("--institutions", institutions, "institution CSV");
    app->add_option("--countries", countries, "country covariate CSV");
    app->add_option("--window-first", window_first, "first publication year");
    app->add_option("--window-last", window_last, "last publication year");
    app->add_option("--nodes", nodes, "adaptive quadrature nodes (1 = Laplace)");
    app->add_option("--tolerance", tolerance, "convergence tolerance");
    app->add_option("--max-iterations", max_iterations, "optimizer iteration limit");
    app->add_option("--workers", workers, "worker threads");
    if (with_store) {
      app->add_option("--store", store, "edition store directory");
      app->add_option("--indicators", indicators, "indicators to compute")->delimiter(',');
      app->add_option("--covariates", covariates, "adjusted models to fit")->delimiter(',');
    }
  }

  PipelineConfig resolve() const {
    PipelineConfig c;
    if (!config.empty()) {
      std::ifstream in(config);
      if (!in) throw NotFoundError("cannot open config " + config);
      Json doc;
      try {
        doc = Json::parse(in);
      } catch (const Json::exception& e) {
        throw UsageError(std::string("config is not valid JSON: ") + e.what());
      }
      c = PipelineConfig::from_json(doc, fs::absolute(config).parent_path());
    } else {
      c.edition_id = "adhoc";
    }
    if (!edition.empty()) c.edition_id = edition;
    if (!papers.empty()) c.papers = papers;
    if (!journals.empty()) c.journals = journals;
    if (!aggregated.empty()) {
      c.aggregated = aggregated;
      c.papers.reset();
      c.journals.reset();
    }
    if (!institutions.empty()) c.institutions = institutions;
    if (!countries.empty()) c.countries = countries;
    if (!store.empty()) c.store = store;
    if (window_first) c.window_first = *window_first;
    if (window_last) c.window_last = *window_last;
    if (nodes) c.quadrature_nodes = *nodes;
    if (tolerance) c.tolerance = *tolerance;
    if (max_iterations) c.max_iterations = *max_iterations;
    if (workers) c.workers = *workers;
    if (!indicators.empty()) {
      c.indicators.clear();
      for (const auto& i : indicators) c.indicators.push_back(parse_indicator(i));
    }
    if (!covariates.empty()) {
      c.covariates.clear();
      for (const auto& v : covariates) {
        const auto cov = parse_covariate(v);
        if (cov != Covariate::none) c.covariates.push_back(cov);
      }
    }
    if (c.institutions.empty() || c.countries.empty()) {
      throw UsageError("institution and country files are required");
    }
    c.validate();
    return c;
  }
};

const SubjectDataset& find_dataset(const IngestResult& ingested, Indicator indicator,
                                   const std::string& subject) {
  for (const auto& ds : ingested.datasets.at(indicator)) {
    if (ds.subject_area == subject || slugify(ds.subject_area) == slugify(subject)) return ds;
  }
  throw NotFoundError("subject '" + subject + "' not in the retained datasets");
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << '\n';
  } else {
    write_file(path, content);
  }
}

std::string latest_edition(const EditionStore& store) {
  const auto editions = store.list();
  if (editions.empty()) throw NotFoundError("store has no editions");
  return editions.back().edition.edition_id;
}

HttpServer* active_server = nullptr;

extern "C" void on_signal(int) {
  if (active_server) active_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Excellence mapping: indicators, multilevel models and rankings"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate inputs, compute institution counts and datasets");
  ConfigFlags ingest_flags;
  ingest_flags.attach(ingest, false);
  std::string ingest_out;
  ingest->add_option("-o,--out", ingest_out, "write aggregated counts CSV here");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic fixture with known truth");
  FixtureParams fixture;
  std::string simulate_out;
  simulate->add_option("-o,--out", simulate_out, "output directory")->required();
  simulate->add_option("--seed", fixture.seed, "random seed");
  simulate->add_option("--institutions", fixture.institutions_per_subject, "institutions per subject");
  simulate->add_option("--n-min", fixture.aggregated_min, "smallest aggregated paper count");
  simulate->add_option("--n-max", fixture.aggregated_max, "largest aggregated paper count");
  simulate->add_option("--beta0", fixture.best_paper.beta0, "true intercept (best paper)");
  simulate->add_option("--beta1", fixture.best_paper.beta1, "true slope (best paper)");
  simulate->add_option("--sigma2", fixture.best_paper.sigma2, "true variance (best paper)");
  simulate->add_option("--subjects", fixture.subjects, "subject areas")->delimiter(',');

  // fit
  auto* fit = app.add_subcommand("fit", "Fit one per-subject model and print it as JSON");
  ConfigFlags fit_flags;
  fit_flags.attach(fit, false);
  std::string fit_subject_name, fit_indicator = "best_paper", fit_covariate = "none", fit_out;
  fit->add_option("--subject", fit_subject_name, "subject area")->required();
  fit->add_option("--indicator", fit_indicator, "best_paper or best_journal");
  fit->add_option("--covariate", fit_covariate, "none, collaboration, corruption, residents, gdp");
  fit->add_option("-o,--out", fit_out, "output file (default stdout)");

  // rank
  auto* rank = app.add_subcommand("rank", "Fit and rank one subject; adjusted tables carry delta ranks");
  ConfigFlags rank_flags;
  rank_flags.attach(rank, false);
  std::string rank_subject, rank_indicator = "best_paper", rank_covariate = "none", rank_out;
  rank->add_option("--subject", rank_subject, "subject area")->required();
  rank->add_option("--indicator", rank_indicator, "best_paper or best_journal");
  rank->add_option("--covariate", rank_covariate, "none, collaboration, corruption, residents, gdp");
  rank->add_option("-o,--out", rank_out, "output file (default stdout)");

  // run
  auto* run = app.add_subcommand("run", "Run the full pipeline and store an edition");
  ConfigFlags run_flags;
  run_flags.attach(run, true);

  // report
  auto* report = app.add_subcommand("report", "Print the stored model comparison report");
  std::string report_store, report_edition, report_indicator = "best_paper", report_format = "tsv";
  bool report_correlations = false;
  report->add_option("--store", report_store, "edition store directory")->required();
  report->add_option("--edition", report_edition, "edition id (default latest)");
  report->add_option("--indicator", report_indicator, "best_paper or best_journal");
  report->add_option("--format", report_format, "tsv or json")->check(CLI::IsMember({"tsv", "json"}));
  report->add_flag("--correlations", report_correlations, "print the covariate correlation matrix instead");

  // curves
  auto* curves = app.add_subcommand("curves", "Predicted rate against a raw covariate per subject");
  std::string curves_store, curves_edition, curves_indicator = "best_paper", curves_covariate = "gdp";
  std::optional<double> grid_min, grid_max;
  std::optional<std::size_t> grid_points;
  curves->add_option("--store", curves_store, "edition store directory")->required();
  curves->add_option("--edition", curves_edition, "edition id (default latest)");
  curves->add_option("--indicator", curves_indicator, "best_paper or best_journal");
  curves->add_option("--covariate", curves_covariate, "collaboration, corruption, residents, gdp");
  curves->add_option("--min", grid_min, "grid start (raw units)");
  curves->add_option("--max", grid_max, "grid end (raw units)");
  curves->add_option("--points", grid_points, "grid size");

  // serve
  auto* serve = app.add_subcommand("serve", "Serve stored editions over HTTP");
  std::string serve_store, serve_host = "127.0.0.1", serve_static;
  int serve_port = 8080;
  serve->add_option("--store", serve_store, "edition store directory")->required();
  serve->add_option("--host", serve_host, "bind address");
  serve->add_option("--port", serve_port, "port (0 picks a free one)");
  serve->add_option("--static", serve_static, "explorer asset directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*ingest) {
      const auto config = ingest_flags.resolve();
      const auto ingested = ingest_inputs(config);
      print_warnings(ingested.warnings);
      for (const auto& [indicator, sets] : ingested.datasets) {
        for (const auto& ds : sets) {
          std::cout << to_string(indicator) << '\t' << ds.subject_area << '\t'
                    << ds.observations.size() << " institutions\n";
        }
      }
      if (!ingest_out.empty()) {
        std::ofstream out(ingest_out, std::ios::binary);
        if (!out) throw Error("cannot write " + ingest_out);
        write_aggregated(out, ingested.counts);
      }
    } else if (*simulate) {
      const auto fx = simulate_fixture(fixture);
      write_fixture(fx, simulate_out);
      Json cfg;
      cfg["edition"] = {{"id", "synthetic"},
                        {"window", {fixture.window.first, fixture.window.last}},
                        {"citation_cutoff", "synthetic"},
                        {"created_at", ""}};
      cfg["inputs"] = {{"papers", "papers.csv"},
                       {"journals", "journals.csv"},
                       {"institutions", "institutions.csv"},
                       {"countries", "countries.csv"}};
      cfg["store"] = "store";
      write_file(fs::path(simulate_out) / "config.json", cfg.dump(2) + "\n");
      cfg["inputs"].erase("papers");
      cfg["inputs"].erase("journals");
      cfg["inputs"]["aggregated"] = "aggregated.csv";
      write_file(fs::path(simulate_out) / "config_aggregated.json", cfg.dump(2) + "\n");
      std::cout << "wrote " << fx.papers.size() << " papers, " << fx.aggregated.size()
                << " aggregated rows to " << simulate_out << '\n';
    } else if (*fit) {
      const auto indicator = parse_indicator(fit_indicator);
      const auto covariate = parse_covariate(fit_covariate);
      auto config = fit_flags.resolve();
      config.indicators = {indicator};
      const auto ingested = ingest_inputs(config);
      print_warnings(ingested.warnings);
      const auto& ds = find_dataset(ingested, indicator, fit_subject_name);
      const auto result = fit_subject(ds, covariate, config, ingested.metadata());
      write_output(fit_out, to_json(result.fit).dump(2));
    } else if (*rank) {
      const auto indicator = parse_indicator(rank_indicator);
      const auto covariate = parse_covariate(rank_covariate);
      auto config = rank_flags.resolve();
      config.indicators = {indicator};
      const auto ingested = ingest_inputs(config);
      print_warnings(ingested.warnings);
      const auto& ds = find_dataset(ingested, indicator, rank_subject);
      const auto metadata = ingested.metadata();
      auto table = fit_subject(ds, covariate, config, metadata).table;
      if (covariate != Covariate::none) {
        const auto base = fit_subject(ds, Covariate::none, config, metadata).table;
        std::set<std::string> ids;
        for (const auto& e : table.entries) ids.insert(e.institution_id);
        table = delta_rank(table, restrict_to(base, ids));
      }
      write_output(rank_out, to_json(table, config.edition_id).dump(2));
    } else if (*run) {
      const auto config = run_flags.resolve();
      const auto result = run_pipeline(config);
      print_warnings(result.output.warnings);
      std::cout << config.edition_id << '\t' << result.checksum << '\n';
    } else if (*report) {
      const EditionStore store(report_store);
      const auto edition = report_edition.empty() ? latest_edition(store) : report_edition;
      std::string path;
      if (report_correlations) {
        path = "report/correlations." + report_format;
      } else {
        path = "report/" + std::string(to_string(parse_indicator(report_indicator))) + "." + report_format;
      }
      write_output("", store.read_document(edition, path));
    } else if (*curves) {
      const auto indicator = parse_indicator(curves_indicator);
      const auto covariate = parse_covariate(curves_covariate);
      if (covariate == Covariate::none) throw UsageError("curves need a covariate");
      const EditionStore store(curves_store);
      const auto edition = curves_edition.empty() ? latest_edition(store) : curves_edition;
      const std::string stem = std::string(to_string(indicator)) + "/" + std::string(to_string(covariate));
      if (!grid_min && !grid_max && !grid_points) {
        write_output("", store.read_document(edition, "curves/" + stem + ".csv"));
      } else {
        if (!grid_min || !grid_max) throw UsageError("--min and --max must be given together");
        const std::size_t points = grid_points.value_or(25);
        if (points < 2) throw UsageError("--points must be at least 2");
        const auto doc = Json::parse(store.read_document(edition, "overall/" + stem + ".json"));
        const auto overall = fit_from_json(doc.at("fit"));
        const Standardization standardization{doc.at("standardization").at("mean").get<double>(),
                                              doc.at("standardization").at("sd").get<double>()};
        std::vector<double> grid;
        for (std::size_t k = 0; k < points; ++k) {
          grid.push_back(*grid_min + (*grid_max - *grid_min) * static_cast<double>(k) /
                                         static_cast<double>(points - 1));
        }
        std::vector<CurvePoint> all;
        for (const auto& subject : overall.subject_levels) {
          auto c = predict_curve(overall, standardization, grid, subject);
          all.insert(all.end(), c.begin(), c.end());
        }
        write_output("", curve_csv(all));
      }
    } else if (*serve) {
      const EditionStore store(serve_store);
      std::optional<fs::path> assets;
      if (!serve_static.empty()) assets = serve_static;
      HttpServer server(store, assets);
      active_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving " << serve_store << " on " << serve_host << ':' << serve_port << '\n';
      server.listen(serve_host, serve_port);
      active_server = nullptr;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
