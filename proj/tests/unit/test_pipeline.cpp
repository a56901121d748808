#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>

#include "exmap/error.hpp"
#include "exmap/pipeline.hpp"
#include "workspace.hpp"

using namespace exmap;
using testing_support::TempDir;

namespace {

struct CliResult {
  int status = -1;
  std::string out;
};

CliResult cli(const std::string& args) {
  const std::string command = std::string(EXMAP_CLI_PATH) + " " + args + " 2>&1";
  CliResult r;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

}  // namespace

TEST_CASE("fixture runs are deterministic and complete") {
  TempDir dir("pipeline");
  auto config = testing_support::fixture_config(dir.path(), "2014", FixtureParams{});
  const auto start = std::chrono::steady_clock::now();
  const auto first = run_pipeline(config);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(seconds < 60.0);

  config.store = dir / "store2";
  config.workers = 2;
  const auto second = run_pipeline(config);
  CHECK(first.checksum == second.checksum);

  const auto& bundle = first.output.bundle;
  CHECK(bundle.edition.subjects.size() == 3);
  CHECK(bundle.edition.covariates.size() == 5);
  CHECK(bundle.rankings.size() == 3 * 2 * 5);
  for (const auto& [key, table] : bundle.rankings) {
    CHECK(table.entries.size() >= 50);
    for (const auto& e : table.entries) CHECK(e.delta_rank.has_value() == (key.covariate != Covariate::none));
  }
  for (const auto& [key, fit] : bundle.fits) CHECK(fit.converged);
  CHECK(bundle.documents.contains("report/best_paper.json"));
  CHECK(bundle.documents.contains("report/best_journal.tsv"));
  CHECK(bundle.documents.contains("curves/best_paper/gdp.csv"));
  CHECK(bundle.documents.contains("report/correlations.json"));
  const auto report = Json::parse(bundle.documents.at("report/best_paper.json"));
  CHECK(report.dump().find("\"M4\"") != std::string::npos);

  EditionStore store(dir / "store");
  CHECK(store.contains("2014"));
  CHECK_THROWS_AS(run_pipeline([&] {
                    auto c = config;
                    c.store = dir / "store";
                    return c;
                  }()),
                  ConflictError);
}

TEST_CASE("configuration errors surface before any computation") {
  TempDir dir("pipeline-config");
  Json doc = {{"edition", {{"id", "x"}, {"window", {2006, 2010}}}},
              {"inputs", {{"aggregated", "agg.csv"}, {"institutions", "i.csv"}, {"countries", "c.csv"}}},
              {"store", "store"}};
  const auto ok = PipelineConfig::from_json(doc, dir.path());
  CHECK(ok.store == dir / "store");
  CHECK(*ok.aggregated == dir / "agg.csv");

  auto bad = doc;
  bad["covariates"] = {"gdp", "rainfall"};
  CHECK_THROWS_AS(PipelineConfig::from_json(bad, dir.path()), UsageError);
  bad = doc;
  bad["inputs"].erase("aggregated");
  CHECK_THROWS_AS(PipelineConfig::from_json(bad, dir.path()), UsageError);
  bad = doc;
  bad["edition"]["window"] = {2010, 2006};
  CHECK_THROWS_AS(PipelineConfig::from_json(bad, dir.path()), UsageError);
  bad = doc;
  bad["indicators"] = {"best_author"};
  CHECK_THROWS_AS(PipelineConfig::from_json(bad, dir.path()), UsageError);

  auto config = ok;
  config.store.clear();
  CHECK_THROWS_AS(run_pipeline(config), UsageError);
  CHECK_FALSE(std::filesystem::exists(dir / "store"));
}

TEST_CASE("correlations match an independent computation") {
  const std::vector<double> a = {1, 2, 3, 4, 5, 7};
  const std::vector<double> b = {2, 1, 4, 3, 7, 8};
  const std::vector<double> c = {9, 7, 6, 4, 2, 1};
  const auto m = pearson_matrix({"a", "b", "c"}, {a, b, c});
  CHECK(m.n == 6);
  CHECK(m.r[0][0] == doctest::Approx(1.0));
  CHECK(m.r[0][1] == doctest::Approx(pearson(a, b)).epsilon(1e-12));
  CHECK(m.r[2][1] == doctest::Approx(pearson(c, b)).epsilon(1e-12));
  CHECK(m.r[0][2] < -0.9);
  CHECK(m.p_value[0][2] < 0.01);
  CHECK(m.p_value[0][1] > m.p_value[0][2]);
  CHECK_THROWS_AS(pearson_matrix({"a", "flat"}, {a, std::vector<double>(6, 1.0)}), DegenerateError);
}

TEST_CASE("command line") {
  TempDir dir("cli");
  const auto d = dir.path().string();
  auto r = cli("simulate -o " + d + " --institutions 52 --subjects Chemistry,Physics");
  REQUIRE(r.status == 0);
  REQUIRE(std::filesystem::exists(dir / "config.json"));

  r = cli("run -c " + d + "/config.json --covariates gdp");
  CHECK(r.status == 0);
  CHECK(r.out.find('\t') != std::string::npos);

  r = cli("report --store " + d + "/store --indicator best_paper");
  CHECK(r.status == 0);
  CHECK(r.out.find("M4") != std::string::npos);

  r = cli("rank -c " + d + "/config.json --subject Chemistry --indicator best_journal --covariate gdp");
  CHECK(r.status == 0);
  CHECK(r.out.find("delta_rank") != std::string::npos);

  r = cli("curves --store " + d + "/store --covariate gdp --points 5 --min 1000 --max 50000");
  CHECK(r.status == 0);

  r = cli("run -c " + d + "/config.json --edition other --covariates rainfall");
  CHECK(r.status == 2);
  CHECK(r.out.find("rainfall") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "store" / "other"));

  r = cli("fit --subject Chemistry --papers /nonexistent.csv --journals /nonexistent.csv "
          "--institutions /nonexistent.csv --countries /nonexistent.csv");
  CHECK(r.status == 1);

  r = cli("fit -c " + d + "/config.json --subject Alchemy");
  CHECK(r.status != 0);

  CHECK(cli("frobnicate").status == 2);
}
