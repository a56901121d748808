#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "exmap/pipeline.hpp"
#include "exmap/service.hpp"
#include "workspace.hpp"

#include <httplib.h>

using namespace exmap;
using testing_support::TempDir;

namespace {

struct Populated {
  TempDir dir{"service"};
  std::string checksum_2014;

  Populated() {
    auto config = testing_support::fixture_config(dir.path(), "2014");
    config.covariates = {Covariate::gdp, Covariate::collaboration};
    checksum_2014 = run_pipeline(config).checksum;
    config.edition_id = "2015";
    config.covariates = {Covariate::gdp};
    run_pipeline(config);
  }
};

Populated& populated() {
  static Populated p;
  return p;
}

}  // namespace

TEST_CASE("empty store") {
  TempDir dir("service-empty");
  EditionStore store(dir / "store");
  const Api api(store);
  const auto r = api.get("/api/editions", {});
  CHECK(r.status == 200);
  CHECK(Json::parse(r.body).at("editions").empty());
  CHECK(api.get("/api/rankings", {}).status == 404);
  CHECK(api.get("/api/institutions/X", {}).status == 404);
  CHECK(api.get("/api/nothing", {}).status == 404);
}

TEST_CASE("editions listing") {
  EditionStore store(populated().dir / "store");
  const auto body = Json::parse(Api(store).editions().body);
  REQUIRE(body.at("editions").size() == 2);
  CHECK(body["editions"][0]["edition_id"] == "2014");
  CHECK(body["editions"][0]["checksum"] == populated().checksum_2014);
  CHECK(body["editions"][1]["covariates"] == Json::array({"none", "gdp"}));
}

TEST_CASE("rankings are served byte for byte") {
  EditionStore store(populated().dir / "store");
  const Api api(store);
  for (const auto& key : store.ranking_keys("2014")) {
    const auto r = api.get("/api/rankings", {{"edition", "2014"},
                                            {"subject", key.subject},
                                            {"indicator", std::string(to_string(key.indicator))},
                                            {"covariate", std::string(to_string(key.covariate))}});
    REQUIRE(r.status == 200);
    CHECK(r.body == store.load_ranking_document("2014", key));
    CHECK(r.headers.at("X-Edition-Checksum") == populated().checksum_2014);
    const auto doc = Json::parse(r.body);
    for (const auto& e : doc.at("entries")) CHECK(e.contains("delta_rank") == (key.covariate != Covariate::none));
  }
  const auto latest = api.get("/api/rankings", {{"subject", "chemistry"}});
  REQUIRE(latest.status == 200);
  CHECK(Json::parse(latest.body).at("edition") == "2015");
}

TEST_CASE("unknown ranking keys suggest the nearest stored ones") {
  EditionStore store(populated().dir / "store");
  const Api api(store);
  const auto r = api.get("/api/rankings", {{"edition", "2014"}, {"subject", "Chemistry"}, {"covariate", "gpd"}});
  CHECK(r.status == 404);
  const auto body = Json::parse(r.body);
  REQUIRE_FALSE(body.at("nearest").empty());
  CHECK(body["nearest"][0]["subject"] == "Chemistry");
  CHECK(body["nearest"][0]["covariate"] == "gdp");
  const auto missing = api.get("/api/rankings", {{"edition", "1999"}});
  CHECK(missing.status == 404);
  CHECK(Json::parse(missing.body).at("editions").size() == 2);
}

TEST_CASE("institution summaries copy the ranking entries") {
  EditionStore store(populated().dir / "store");
  const Api api(store);
  const TableKey key{"Chemistry", Indicator::best_paper, Covariate::gdp};
  const auto table = Json::parse(store.load_ranking_document("2014", key));
  int checked = 0;
  for (const auto& entry : table.at("entries")) {
    const auto id = entry.at("institution_id").get<std::string>();
    const auto r = api.get("/api/institutions/" + id, {{"edition", "2014"}, {"covariate", "gdp"}});
    REQUIRE(r.status == 200);
    const auto doc = Json::parse(r.body);
    CHECK(doc.at("name") == entry.at("name"));
    bool found = false;
    for (const auto& row : doc.at("subjects")) {
      if (row.at("subject") != "Chemistry") continue;
      found = true;
      for (const char* field : {"n_papers", "probability", "goldstein", "ci95", "rank", "delta_rank", "significant"}) {
        CAPTURE(field);
        CHECK(row.at(field).dump() == entry.at(field).dump());
      }
    }
    CHECK(found);
    if (++checked == 15) break;
  }
  CHECK(api.get("/api/institutions/NOPE", {{"edition", "2014"}}).status == 404);
}

TEST_CASE("http front end") {
  EditionStore store(populated().dir / "store");
  HttpServer server(store);
  const int port = server.start("127.0.0.1", 0);
  REQUIRE(port > 0);
  httplib::Client client("127.0.0.1", port);
  auto res = client.Get("/api/editions");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");
  res = client.Get("/api/rankings?edition=2014&subject=Chemistry&indicator=best_journal&covariate=none");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body == store.load_ranking_document("2014", {"Chemistry", Indicator::best_journal, Covariate::none}));
  res = client.Get("/api/rankings?edition=2014&subject=Nowhere");
  REQUIRE(res);
  CHECK(res->status == 404);
  server.stop();
}
