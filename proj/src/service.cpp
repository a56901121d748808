#include "exmap/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <thread>

#include "exmap/error.hpp"

namespace exmap {

namespace {

ApiResponse json_response(int status, const Json& body) {
  ApiResponse r;
  r.status = status;
  r.body = body.dump();
  return r;
}

ApiResponse error_response(int status, const std::string& message, Json extra = Json::object()) {
  extra["error"] = message;
  return json_response(status, extra);
}

std::string param(const QueryParams& params, const std::string& name, const std::string& fallback) {
  auto it = params.find(name);
  return it == params.end() || it->second.empty() ? fallback : it->second;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string key_text(const TableKey& key) {
  return key.subject + "/" + std::string(to_string(key.indicator)) + "/" +
         std::string(to_string(key.covariate));
}

void add_cache_headers(ApiResponse& r, const std::string& checksum) {
  r.headers["X-Edition-Checksum"] = checksum;
  r.headers["ETag"] = "\"" + checksum + "\"";
}

// Latest stored edition when the query names none.
std::string resolve_edition(const EditionStore& store, const QueryParams& params) {
  auto id = param(params, "edition", "");
  if (!id.empty()) return id;
  const auto all = store.list();
  if (all.empty()) throw NotFoundError("no editions stored");
  return all.back().edition.edition_id;
}

}  // namespace

ApiResponse Api::editions() const {
  Json list = Json::array();
  for (const auto& s : store_.list()) {
    auto doc = to_json(s.edition);
    doc["checksum"] = s.checksum;
    list.push_back(std::move(doc));
  }
  return json_response(200, Json{{"editions", std::move(list)}});
}

ApiResponse Api::rankings(const QueryParams& params) const {
  std::string edition_id;
  try {
    edition_id = resolve_edition(store_, params);
  } catch (const NotFoundError& e) {
    return error_response(404, e.what());
  }
  if (!store_.contains(edition_id)) {
    Json known = Json::array();
    for (const auto& s : store_.list()) known.push_back(s.edition.edition_id);
    return error_response(404, "unknown edition '" + edition_id + "'", Json{{"editions", known}});
  }
  const auto summary = store_.summary(edition_id);
  const auto subject_param = param(params, "subject", "");
  const auto indicator_text = param(params, "indicator", "best_paper");
  const auto covariate_text = param(params, "covariate", "none");

  std::optional<TableKey> key;
  for (const auto& candidate : store_.ranking_keys(edition_id)) {
    const bool subject_matches = candidate.subject == subject_param ||
                                 (!subject_param.empty() && slugify(candidate.subject) == subject_param);
    if (subject_matches && to_string(candidate.indicator) == indicator_text &&
        to_string(candidate.covariate) == covariate_text) {
      key = candidate;
      break;
    }
  }
  if (!key) {
    const std::string wanted = subject_param + "/" + indicator_text + "/" + covariate_text;
    auto keys = store_.ranking_keys(edition_id);
    std::stable_sort(keys.begin(), keys.end(), [&](const TableKey& a, const TableKey& b) {
      return edit_distance(key_text(a), wanted) < edit_distance(key_text(b), wanted);
    });
    Json nearest = Json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(5, keys.size()); ++i) {
      nearest.push_back(Json{{"subject", keys[i].subject},
                             {"indicator", std::string(to_string(keys[i].indicator))},
                             {"covariate", std::string(to_string(keys[i].covariate))}});
    }
    return error_response(404, "no ranking for " + wanted, Json{{"nearest", nearest}});
  }
  ApiResponse r;
  r.body = store_.load_ranking_document(edition_id, *key);
  add_cache_headers(r, summary.checksum);
  return r;
}

ApiResponse Api::institution(const std::string& institution_id, const QueryParams& params) const {
  std::string edition_id;
  try {
    edition_id = resolve_edition(store_, params);
  } catch (const NotFoundError& e) {
    return error_response(404, e.what());
  }
  if (!store_.contains(edition_id)) return error_response(404, "unknown edition '" + edition_id + "'");
  const auto summary = store_.summary(edition_id);
  const auto indicator_text = param(params, "indicator", "best_paper");
  const auto covariate_text = param(params, "covariate", "none");

  Json rows = Json::array();
  Json name;
  Json country;
  for (const auto& key : store_.ranking_keys(edition_id)) {
    if (to_string(key.indicator) != indicator_text || to_string(key.covariate) != covariate_text) {
      continue;
    }
    const auto doc = Json::parse(store_.load_ranking_document(edition_id, key));
    for (const auto& entry : doc.at("entries")) {
      if (entry.at("institution_id").get<std::string>() != institution_id) continue;
      name = entry.at("name");
      country = entry.at("country");
      Json row;
      row["subject"] = key.subject;
      for (const char* field : {"n_papers", "probability", "goldstein", "ci95", "rank",
                                "delta_rank", "significant", "direction"}) {
        if (entry.contains(field)) row[field] = entry.at(field);
      }
      rows.push_back(std::move(row));
      break;
    }
  }
  if (rows.empty()) {
    return error_response(404, "institution '" + institution_id + "' not found in edition " + edition_id);
  }
  auto r = json_response(200, Json{{"edition", edition_id},
                                   {"institution_id", institution_id},
                                   {"name", name},
                                   {"country", country},
                                   {"indicator", indicator_text},
                                   {"covariate", covariate_text},
                                   {"subjects", std::move(rows)}});
  add_cache_headers(r, summary.checksum);
  return r;
}

ApiResponse Api::get(const std::string& path, const QueryParams& params) const {
  try {
    if (path == "/api/editions") return editions();
    if (path == "/api/rankings") return rankings(params);
    const std::string prefix = "/api/institutions/";
    if (path.rfind(prefix, 0) == 0 && path.size() > prefix.size()) {
      return institution(path.substr(prefix.size()), params);
    }
    return error_response(404, "no such endpoint: " + path);
  } catch (const NotFoundError& e) {
    return error_response(404, e.what());
  } catch (const UsageError& e) {
    return error_response(400, e.what());
  }
}

struct HttpServer::Impl {
  Api api;
  httplib::Server server;
  std::thread thread;

  explicit Impl(const EditionStore& store) : api(store) {}
};

HttpServer::HttpServer(const EditionStore& store, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(store)) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    QueryParams params;
    for (const auto& [k, v] : req.params) params.emplace(k, v);
    const auto r = impl_->api.get(req.path, params);
    res.status = r.status;
    for (const auto& [k, v] : r.headers) res.set_header(k, v);
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(r.body, r.content_type);
  };
  impl_->server.Get(R"(/api/.*)", handler);
  if (static_dir) impl_->server.set_mount_point("/", static_dir->string());
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw Error("cannot listen on " + host + ":" + std::to_string(port));
  }
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace exmap
