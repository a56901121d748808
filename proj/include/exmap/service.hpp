#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "exmap/persistence.hpp"

namespace exmap {

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
  std::map<std::string, std::string> headers;
};

using QueryParams = std::map<std::string, std::string>;

/// Read-only endpoints over an EditionStore. Handlers never compute
/// statistics: ranking documents are returned byte for byte and the
/// institution summary copies fields out of the stored documents.
class Api {
 public:
  explicit Api(const EditionStore& store) : store_(store) {}

  /// GET /api/editions
  ApiResponse editions() const;
  /// GET /api/rankings?edition&subject&indicator&covariate
  ApiResponse rankings(const QueryParams& params) const;
  /// GET /api/institutions/{id}?edition&indicator&covariate
  ApiResponse institution(const std::string& institution_id, const QueryParams& params) const;

  /// Dispatches a GET by path; unknown paths give 404.
  ApiResponse get(const std::string& path, const QueryParams& params) const;

 private:
  const EditionStore& store_;
};

/// HTTP front end. Also serves static explorer assets when a directory is
/// given.
class HttpServer {
 public:
  HttpServer(const EditionStore& store, std::optional<std::filesystem::path> static_dir = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and serves on a background thread; port 0 picks a free port.
  /// Returns the bound port.
  int start(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace exmap
