#pragma once

#include <chrono>
#include <filesystem>
#include <random>
#include <string>

#include "exmap/pipeline.hpp"
#include "exmap/simulate.hpp"

namespace testing_support {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("exmap-" + tag + "-" + std::to_string(rd()) + "-" +
             std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ignored;
    std::filesystem::remove_all(path_, ignored);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline exmap::FixtureParams small_fixture(std::uint64_t seed = 2014) {
  exmap::FixtureParams p;
  p.seed = seed;
  p.subjects = {"Chemistry", "Physics and Astronomy"};
  p.institutions_per_subject = 52;
  p.small_institutions_per_subject = 2;
  p.journals_per_subject = 12;
  return p;
}

/// Writes a fixture into `dir` and returns a config that reads its
/// paper-level inputs and stores into `dir/store`.
inline exmap::PipelineConfig fixture_config(const std::filesystem::path& dir, const std::string& edition,
                                            const exmap::FixtureParams& params = small_fixture()) {
  exmap::write_fixture(exmap::simulate_fixture(params), dir);
  exmap::PipelineConfig c;
  c.edition_id = edition;
  c.window_first = params.window.first;
  c.window_last = params.window.last;
  c.citation_cutoff = "2014-01-01";
  c.created_at = "2014-06-01T00:00:00Z";
  c.papers = dir / "papers.csv";
  c.journals = dir / "journals.csv";
  c.institutions = dir / "institutions.csv";
  c.countries = dir / "countries.csv";
  c.store = dir / "store";
  return c;
}

}  // namespace testing_support
