#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "exmap/ingest.hpp"
#include "exmap/types.hpp"

namespace exmap {

/// Small deterministic generator; draws depend only on the seed.
class Random {
 public:
  explicit Random(std::uint64_t seed) : engine_(seed) {}
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::int64_t integer(std::int64_t lo, std::int64_t hi);  // inclusive
  double normal();
  double logistic_noise();
  std::int64_t binomial(std::int64_t n, double p);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Ground truth for one binomial random-intercept model.
struct ModelTruth {
  double beta0 = -2.03;
  double beta1 = 0.53;
  double sigma2 = 0.28;
};

inline constexpr ModelTruth kBestPaperTruth{-2.03, 0.53, 0.28};
inline constexpr ModelTruth kBestJournalTruth{-0.22, 0.68, 0.41};

struct ClusterSimulation {
  std::size_t clusters = 600;
  std::int64_t n_min = 500;
  std::int64_t n_max = 3000;
  ModelTruth truth = kBestPaperTruth;
  bool with_covariate = true;
  std::uint64_t seed = 1;
};

struct SimulatedClusters {
  std::vector<ClusterObservation> observations;
  std::vector<double> covariate;  // standard normal draws
  std::vector<double> random_effects;
};

/// Clusters with n_i uniform on [n_min, n_max], x_i ~ N(0, 1),
/// u_i ~ N(0, sigma2) and y_i ~ Binomial(n_i, logistic(b0 + b1 x_i + u_i)).
SimulatedClusters simulate_clusters(const ClusterSimulation& params);

struct FixtureParams {
  std::uint64_t seed = 2014;
  std::vector<std::string> subjects = {"Chemistry", "Computer Science", "Physics and Astronomy"};
  std::size_t institutions_per_subject = 60;
  /// Extra institutions per subject that stay below the paper threshold.
  std::size_t small_institutions_per_subject = 4;
  std::int64_t papers_min = 500;
  std::int64_t papers_max = 900;
  std::int64_t aggregated_min = 500;
  std::int64_t aggregated_max = 3000;
  std::size_t journals_per_subject = 40;
  YearWindow window{2006, 2010};
  ModelTruth best_paper = kBestPaperTruth;
  ModelTruth best_journal = kBestJournalTruth;
  double coauthor_probability = 0.08;
};

struct Fixture {
  std::vector<PaperRecord> papers;
  std::vector<JournalRecord> journals;
  std::vector<InstitutionRecord> institutions;
  std::vector<CountryCovariates> countries;
  /// Drawn directly from the model with the standardized GDP as covariate.
  std::vector<InstitutionSubjectCounts> aggregated;
};

Fixture simulate_fixture(const FixtureParams& params);

/// Writes papers.csv, journals.csv, institutions.csv, countries.csv and
/// aggregated.csv into `directory`.
void write_fixture(const Fixture& fixture, const std::filesystem::path& directory);

}  // namespace exmap
