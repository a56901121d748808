#include "exmap/simulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>

#include "exmap/csv.hpp"
#include "exmap/error.hpp"
#include "exmap/glmm.hpp"

namespace exmap {

double Random::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::int64_t Random::integer(std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(engine_() % span);
}

double Random::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  spare_ = radius * std::sin(2.0 * std::numbers::pi * u2);
  has_spare_ = true;
  return radius * std::cos(2.0 * std::numbers::pi * u2);
}

double Random::logistic_noise() {
  double u = uniform();
  while (u <= 0.0) u = uniform();
  return std::log(u / (1.0 - u));
}

std::int64_t Random::binomial(std::int64_t n, double p) {
  std::int64_t y = 0;
  for (std::int64_t i = 0; i < n; ++i) y += uniform() < p ? 1 : 0;
  return y;
}

SimulatedClusters simulate_clusters(const ClusterSimulation& params) {
  Random rng(params.seed);
  SimulatedClusters out;
  const double sd = std::sqrt(params.truth.sigma2);
  for (std::size_t i = 0; i < params.clusters; ++i) {
    ClusterObservation obs;
    char id[16];
    std::snprintf(id, sizeof id, "C%04zu", i + 1);
    obs.institution_id = id;
    obs.subject_area = "Simulated";
    obs.n_trials = rng.integer(params.n_min, params.n_max);
    const double x = params.with_covariate ? rng.normal() : 0.0;
    const double u = sd * rng.normal();
    const double p = logistic(params.truth.beta0 + params.truth.beta1 * x + u);
    obs.n_success = rng.binomial(obs.n_trials, p);
    if (params.with_covariate) obs.covariates[covariate_slot(Covariate::gdp)] = x;
    out.covariate.push_back(x);
    out.random_effects.push_back(u);
    out.observations.push_back(std::move(obs));
  }
  return out;
}

namespace {

constexpr std::array<const char*, 20> kCountryCodes = {
    "US", "DE", "GB", "FR", "JP", "CN", "IT", "ES", "CA", "AU",
    "NL", "KR", "BR", "IN", "CH", "SE", "RU", "PL", "MX", "VE"};

struct Unit {
  std::size_t institution = 0;
  bool small = false;
  double u_best_paper = 0.0;
  double u_best_journal = 0.0;
};

}  // namespace

Fixture simulate_fixture(const FixtureParams& params) {
  if (params.subjects.empty()) throw UsageError("fixture needs at least one subject");
  Random rng(params.seed);
  Fixture fx;

  const double log_gdp_lo = std::log(2000.0);
  const double log_gdp_hi = std::log(90000.0);
  for (const char* code : kCountryCodes) {
    CountryCovariates c;
    c.country_code = code;
    const double share = rng.uniform();
    c.gdp_per_capita = std::round(std::exp(log_gdp_lo + share * (log_gdp_hi - log_gdp_lo)));
    c.corruption_index =
        std::clamp(std::round(20.0 + 65.0 * share + 8.0 * rng.normal()), 0.0, 100.0);
    c.residents = std::round(std::exp(rng.uniform(std::log(1.0), std::log(1350.0))) * 10.0) / 10.0;
    fx.countries.push_back(c);
  }
  std::map<std::string, double> gdp;
  for (const auto& c : fx.countries) gdp[c.country_code] = c.gdp_per_capita;

  const std::size_t per_subject =
      params.institutions_per_subject + params.small_institutions_per_subject;
  const std::size_t pool = per_subject + 20;
  std::vector<double> collaboration_propensity;
  for (std::size_t i = 0; i < pool; ++i) {
    InstitutionRecord inst;
    char id[32];
    std::snprintf(id, sizeof id, "I%04zu", i + 1);
    inst.institution_id = id;
    inst.country_code = kCountryCodes[rng.integer(0, kCountryCodes.size() - 1)];
    inst.name = "Institute " + std::to_string(i + 1) + " (" + inst.country_code + ")";
    inst.latitude = std::round(rng.uniform(-60.0, 70.0) * 1e4) / 1e4;
    inst.longitude = std::round(rng.uniform(-180.0, 180.0) * 1e4) / 1e4;
    fx.institutions.push_back(inst);
    collaboration_propensity.push_back(rng.uniform(0.05, 0.7));
  }

  // Standardized GDP over institutions; the fixture truth uses this scale.
  std::vector<double> inst_gdp;
  for (const auto& inst : fx.institutions) inst_gdp.push_back(gdp[inst.country_code]);
  const auto z_gdp = z_transform(inst_gdp).values;

  std::int64_t next_paper = 1;
  for (std::size_t s = 0; s < params.subjects.size(); ++s) {
    const auto& subject = params.subjects[s];

    std::vector<JournalRecord> journals;
    for (std::size_t j = 0; j < params.journals_per_subject; ++j) {
      JournalRecord jr;
      char id[24];
      std::snprintf(id, sizeof id, "J%02zu-%03zu", s + 1, j + 1);
      jr.journal_id = id;
      jr.subject_area = subject;
      const double sjr = std::exp(0.8 * rng.normal());
      jr.sjr = (std::round(sjr * 1000.0) + 1.0) / 1000.0;
      jr.sjr2 = (std::round(*jr.sjr * std::exp(0.2 * rng.normal()) * 1000.0) + 1.0) / 1000.0;
      journals.push_back(jr);
    }
    std::vector<std::size_t> by_prestige(journals.size());
    std::iota(by_prestige.begin(), by_prestige.end(), std::size_t{0});
    std::sort(by_prestige.begin(), by_prestige.end(), [&](std::size_t a, std::size_t b) {
      if (*journals[a].sjr != *journals[b].sjr) return *journals[a].sjr > *journals[b].sjr;
      return journals[a].journal_id < journals[b].journal_id;
    });
    const std::size_t top_count = (journals.size() + 3) / 4;

    std::vector<std::size_t> order(pool);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = pool - 1; i > 0; --i) {
      std::swap(order[i], order[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(i)))]);
    }
    std::vector<Unit> units;
    for (std::size_t k = 0; k < per_subject; ++k) {
      Unit unit;
      unit.institution = order[k];
      unit.small = k >= params.institutions_per_subject;
      unit.u_best_paper = std::sqrt(params.best_paper.sigma2) * rng.normal();
      unit.u_best_journal = std::sqrt(params.best_journal.sigma2) * rng.normal();
      units.push_back(unit);
    }
    std::sort(units.begin(), units.end(),
              [](const Unit& a, const Unit& b) { return a.institution < b.institution; });

    for (const auto& unit : units) {
      const auto& inst = fx.institutions[unit.institution];
      const double x = z_gdp[unit.institution];
      const double quality_bp = params.best_paper.beta0 + params.best_paper.beta1 * x + unit.u_best_paper;
      const double p_bj = logistic(params.best_journal.beta0 + params.best_journal.beta1 * x +
                                   unit.u_best_journal);
      const std::int64_t n = unit.small ? rng.integer(150, 300)
                                        : rng.integer(params.papers_min, params.papers_max);
      for (std::int64_t k = 0; k < n; ++k) {
        PaperRecord paper;
        char id[24];
        std::snprintf(id, sizeof id, "P%08lld", static_cast<long long>(next_paper++));
        paper.paper_id = id;
        paper.subject_area = subject;
        paper.pub_year = static_cast<int>(rng.integer(params.window.first, params.window.last));
        const double latent = quality_bp + rng.logistic_noise();
        paper.citations = static_cast<std::int64_t>(std::floor(12.0 * std::exp(0.6 * latent + 0.3 * rng.normal())));
        const bool top = rng.bernoulli(p_bj);
        const auto pick = top ? rng.integer(0, static_cast<std::int64_t>(top_count) - 1)
                              : rng.integer(static_cast<std::int64_t>(top_count),
                                            static_cast<std::int64_t>(journals.size()) - 1);
        paper.journal_id = journals[by_prestige[static_cast<std::size_t>(pick)]].journal_id;
        paper.institution_ids = {inst.institution_id};
        paper.country_codes = {inst.country_code};
        if (rng.bernoulli(params.coauthor_probability)) {
          const auto& other =
              fx.institutions[units[static_cast<std::size_t>(rng.integer(0, units.size() - 1))].institution];
          if (other.institution_id != inst.institution_id) {
            paper.institution_ids.push_back(other.institution_id);
            paper.country_codes.push_back(other.country_code);
          }
        }
        if (rng.bernoulli(collaboration_propensity[unit.institution])) {
          paper.country_codes.push_back(kCountryCodes[rng.integer(0, kCountryCodes.size() - 1)]);
        }
        std::sort(paper.institution_ids.begin(), paper.institution_ids.end());
        std::sort(paper.country_codes.begin(), paper.country_codes.end());
        paper.country_codes.erase(std::unique(paper.country_codes.begin(), paper.country_codes.end()),
                                  paper.country_codes.end());
        fx.papers.push_back(std::move(paper));
      }

      if (!unit.small) {
        InstitutionSubjectCounts row;
        row.institution_id = inst.institution_id;
        row.subject_area = subject;
        row.n_trials = rng.integer(params.aggregated_min, params.aggregated_max);
        row.n_success_best_paper = rng.binomial(row.n_trials, logistic(quality_bp));
        row.n_success_best_journal = rng.binomial(row.n_trials, p_bj);
        row.collaboration = std::round(collaboration_propensity[unit.institution] * 1e4) / 1e4;
        fx.aggregated.push_back(row);
      }
    }
    fx.journals.insert(fx.journals.end(), journals.begin(), journals.end());
  }
  return fx;
}

void write_fixture(const Fixture& fx, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  auto open = [&](const char* name) {
    std::ofstream out(directory / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + (directory / name).string());
    return out;
  };
  auto join = [](const std::vector<std::string>& items) {
    std::string s;
    for (const auto& item : items) s += (s.empty() ? "" : ";") + item;
    return s;
  };
  auto opt = [](const std::optional<double>& v) { return v ? csv::format_real(*v) : std::string(); };

  {
    auto out = open("papers.csv");
    out << "paper_id,subject,year,citations,journal_id,institutions,countries\n";
    for (const auto& p : fx.papers) {
      const std::vector<std::string> row = {p.paper_id, p.subject_area, std::to_string(p.pub_year),
                                            std::to_string(p.citations), p.journal_id,
                                            join(p.institution_ids), join(p.country_codes)};
      csv::write_row(out, row);
    }
  }
  {
    auto out = open("journals.csv");
    out << "journal_id,subject,sjr,sjr2\n";
    for (const auto& j : fx.journals) {
      const std::vector<std::string> row = {j.journal_id, j.subject_area, opt(j.sjr), opt(j.sjr2)};
      csv::write_row(out, row);
    }
  }
  {
    auto out = open("institutions.csv");
    out << "institution_id,name,country,lat,lon\n";
    for (const auto& i : fx.institutions) {
      const std::vector<std::string> row = {i.institution_id, i.name, i.country_code,
                                            csv::format_real(i.latitude), csv::format_real(i.longitude)};
      csv::write_row(out, row);
    }
  }
  {
    auto out = open("countries.csv");
    out << "country,corruption,residents_millions,gdp_per_capita\n";
    for (const auto& c : fx.countries) {
      const std::vector<std::string> row = {c.country_code, csv::format_real(c.corruption_index),
                                            csv::format_real(c.residents),
                                            csv::format_real(c.gdp_per_capita)};
      csv::write_row(out, row);
    }
  }
  {
    auto out = open("aggregated.csv");
    write_aggregated(out, fx.aggregated);
  }
}

}  // namespace exmap
