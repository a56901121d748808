#include "exmap/indicators.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

#include "exmap/error.hpp"

namespace exmap {

JournalIndex::JournalIndex(std::span<const JournalRecord> journals) {
  for (const auto& j : journals) {
    by_subject_[j.subject_area].push_back(j);
    if (j.sjr2) {
      sjr2_[{j.subject_area, j.journal_id}] = *j.sjr2;
      auto& any = sjr2_any_subject_[j.journal_id];
      any = std::max(any, *j.sjr2);
    }
  }
}

double JournalIndex::sjr2(const std::string& subject, const std::string& journal_id) const {
  if (auto it = sjr2_.find({subject, journal_id}); it != sjr2_.end()) return it->second;
  if (auto it = sjr2_any_subject_.find(journal_id); it != sjr2_any_subject_.end()) {
    return it->second;
  }
  return 0.0;
}

namespace {

// Indices of `population` from least to most cited.
std::vector<std::size_t> ascending_order(std::span<const PaperRecord> population,
                                         const JournalIndex& journals) {
  std::vector<double> prestige(population.size());
  for (std::size_t i = 0; i < population.size(); ++i) {
    prestige[i] = journals.sjr2(population[i].subject_area, population[i].journal_id);
  }
  std::vector<std::size_t> order(population.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = population[a];
    const auto& pb = population[b];
    if (pa.citations != pb.citations) return pa.citations < pb.citations;
    if (prestige[a] != prestige[b]) return prestige[a] < prestige[b];
    return pa.paper_id < pb.paper_id;
  });
  return order;
}

}  // namespace

std::vector<PercentileAssignment> assign_percentiles(std::span<const PaperRecord> population,
                                                     const JournalIndex& journals) {
  if (population.empty()) throw DegenerateError("empty citation population");
  const auto order = ascending_order(population, journals);
  const std::size_t n = population.size();
  std::vector<PercentileAssignment> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto& a = out[order[k]];
    a.paper_id = population[order[k]].paper_id;
    a.ascending_rank = k + 1;
    a.population_size = n;
    a.percentile = 100.0 * static_cast<double>(k) / static_cast<double>(n);
  }
  return out;
}

std::set<std::string> top_decile_members(std::span<const PercentileAssignment> assignments) {
  std::set<std::string> out;
  for (const auto& a : assignments) {
    if (a.top_decile()) out.insert(a.paper_id);
  }
  return out;
}

JournalQuartileTable build_journal_quartiles(std::span<const JournalRecord> journals) {
  std::map<std::string, std::vector<const JournalRecord*>> candidates;
  for (const auto& j : journals) {
    if (j.sjr) candidates[j.subject_area].push_back(&j);
  }
  JournalQuartileTable table;
  for (auto& [subject, list] : candidates) {
    std::sort(list.begin(), list.end(), [](const JournalRecord* a, const JournalRecord* b) {
      if (*a->sjr != *b->sjr) return *a->sjr > *b->sjr;
      return a->journal_id < b->journal_id;
    });
    const std::size_t size = (list.size() + 3) / 4;
    auto& quartile = table[subject];
    for (std::size_t i = 0; i < size; ++i) quartile.insert(list[i]->journal_id);
  }
  return table;
}

namespace {

bool in_first_quartile(const JournalQuartileTable& quartiles, const std::string& subject,
                       const std::string& journal_id) {
  auto it = quartiles.find(subject);
  return it != quartiles.end() && it->second.contains(journal_id);
}

}  // namespace

IndicatorCounts aggregate_institution_counts(std::span<const PaperRecord> papers,
                                             const std::set<std::string>& top_decile,
                                             const JournalQuartileTable& quartiles,
                                             const std::string& institution_id,
                                             const std::string& subject) {
  IndicatorCounts counts;
  bool known = false;
  for (const auto& paper : papers) {
    if (std::find(paper.institution_ids.begin(), paper.institution_ids.end(), institution_id) ==
        paper.institution_ids.end()) {
      continue;
    }
    known = true;
    if (paper.subject_area != subject) continue;
    ++counts.n_trials;
    if (top_decile.contains(paper.paper_id)) ++counts.n_success_best_paper;
    if (in_first_quartile(quartiles, subject, paper.journal_id)) ++counts.n_success_best_journal;
  }
  if (!known) throw NotFoundError("unknown institution '" + institution_id + "'");
  return counts;
}

std::vector<InstitutionSubjectCounts> compute_institution_counts(
    std::span<const PaperRecord> papers, std::span<const JournalRecord> journals) {
  const JournalIndex index(journals);
  const auto quartiles = build_journal_quartiles(journals);

  std::map<std::pair<std::string, int>, std::vector<std::size_t>> populations;
  for (std::size_t i = 0; i < papers.size(); ++i) {
    populations[{papers[i].subject_area, papers[i].pub_year}].push_back(i);
  }
  std::vector<bool> top(papers.size(), false);
  for (const auto& [key, members] : populations) {
    std::vector<PaperRecord> population;
    population.reserve(members.size());
    for (auto i : members) population.push_back(papers[i]);
    const auto assignments = assign_percentiles(population, index);
    for (std::size_t j = 0; j < members.size(); ++j) top[members[j]] = assignments[j].top_decile();
  }

  struct Tally {
    IndicatorCounts counts;
    std::int64_t international = 0;
  };
  std::map<std::pair<std::string, std::string>, Tally> tallies;
  for (std::size_t i = 0; i < papers.size(); ++i) {
    const auto& paper = papers[i];
    const bool best_journal = in_first_quartile(quartiles, paper.subject_area, paper.journal_id);
    for (const auto& inst : paper.institution_ids) {
      auto& t = tallies[{paper.subject_area, inst}];
      ++t.counts.n_trials;
      if (top[i]) ++t.counts.n_success_best_paper;
      if (best_journal) ++t.counts.n_success_best_journal;
      if (paper.country_codes.size() > 1) ++t.international;
    }
  }

  std::vector<InstitutionSubjectCounts> out;
  out.reserve(tallies.size());
  for (const auto& [key, t] : tallies) {
    InstitutionSubjectCounts row;
    row.subject_area = key.first;
    row.institution_id = key.second;
    row.n_trials = t.counts.n_trials;
    row.n_success_best_paper = t.counts.n_success_best_paper;
    row.n_success_best_journal = t.counts.n_success_best_journal;
    row.collaboration =
        static_cast<double>(t.international) / static_cast<double>(t.counts.n_trials);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace exmap
