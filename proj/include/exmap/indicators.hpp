#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "exmap/types.hpp"

namespace exmap {

/// A paper is a top-decile member when its percentile is at least this value.
/// Membership is inclusive at the boundary.
inline constexpr int kTopDecilePercentile = 90;

struct PercentileAssignment {
  std::string paper_id;
  double percentile = 0.0;  // 100 (k - 1) / n
  std::size_t ascending_rank = 0;  // k in 1..n
  std::size_t population_size = 0;  // n

  /// Exact integer form of `percentile >= kTopDecilePercentile`.
  bool top_decile() const {
    return 100 * (ascending_rank - 1) >=
           static_cast<std::size_t>(kTopDecilePercentile) * population_size;
  }
};

/// Journal prestige lookup keyed by (subject, journal_id).
class JournalIndex {
 public:
  JournalIndex() = default;
  explicit JournalIndex(std::span<const JournalRecord> journals);

  /// SJR2 of the journal in the subject; falls back to any subject carrying
  /// the journal, then to 0 (lowest prestige).
  double sjr2(const std::string& subject, const std::string& journal_id) const;
  const std::map<std::string, std::vector<JournalRecord>>& by_subject() const {
    return by_subject_;
  }

 private:
  std::map<std::string, std::vector<JournalRecord>> by_subject_;
  std::map<std::pair<std::string, std::string>, double> sjr2_;
  std::map<std::string, double> sjr2_any_subject_;
};

/// Ranks one subject-year population. Order: ascending citations; equal
/// citations ranked higher when their journal has the larger SJR2; remaining
/// ties by ascending paper_id. Throws DegenerateError on an empty population.
std::vector<PercentileAssignment> assign_percentiles(std::span<const PaperRecord> population,
                                                     const JournalIndex& journals);

std::set<std::string> top_decile_members(std::span<const PercentileAssignment> assignments);

/// First-quartile journal ids per subject: the ceil(m / 4) journals with the
/// highest SJR, ties by ascending journal_id. Journals without SJR are not
/// candidates and do not count towards m.
using JournalQuartileTable = std::map<std::string, std::set<std::string>>;
JournalQuartileTable build_journal_quartiles(std::span<const JournalRecord> journals);

struct IndicatorCounts {
  std::int64_t n_trials = 0;
  std::int64_t n_success_best_paper = 0;
  std::int64_t n_success_best_journal = 0;
};

/// Counts for one institution in one subject under full counting.
/// `top_decile` holds the paper ids flagged by top_decile_members across all
/// populations of the subject. Throws NotFoundError when the institution has
/// no paper anywhere in `papers`.
IndicatorCounts aggregate_institution_counts(std::span<const PaperRecord> papers,
                                             const std::set<std::string>& top_decile,
                                             const JournalQuartileTable& quartiles,
                                             const std::string& institution_id,
                                             const std::string& subject);

/// Runs the whole indicator stage: every subject-year population is ranked,
/// journal quartiles are built, and one row per (institution, subject) is
/// returned with its collaboration share. Rows are sorted by subject then
/// institution.
std::vector<InstitutionSubjectCounts> compute_institution_counts(
    std::span<const PaperRecord> papers, std::span<const JournalRecord> journals);

}  // namespace exmap
