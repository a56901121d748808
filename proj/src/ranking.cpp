#include "exmap/ranking.hpp"

#include <algorithm>
#include <unordered_map>

#include "exmap/error.hpp"

namespace exmap {

RankingTable build_ranking(const FitResult& fit, std::span<const EBEstimate> eb,
                           std::span<const ClusterObservation> observations,
                           const std::map<std::string, InstitutionMeta>& metadata,
                           const std::string& subject, Indicator indicator, Covariate covariate) {
  std::unordered_map<std::string, const EBEstimate*> by_id;
  for (const auto& e : eb) by_id[e.institution_id] = &e;

  RankingTable table;
  table.subject_area = subject;
  table.indicator = indicator;
  table.covariate = covariate;
  table.beta0 = fit.beta(0);
  table.sigma2 = fit.sigma2;
  table.reference_probability = logistic(table.beta0);

  for (const auto& obs : observations) {
    auto it = by_id.find(obs.institution_id);
    if (it == by_id.end()) {
      throw NotFoundError("no EB estimate for institution " + obs.institution_id);
    }
    const auto& estimate = *it->second;
    RankingEntry entry;
    entry.institution_id = obs.institution_id;
    if (auto m = metadata.find(obs.institution_id); m != metadata.end()) {
      entry.name = m->second.name;
      entry.country = m->second.country;
      entry.latitude = m->second.latitude;
      entry.longitude = m->second.longitude;
    } else {
      entry.name = obs.institution_id;
    }
    entry.n_papers = obs.n_trials;
    entry.n_success = obs.n_success;
    entry.u_mode = estimate.u_mode;
    entry.u_se = estimate.u_se;
    const double center = table.beta0 + estimate.u_mode;
    entry.probability = logistic(center);
    entry.interval_goldstein =
        confidence_interval(center, estimate.u_se, kGoldsteinMultiplier, Scale::probability);
    entry.interval_95 =
        confidence_interval(center, estimate.u_se, kNormal95Multiplier, Scale::probability);
    entry.goldstein_logit =
        confidence_interval(center, estimate.u_se, kGoldsteinMultiplier, Scale::logit);
    if (entry.interval_goldstein.lower > table.reference_probability) {
      entry.direction = 1;
    } else if (entry.interval_goldstein.upper < table.reference_probability) {
      entry.direction = -1;
    }
    entry.significant_vs_mean = entry.direction != 0;
    table.entries.push_back(std::move(entry));
  }
  assign_ranks(table);
  return table;
}

void assign_ranks(RankingTable& table) {
  std::sort(table.entries.begin(), table.entries.end(),
            [](const RankingEntry& a, const RankingEntry& b) {
              if (a.probability != b.probability) return a.probability > b.probability;
              return a.institution_id < b.institution_id;
            });
  for (std::size_t i = 0; i < table.entries.size(); ++i) {
    table.entries[i].rank = static_cast<int>(i + 1);
  }
}

RankingTable restrict_to(const RankingTable& table, const std::set<std::string>& institution_ids) {
  RankingTable out = table;
  out.entries.clear();
  for (const auto& e : table.entries) {
    if (institution_ids.contains(e.institution_id)) {
      out.entries.push_back(e);
      out.entries.back().delta_rank.reset();
    }
  }
  assign_ranks(out);
  return out;
}

RankingTable delta_rank(const RankingTable& adjusted, const RankingTable& unadjusted) {
  std::map<std::string, int> base;
  for (const auto& e : unadjusted.entries) base[e.institution_id] = e.rank;
  std::set<std::string> adjusted_ids;
  for (const auto& e : adjusted.entries) adjusted_ids.insert(e.institution_id);

  std::vector<std::string> only_adjusted;
  std::vector<std::string> only_unadjusted;
  for (const auto& id : adjusted_ids) {
    if (!base.contains(id)) only_adjusted.push_back(id);
  }
  for (const auto& [id, rank] : base) {
    if (!adjusted_ids.contains(id)) only_unadjusted.push_back(id);
  }
  if (!only_adjusted.empty() || !only_unadjusted.empty()) {
    auto join = [](const std::vector<std::string>& ids) {
      std::string s;
      for (const auto& id : ids) s += (s.empty() ? "" : ", ") + id;
      return s.empty() ? std::string("-") : s;
    };
    throw ValidationError("institution sets differ; only in adjusted: " + join(only_adjusted) +
                          "; only in unadjusted: " + join(only_unadjusted));
  }
  RankingTable out = adjusted;
  for (auto& e : out.entries) e.delta_rank = base.at(e.institution_id) - e.rank;
  return out;
}

PairwiseVerdict pairwise_compare(const RankingEntry& a, const RankingEntry& b) {
  if (a.goldstein_logit.lower > b.goldstein_logit.upper) return PairwiseVerdict::a_higher;
  if (b.goldstein_logit.lower > a.goldstein_logit.upper) return PairwiseVerdict::b_higher;
  return PairwiseVerdict::indistinguishable;
}

RankingTable significance_filter(const RankingTable& table) {
  RankingTable out = table;
  out.entries.clear();
  std::copy_if(table.entries.begin(), table.entries.end(), std::back_inserter(out.entries),
               [](const RankingEntry& e) { return e.significant_vs_mean; });
  return out;
}

std::vector<CurvePoint> predict_curve(const FitResult& overall_fit,
                                      const Standardization& standardization,
                                      std::span<const double> raw_grid,
                                      const std::string& subject) {
  const auto& levels = overall_fit.subject_levels;
  if (std::find(levels.begin(), levels.end(), subject) == levels.end()) {
    throw NotFoundError("subject '" + subject + "' is not part of the pooled model");
  }
  const double intercept = overall_fit.beta(0);
  const double slope = overall_fit.beta(overall_fit.column("covariate"));
  double main_effect = 0.0;
  double interaction = 0.0;
  if (subject != levels.front()) {
    main_effect = overall_fit.beta(overall_fit.column("subject[" + subject + "]"));
    interaction = overall_fit.beta(overall_fit.column("subject[" + subject + "]:covariate"));
  }
  std::vector<CurvePoint> out;
  out.reserve(raw_grid.size());
  for (double raw : raw_grid) {
    const double z = standardization.apply(raw);
    out.push_back({raw, subject, logistic(intercept + main_effect + (slope + interaction) * z)});
  }
  return out;
}

}  // namespace exmap
