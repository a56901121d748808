#include "exmap/types.hpp"

#include "exmap/error.hpp"

namespace exmap {

std::string_view to_string(Indicator indicator) {
  switch (indicator) {
    case Indicator::best_paper: return "best_paper";
    case Indicator::best_journal: return "best_journal";
  }
  return "unknown";
}

std::string_view to_string(Covariate covariate) {
  switch (covariate) {
    case Covariate::none: return "none";
    case Covariate::collaboration: return "collaboration";
    case Covariate::corruption: return "corruption";
    case Covariate::residents: return "residents";
    case Covariate::gdp: return "gdp";
  }
  return "unknown";
}

std::string_view model_label(Covariate covariate) {
  switch (covariate) {
    case Covariate::none: return "M0";
    case Covariate::collaboration: return "M1";
    case Covariate::corruption: return "M2";
    case Covariate::residents: return "M3";
    case Covariate::gdp: return "M4";
  }
  return "M?";
}

Indicator parse_indicator(std::string_view text) {
  if (text == "best_paper") return Indicator::best_paper;
  if (text == "best_journal") return Indicator::best_journal;
  throw UsageError("unknown indicator '" + std::string(text) +
                   "' (expected best_paper or best_journal)");
}

Covariate parse_covariate(std::string_view text) {
  if (text == "none" || text.empty()) return Covariate::none;
  if (text == "collaboration") return Covariate::collaboration;
  if (text == "corruption") return Covariate::corruption;
  if (text == "residents") return Covariate::residents;
  if (text == "gdp") return Covariate::gdp;
  throw UsageError("unknown covariate '" + std::string(text) +
                   "' (expected none, collaboration, corruption, residents or gdp)");
}

std::size_t covariate_slot(Covariate covariate) {
  switch (covariate) {
    case Covariate::collaboration: return 0;
    case Covariate::corruption: return 1;
    case Covariate::residents: return 2;
    case Covariate::gdp: return 3;
    case Covariate::none: break;
  }
  throw UsageError("the unadjusted model has no covariate column");
}

}  // namespace exmap
