#include "exmap/serialize.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <sstream>

#include "exmap/csv.hpp"
#include "exmap/error.hpp"

namespace exmap {

namespace {

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json interval_json(const IntervalEstimate& ci) {
  return Json{{"estimate", ci.center}, {"lower", ci.lower}, {"upper", ci.upper}};
}

Json joint_json(const JointTest& t) {
  return Json{{"F", t.f}, {"df1", t.df_numerator}, {"df2", t.df_denominator}, {"p", t.p_value}};
}

std::string fixed(double value, int digits) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << value;
  return out.str();
}

}  // namespace

Json to_json(const FitResult& fit) {
  Json doc;
  doc["columns"] = fit.column_names;
  doc["subject_levels"] = fit.subject_levels;
  doc["beta"] = std::vector<double>(fit.beta.data(), fit.beta.data() + fit.beta.size());
  doc["sigma2"] = fit.sigma2;
  doc["covariance"] = matrix_json(fit.covariance);
  doc["log_likelihood"] = fit.log_likelihood;
  doc["converged"] = fit.converged;
  doc["boundary"] = fit.boundary;
  doc["n_clusters"] = fit.n_clusters;
  doc["n_papers"] = fit.n_papers;
  doc["iterations"] = fit.iterations;
  doc["gradient_norm"] = fit.gradient_norm;
  doc["quadrature_nodes"] = fit.quadrature_nodes;
  return doc;
}

FitResult fit_from_json(const Json& doc) {
  FitResult fit;
  fit.column_names = doc.at("columns").get<std::vector<std::string>>();
  fit.subject_levels = doc.at("subject_levels").get<std::vector<std::string>>();
  const auto beta = doc.at("beta").get<std::vector<double>>();
  fit.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
  fit.sigma2 = doc.at("sigma2").get<double>();
  const auto& cov = doc.at("covariance");
  fit.covariance.resize(static_cast<Eigen::Index>(cov.size()), static_cast<Eigen::Index>(cov.size()));
  for (std::size_t i = 0; i < cov.size(); ++i) {
    for (std::size_t j = 0; j < cov[i].size(); ++j) fit.covariance(i, j) = cov[i][j].get<double>();
  }
  fit.log_likelihood = doc.at("log_likelihood").get<double>();
  fit.converged = doc.at("converged").get<bool>();
  fit.boundary = doc.at("boundary").get<bool>();
  fit.n_clusters = doc.at("n_clusters").get<std::size_t>();
  fit.n_papers = doc.at("n_papers").get<std::int64_t>();
  fit.iterations = doc.at("iterations").get<int>();
  fit.gradient_norm = doc.at("gradient_norm").get<double>();
  fit.quadrature_nodes = doc.at("quadrature_nodes").get<int>();
  return fit;
}

Json to_json(const RankingTable& table, const std::string& edition_id) {
  Json doc;
  doc["edition"] = edition_id;
  doc["subject"] = table.subject_area;
  doc["indicator"] = std::string(to_string(table.indicator));
  doc["covariate"] = std::string(to_string(table.covariate));
  doc["beta0"] = table.beta0;
  doc["sigma2"] = table.sigma2;
  doc["reference_probability"] = table.reference_probability;
  Json entries = Json::array();
  for (const auto& e : table.entries) {
    Json row;
    row["institution_id"] = e.institution_id;
    row["name"] = e.name;
    row["country"] = e.country;
    row["lat"] = e.latitude;
    row["lon"] = e.longitude;
    row["n_papers"] = e.n_papers;
    row["n_success"] = e.n_success;
    row["u_mode"] = e.u_mode;
    row["u_se"] = e.u_se;
    row["probability"] = e.probability;
    row["goldstein"] = Json{{"multiplier", e.interval_goldstein.multiplier},
                            {"lower", e.interval_goldstein.lower},
                            {"upper", e.interval_goldstein.upper},
                            {"logit_lower", e.goldstein_logit.lower},
                            {"logit_upper", e.goldstein_logit.upper}};
    row["ci95"] = Json{{"multiplier", e.interval_95.multiplier},
                       {"lower", e.interval_95.lower},
                       {"upper", e.interval_95.upper}};
    row["rank"] = e.rank;
    if (e.delta_rank) row["delta_rank"] = *e.delta_rank;
    row["significant"] = e.significant_vs_mean;
    row["direction"] = e.direction;
    entries.push_back(std::move(row));
  }
  doc["entries"] = std::move(entries);
  return doc;
}

RankingTable ranking_from_json(const Json& doc) {
  RankingTable table;
  table.subject_area = doc.at("subject").get<std::string>();
  table.indicator = parse_indicator(doc.at("indicator").get<std::string>());
  table.covariate = parse_covariate(doc.at("covariate").get<std::string>());
  table.beta0 = doc.at("beta0").get<double>();
  table.sigma2 = doc.at("sigma2").get<double>();
  table.reference_probability = doc.at("reference_probability").get<double>();
  for (const auto& row : doc.at("entries")) {
    RankingEntry e;
    e.institution_id = row.at("institution_id").get<std::string>();
    e.name = row.at("name").get<std::string>();
    e.country = row.at("country").get<std::string>();
    e.latitude = row.at("lat").get<double>();
    e.longitude = row.at("lon").get<double>();
    e.n_papers = row.at("n_papers").get<std::int64_t>();
    e.n_success = row.at("n_success").get<std::int64_t>();
    e.u_mode = row.at("u_mode").get<double>();
    e.u_se = row.at("u_se").get<double>();
    e.probability = row.at("probability").get<double>();
    const auto& g = row.at("goldstein");
    e.interval_goldstein = {e.probability, g.at("lower").get<double>(), g.at("upper").get<double>(),
                            g.at("multiplier").get<double>(), Scale::probability};
    e.goldstein_logit = {table.beta0 + e.u_mode, g.at("logit_lower").get<double>(),
                         g.at("logit_upper").get<double>(), g.at("multiplier").get<double>(),
                         Scale::logit};
    const auto& c = row.at("ci95");
    e.interval_95 = {e.probability, c.at("lower").get<double>(), c.at("upper").get<double>(),
                     c.at("multiplier").get<double>(), Scale::probability};
    e.rank = row.at("rank").get<int>();
    if (row.contains("delta_rank")) e.delta_rank = row.at("delta_rank").get<int>();
    e.significant_vs_mean = row.at("significant").get<bool>();
    e.direction = row.at("direction").get<int>();
    table.entries.push_back(std::move(e));
  }
  return table;
}

Json to_json(const SubjectDataset& dataset) {
  Json doc;
  doc["subject"] = dataset.subject_area;
  doc["indicator"] = std::string(to_string(dataset.indicator));
  Json standardization = Json::object();
  for (auto c : kAllCovariates) {
    const auto& s = dataset.covariate_standardization[covariate_slot(c)];
    if (s) standardization[std::string(to_string(c))] = Json{{"mean", s->mean}, {"sd", s->sd}};
  }
  doc["standardization"] = std::move(standardization);
  Json rows = Json::array();
  for (const auto& obs : dataset.observations) {
    Json covariates = Json::object();
    for (auto c : kAllCovariates) {
      const auto& v = obs.covariates[covariate_slot(c)];
      covariates[std::string(to_string(c))] = v ? Json(*v) : Json(nullptr);
    }
    rows.push_back(Json{{"institution_id", obs.institution_id},
                        {"n_trials", obs.n_trials},
                        {"n_success", obs.n_success},
                        {"covariates", std::move(covariates)}});
  }
  doc["observations"] = std::move(rows);
  return doc;
}

Json to_json(const Edition& edition) {
  Json doc;
  doc["edition_id"] = edition.edition_id;
  doc["window"] = {edition.window_first, edition.window_last};
  doc["citation_cutoff"] = edition.citation_cutoff;
  doc["created_at"] = edition.created_at;
  doc["subjects"] = edition.subjects;
  Json indicators = Json::array();
  for (auto i : edition.indicators) indicators.push_back(std::string(to_string(i)));
  doc["indicators"] = std::move(indicators);
  Json covariates = Json::array();
  for (auto c : edition.covariates) covariates.push_back(std::string(to_string(c)));
  doc["covariates"] = std::move(covariates);
  return doc;
}

Edition edition_from_json(const Json& doc) {
  Edition e;
  e.edition_id = doc.at("edition_id").get<std::string>();
  e.window_first = doc.at("window").at(0).get<int>();
  e.window_last = doc.at("window").at(1).get<int>();
  e.citation_cutoff = doc.at("citation_cutoff").get<std::string>();
  e.created_at = doc.at("created_at").get<std::string>();
  e.subjects = doc.at("subjects").get<std::vector<std::string>>();
  for (const auto& i : doc.at("indicators")) e.indicators.push_back(parse_indicator(i.get<std::string>()));
  for (const auto& c : doc.at("covariates")) e.covariates.push_back(parse_covariate(c.get<std::string>()));
  return e;
}

Json to_json(const ModelSummary& s) {
  Json doc;
  doc["model"] = s.label;
  doc["covariate"] = std::string(to_string(s.covariate));
  doc["n_clusters"] = s.n_clusters;
  doc["n_papers"] = s.n_papers;
  Json fixed_effects;
  fixed_effects["intercept"] = interval_json(s.intercept);
  if (s.slope) {
    auto slope = interval_json(*s.slope);
    if (s.slope_t) slope["t"] = *s.slope_t;
    fixed_effects["covariate"] = std::move(slope);
  }
  doc["fixed_effects"] = std::move(fixed_effects);
  Json tests = Json::object();
  if (s.subject_test) tests["subject"] = joint_json(*s.subject_test);
  if (s.interaction_test) tests["subject_x_covariate"] = joint_json(*s.interaction_test);
  doc["f_tests"] = std::move(tests);
  auto variance = interval_json(s.sigma2);
  variance["wald_z"] = s.variance_test.z;
  variance["wald_p"] = s.variance_test.p_value;
  doc["sigma2"] = std::move(variance);
  doc["icc"] = s.icc;
  doc["r2"] = s.r2;
  doc["deviance"] = s.deviance;
  doc["bic"] = s.bic;
  doc["boundary"] = s.boundary;
  return doc;
}

Json report_json(Indicator indicator, const std::vector<ModelSummary>& models) {
  Json doc;
  doc["indicator"] = std::string(to_string(indicator));
  doc["residual_variance_constant"] = kLogisticResidualVariance;
  Json list = Json::array();
  for (const auto& m : models) list.push_back(to_json(m));
  doc["models"] = std::move(list);
  return doc;
}

std::string report_tsv(const std::vector<ModelSummary>& models) {
  std::ostringstream out;
  out << "row";
  for (const auto& m : models) out << '\t' << m.label << "_est\t" << m.label << "_cl\t" << m.label << "_cu";
  out << '\n';
  auto triple = [&](const IntervalEstimate& ci) {
    out << '\t' << fixed(ci.center, 2) << '\t' << fixed(ci.lower, 2) << '\t' << fixed(ci.upper, 2);
  };
  auto single = [&](const std::string& text) { out << '\t' << text << "\t\t"; };

  out << "intercept";
  for (const auto& m : models) triple(m.intercept);
  out << "\ncovariate";
  for (const auto& m : models) {
    if (m.slope) triple(*m.slope); else single("");
  }
  out << "\nsubject_F";
  for (const auto& m : models) single(m.subject_test ? fixed(m.subject_test->f, 1) : "");
  out << "\nsubject_x_covariate_F";
  for (const auto& m : models) single(m.interaction_test ? fixed(m.interaction_test->f, 1) : "");
  out << "\nsigma2";
  for (const auto& m : models) triple(m.sigma2);
  out << "\nwald_p";
  for (const auto& m : models) single(fixed(m.variance_test.p_value, 4));
  out << "\nicc";
  for (const auto& m : models) single(fixed(m.icc, 2));
  out << "\nr2";
  for (const auto& m : models) single(fixed(m.r2, 2));
  out << "\ndeviance";
  for (const auto& m : models) single(fixed(m.deviance, 0));
  out << "\nbic";
  for (const auto& m : models) single(fixed(m.bic, 0));
  out << '\n';
  return out.str();
}

CorrelationMatrix pearson_matrix(const std::vector<std::string>& names,
                                 const std::vector<std::vector<double>>& columns) {
  if (names.size() != columns.size()) throw UsageError("one name per column required");
  CorrelationMatrix m;
  m.variables = names;
  m.n = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns) {
    if (c.size() != m.n) throw ValidationError("correlation columns differ in length");
  }
  if (m.n < 3) throw DegenerateError("correlations need at least three observations");
  const std::size_t k = columns.size();
  m.r.assign(k, std::vector<double>(k, 1.0));
  m.p_value.assign(k, std::vector<double>(k, 0.0));
  const double n = static_cast<double>(m.n);
  boost::math::students_t t_dist(n - 2.0);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < a; ++b) {
      double ma = 0, mb = 0;
      for (std::size_t i = 0; i < m.n; ++i) {
        ma += columns[a][i];
        mb += columns[b][i];
      }
      ma /= n;
      mb /= n;
      double sab = 0, saa = 0, sbb = 0;
      for (std::size_t i = 0; i < m.n; ++i) {
        sab += (columns[a][i] - ma) * (columns[b][i] - mb);
        saa += (columns[a][i] - ma) * (columns[a][i] - ma);
        sbb += (columns[b][i] - mb) * (columns[b][i] - mb);
      }
      if (saa <= 0 || sbb <= 0) throw DegenerateError("constant column in correlation matrix");
      const double r = std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
      double p = 0.0;
      if (std::abs(r) < 1.0) {
        const double t = r * std::sqrt((n - 2.0) / (1.0 - r * r));
        p = 2.0 * boost::math::cdf(boost::math::complement(t_dist, std::abs(t)));
      }
      m.r[a][b] = m.r[b][a] = r;
      m.p_value[a][b] = m.p_value[b][a] = p;
    }
  }
  return m;
}

Json to_json(const CorrelationMatrix& m) {
  return Json{{"variables", m.variables}, {"n", m.n}, {"r", m.r}, {"p", m.p_value}};
}

std::string correlation_tsv(const CorrelationMatrix& m) {
  std::ostringstream out;
  out << "variable";
  for (const auto& v : m.variables) out << '\t' << v;
  out << '\n';
  for (std::size_t a = 0; a < m.variables.size(); ++a) {
    out << m.variables[a];
    for (std::size_t b = 0; b <= a; ++b) {
      out << '\t' << fixed(m.r[a][b], 2);
      if (a != b && m.p_value[a][b] < 0.05) out << '*';
    }
    out << '\n';
  }
  return out.str();
}

std::string curve_csv(const std::vector<CurvePoint>& points) {
  std::ostringstream out;
  out << "raw_value,subject,predicted_rate\n";
  for (const auto& p : points) {
    out << csv::format_real(p.raw_value) << ',' << csv::escape(p.subject) << ','
        << csv::format_real(p.predicted_rate) << '\n';
  }
  return out.str();
}

}  // namespace exmap
