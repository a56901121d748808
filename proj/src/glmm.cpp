#include "exmap/glmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "exmap/quadrature.hpp"

namespace exmap {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;
// Below this log-variance the random intercept is numerically absent.
constexpr double kMinLogSigma2 = -30.0;

double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double log_binomial_coefficient(std::int64_t n, std::int64_t y) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(y) + 1.0) -
         std::lgamma(static_cast<double>(n - y) + 1.0);
}

struct ClusterTerms {
  double loglik = 0.0;
  double d_eta = 0.0;
  double d_tau = 0.0;
};

// Binomial log-likelihood of one cluster at u = 0.
ClusterTerms fixed_cluster(std::int64_t n, std::int64_t y, double log_choose, double eta) {
  const double nd = static_cast<double>(n);
  const double yd = static_cast<double>(y);
  ClusterTerms out;
  out.loglik = log_choose + yd * eta - nd * softplus(eta);
  out.d_eta = yd - nd * logistic(eta);
  return out;
}

// Adaptive Gauss-Hermite integral of one cluster centred at the posterior
// mode, with the derivative taken through the mode and the scale.
ClusterTerms integrate_cluster(std::int64_t n, std::int64_t y, double log_choose, double eta,
                               double tau, const GaussHermiteRule& rule, bool want_gradient,
                               const std::string& cluster_id) {
  const double sigma2 = std::exp(tau);
  const double inv_s2 = 1.0 / sigma2;
  const double nd = static_cast<double>(n);
  const double yd = static_cast<double>(y);

  const auto mode = cluster_mode(n, y, eta, sigma2);
  const double u_hat = mode.mode;
  const double h = mode.curvature;
  const double p_hat = logistic(eta + u_hat);
  const double w_hat = nd * p_hat * (1.0 - p_hat);
  const double c = std::sqrt(2.0 / h);

  const std::size_t k_count = rule.nodes.size();
  thread_local std::vector<double> a;
  thread_local std::vector<double> u_k;
  a.resize(k_count);
  u_k.resize(k_count);
  double a_max = -std::numeric_limits<double>::infinity();
  const double log_norm = -0.5 * (kLogTwoPi + tau);
  for (std::size_t k = 0; k < k_count; ++k) {
    const double x = rule.nodes[k];
    const double u = u_hat + c * x;
    const double t = eta + u;
    const double g = log_choose + yd * t - nd * softplus(t) - 0.5 * u * u * inv_s2 + log_norm;
    u_k[k] = u;
    a[k] = rule.log_weights[k] + x * x + g;
    a_max = std::max(a_max, a[k]);
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) sum += std::exp(a[k] - a_max);
  ClusterTerms out;
  out.loglik = std::log(c) + a_max + std::log(sum);
  if (!std::isfinite(out.loglik)) {
    throw NumericError("non-finite marginal likelihood for cluster " + cluster_id);
  }
  if (!want_gradient) return out;

  const double skew = w_hat * (1.0 - 2.0 * p_hat);
  const double du_deta = -w_hat / h;
  const double du_dtau = u_hat * inv_s2 / h;
  const double dh_deta = skew * (1.0 + du_deta);
  const double dh_dtau = -inv_s2 + skew * du_dtau;
  const double dlogc_deta = -0.5 * dh_deta / h;
  const double dlogc_dtau = -0.5 * dh_dtau / h;
  const double dc_deta = c * dlogc_deta;
  const double dc_dtau = c * dlogc_dtau;

  double d_eta = dlogc_deta;
  double d_tau = dlogc_dtau;
  for (std::size_t k = 0; k < k_count; ++k) {
    const double pi_k = std::exp(a[k] - a_max) / sum;
    const double u = u_k[k];
    const double x = rule.nodes[k];
    const double p = logistic(eta + u);
    const double partial_eta = yd - nd * p;
    const double partial_tau = 0.5 * u * u * inv_s2 - 0.5;
    const double slope = partial_eta - u * inv_s2;
    d_eta += pi_k * (partial_eta + slope * (du_deta + x * dc_deta));
    d_tau += pi_k * (partial_tau + slope * (du_dtau + x * dc_dtau));
  }
  out.d_eta = d_eta;
  out.d_tau = d_tau;
  return out;
}

struct Evaluation {
  double value = 0.0;
  Eigen::VectorXd gradient;  // over (beta, tau) or beta alone
};

class Objective {
 public:
  explicit Objective(const FitSpec& spec)
      : spec_(spec), rule_(gauss_hermite(spec.quadrature_nodes)) {
    log_choose_.reserve(spec.observations.size());
    for (const auto& obs : spec.observations) {
      log_choose_.push_back(log_binomial_coefficient(obs.n_trials, obs.n_success));
    }
  }

  std::size_t n_beta() const { return static_cast<std::size_t>(spec_.design.cols()); }

  // tau == nullopt evaluates the sigma2 = 0 model.
  Evaluation evaluate(const Eigen::VectorXd& beta, std::optional<double> tau,
                      bool want_gradient) const {
    const Eigen::VectorXd eta = spec_.design * beta;
    const std::size_t p = n_beta();
    Evaluation out;
    out.gradient = Eigen::VectorXd::Zero(tau ? p + 1 : p);
    for (std::size_t i = 0; i < spec_.observations.size(); ++i) {
      const auto& obs = spec_.observations[i];
      const auto terms =
          tau ? integrate_cluster(obs.n_trials, obs.n_success, log_choose_[i], eta(i), *tau, rule_,
                                  want_gradient, obs.institution_id)
              : fixed_cluster(obs.n_trials, obs.n_success, log_choose_[i], eta(i));
      out.value += terms.loglik;
      if (want_gradient) {
        out.gradient.head(p) += terms.d_eta * spec_.design.row(i).transpose();
        if (tau) out.gradient(p) += terms.d_tau;
      }
    }
    if (!std::isfinite(out.value)) throw NumericError("non-finite marginal log-likelihood");
    return out;
  }

 private:
  const FitSpec& spec_;
  const GaussHermiteRule& rule_;
  std::vector<double> log_choose_;
};

struct OptimizerState {
  Eigen::VectorXd theta;
  double value = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd gradient;
  bool converged = false;
  int iterations = 0;
  std::vector<double> trace;
};

// Maximizes the objective over theta = beta or (beta, tau).
class Maximizer {
 public:
  Maximizer(const Objective& objective, bool with_tau, double tolerance, int max_iterations)
      : objective_(objective),
        with_tau_(with_tau),
        tolerance_(tolerance),
        max_iterations_(max_iterations) {}

  Evaluation evaluate(const Eigen::VectorXd& theta, bool want_gradient) const {
    const std::size_t p = objective_.n_beta();
    if (!with_tau_) return objective_.evaluate(theta, std::nullopt, want_gradient);
    return objective_.evaluate(theta.head(p), theta(p), want_gradient);
  }

  // Central differences of the analytic gradient.
  Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const {
    const auto dim = theta.size();
    Eigen::MatrixXd hess(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
      const double step = 1e-5 * std::max(1.0, std::abs(theta(j)));
      Eigen::VectorXd plus = theta;
      Eigen::VectorXd minus = theta;
      plus(j) += step;
      minus(j) -= step;
      hess.col(j) = (evaluate(plus, true).gradient - evaluate(minus, true).gradient) / (2 * step);
    }
    return 0.5 * (hess + hess.transpose());
  }

  OptimizerState run(Eigen::VectorXd theta) const {
    OptimizerState state;
    auto current = evaluate(theta, true);
    state.theta = theta;
    state.value = current.value;
    state.gradient = current.gradient;
    state.trace.push_back(current.value);

    const auto dim = theta.size();
    // Inverse of the negative Hessian, seeded from finite differences.
    Eigen::MatrixXd inverse = seed_inverse(theta);
    int resets = 0;
    for (int iter = 0; iter < max_iterations_; ++iter) {
      state.iterations = iter;
      if (state.gradient.lpNorm<Eigen::Infinity>() < tolerance_) {
        state.converged = true;
        return state;
      }
      Eigen::VectorXd direction = inverse * state.gradient;
      if (direction.dot(state.gradient) <= 0.0) {
        inverse = Eigen::MatrixXd::Identity(dim, dim) / std::max(1.0, state.gradient.norm());
        direction = inverse * state.gradient;
      }
      if (with_tau_) {
        const double tau_step = std::abs(direction(dim - 1));
        if (tau_step > 3.0) direction *= 3.0 / tau_step;
      }
      double alpha = 1.0;
      bool accepted = false;
      Evaluation next;
      Eigen::VectorXd candidate;
      const double slope = direction.dot(state.gradient);
      for (int halving = 0; halving < 60; ++halving) {
        candidate = state.theta + alpha * direction;
        if (with_tau_) candidate(dim - 1) = std::max(candidate(dim - 1), kMinLogSigma2);
        try {
          next = evaluate(candidate, true);
        } catch (const NumericError&) {
          alpha *= 0.5;
          continue;
        }
        if (next.value >= state.value + 1e-4 * alpha * slope) {
          accepted = true;
          break;
        }
        // Near the optimum the gain is below the resolution of the
        // log-likelihood; accept a step that holds the value to roundoff and
        // halves the gradient.
        const double gnorm = state.gradient.lpNorm<Eigen::Infinity>();
        if (gnorm < 1e-3 &&
            next.value >= state.value - 1e-12 * std::max(1.0, std::abs(state.value)) &&
            next.gradient.lpNorm<Eigen::Infinity>() < 0.5 * gnorm) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        if (++resets > 3) break;
        inverse = seed_inverse(state.theta);
        continue;
      }
      const Eigen::VectorXd s = candidate - state.theta;
      const Eigen::VectorXd y = state.gradient - next.gradient;  // gradient of -loglik
      state.theta = candidate;
      state.value = next.value;
      state.gradient = next.gradient;
      state.trace.push_back(next.value);
      const double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        const double rho = 1.0 / sy;
        const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(dim, dim);
        inverse = (id - rho * s * y.transpose()) * inverse * (id - rho * y * s.transpose()) +
                  rho * s * s.transpose();
      }
      // Close to the optimum, switch to Newton steps on the finite-difference
      // Hessian; they reach the gradient tolerance that BFGS only approaches.
      if (state.gradient.lpNorm<Eigen::Infinity>() < 1e-2 && iter % 5 == 4) {
        inverse = seed_inverse(state.theta);
      }
    }
    state.converged = state.gradient.lpNorm<Eigen::Infinity>() < tolerance_;
    return state;
  }

 private:
  Eigen::MatrixXd seed_inverse(const Eigen::VectorXd& theta) const {
    const auto dim = theta.size();
    const Eigen::MatrixXd info = -hessian(theta);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        (ldlt.vectorD().array() > 0.0).all()) {
      return ldlt.solve(Eigen::MatrixXd::Identity(dim, dim));
    }
    return Eigen::MatrixXd::Identity(dim, dim) / std::max(1.0, info.diagonal().cwiseAbs().maxCoeff());
  }

  const Objective& objective_;
  bool with_tau_;
  double tolerance_;
  int max_iterations_;
};

Eigen::MatrixXd invert_information(const Eigen::MatrixXd& hessian) {
  const Eigen::MatrixXd info = -hessian;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      (ldlt.vectorD().array() <= 0.0).any()) {
    throw NumericError("observed information is not positive definite");
  }
  Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
  return 0.5 * (cov + cov.transpose());
}

FitResult base_result(const FitSpec& spec) {
  FitResult r;
  r.column_names = spec.column_names;
  r.subject_levels = spec.subject_levels;
  r.n_clusters = spec.observations.size();
  for (const auto& obs : spec.observations) r.n_papers += obs.n_trials;
  r.quadrature_nodes = spec.quadrature_nodes;
  return r;
}

// Plain logistic regression start by Newton-Raphson on the aggregated
// binomial likelihood.
Eigen::VectorXd logistic_start(const FitSpec& spec) {
  const auto p = spec.design.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  std::int64_t total_n = 0;
  std::int64_t total_y = 0;
  for (const auto& obs : spec.observations) {
    total_n += obs.n_trials;
    total_y += obs.n_success;
  }
  beta(0) = logit((total_y + 0.5) / (total_n + 1.0));
  for (int iter = 0; iter < 50; ++iter) {
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd score = Eigen::VectorXd::Zero(p);
    for (std::size_t i = 0; i < spec.observations.size(); ++i) {
      const auto& obs = spec.observations[i];
      const Eigen::VectorXd row = spec.design.row(i).transpose();
      const double mu = logistic(row.dot(beta));
      const double nd = static_cast<double>(obs.n_trials);
      score += (static_cast<double>(obs.n_success) - nd * mu) * row;
      info += nd * mu * (1.0 - mu) * row * row.transpose();
    }
    const Eigen::VectorXd step = info.ldlt().solve(score);
    if (!step.allFinite()) break;
    beta += step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-12) break;
  }
  return beta;
}

}  // namespace

double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

ClusterMode cluster_mode(std::int64_t n, std::int64_t y, double eta, double sigma2) {
  if (!(sigma2 > 0.0)) return {0.0, std::numeric_limits<double>::infinity()};
  const double nd = static_cast<double>(n);
  const double yd = static_cast<double>(y);
  const double inv_s2 = 1.0 / sigma2;
  // The score y - n p(eta + u) - u / sigma2 is decreasing in u and changes
  // sign inside [sigma2 (y - n), sigma2 y].
  double lo = sigma2 * (yd - nd);
  double hi = sigma2 * yd;
  double u = std::clamp(0.0, lo, hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double p = logistic(eta + u);
    const double score = yd - nd * p - u * inv_s2;
    const double curvature = nd * p * (1.0 - p) + inv_s2;
    if (score > 0.0) {
      lo = u;
    } else if (score < 0.0) {
      hi = u;
    } else {
      break;
    }
    double next = u + score / curvature;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double change = std::abs(next - u);
    u = next;
    if (change <= 1e-14 * std::max(1.0, std::abs(u)) || hi - lo <= 1e-15 * std::max(1.0, std::abs(u))) {
      break;
    }
  }
  const double p = logistic(eta + u);
  return {u, nd * p * (1.0 - p) + inv_s2};
}

double raw_residual_logit(std::int64_t n, std::int64_t y, double eta) {
  const double rate = (y == 0 || y == n) ? (y + 0.5) / (n + 1.0)
                                         : static_cast<double>(y) / static_cast<double>(n);
  return logit(rate) - eta;
}

void FitSpec::validate() const {
  if (observations.size() < 2) throw ValidationError("a fit needs at least two clusters");
  if (static_cast<std::size_t>(design.rows()) != observations.size()) {
    throw ValidationError("design has " + std::to_string(design.rows()) + " rows for " +
                          std::to_string(observations.size()) + " clusters");
  }
  if (static_cast<std::size_t>(design.cols()) != column_names.size()) {
    throw ValidationError("design width does not match the column names");
  }
  if (quadrature_nodes < 1) throw ValidationError("quadrature_nodes must be positive");
  if (!(tolerance > 0.0)) throw ValidationError("tolerance must be positive");
  for (const auto& obs : observations) {
    if (obs.n_trials <= 0 || obs.n_success < 0 || obs.n_success > obs.n_trials) {
      throw ValidationError("invalid counts for cluster " + obs.institution_id);
    }
  }
  if (!design.allFinite()) throw ValidationError("design contains non-finite values");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols()) {
    throw ValidationError("design matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                          " < " + std::to_string(design.cols()) + " columns)");
  }
}

double FitResult::beta_se(std::size_t i) const {
  return std::sqrt(std::max(0.0, covariance(i, i)));
}

double FitResult::sigma2_se() const {
  const auto last = covariance.rows() - 1;
  return std::sqrt(std::max(0.0, covariance(last, last)));
}

std::size_t FitResult::column(const std::string& name) const {
  auto it = std::find(column_names.begin(), column_names.end(), name);
  if (it == column_names.end()) throw NotFoundError("no model column '" + name + "'");
  return static_cast<std::size_t>(it - column_names.begin());
}

double marginal_loglik(const FitSpec& spec, const Eigen::VectorXd& beta, double sigma2) {
  if (sigma2 < 0.0) throw UsageError("variance must be non-negative");
  const Objective objective(spec);
  if (sigma2 == 0.0) return objective.evaluate(beta, std::nullopt, false).value;
  return objective.evaluate(beta, std::log(sigma2), false).value;
}

LoglikGradient marginal_loglik_gradient(const FitSpec& spec, const Eigen::VectorXd& beta,
                                        double log_sigma2) {
  const Objective objective(spec);
  auto e = objective.evaluate(beta, log_sigma2, true);
  return {e.value, std::move(e.gradient)};
}

FitResult fit_model(const FitSpec& spec) {
  spec.validate();
  const Objective objective(spec);
  const auto p = spec.design.cols();

  // sigma2 = 0: plain logistic regression through the same optimizer.
  const Maximizer fixed(objective, false, spec.tolerance, spec.max_iterations);
  auto zero = fixed.run(logistic_start(spec));
  FitResult zero_result = base_result(spec);
  zero_result.beta = zero.theta;
  zero_result.sigma2 = 0.0;
  zero_result.log_likelihood = zero.value;
  zero_result.converged = zero.converged;
  zero_result.boundary = true;
  zero_result.iterations = zero.iterations;
  zero_result.gradient_norm = zero.gradient.lpNorm<Eigen::Infinity>();
  zero_result.loglik_trace = zero.trace;
  zero_result.covariance = Eigen::MatrixXd::Zero(p + 1, p + 1);
  if (zero.converged) {
    zero_result.covariance.topLeftCorner(p, p) = invert_information(fixed.hessian(zero.theta));
  }
  if (spec.fix_sigma2_zero) {
    if (!zero.converged) throw FitError("logistic fit did not converge", zero_result);
    return zero_result;
  }

  const Maximizer mixed(objective, true, spec.tolerance, spec.max_iterations);
  std::optional<OptimizerState> best;
  std::optional<OptimizerState> best_any;
  for (double start_sigma2 : {0.1, 1.0}) {
    Eigen::VectorXd theta(p + 1);
    theta.head(p) = zero.theta;
    theta(p) = std::log(start_sigma2);
    OptimizerState state;
    try {
      state = mixed.run(theta);
    } catch (const NumericError&) {
      continue;
    }
    if (!best_any || state.value > best_any->value) best_any = state;
    if (state.converged && (!best || state.value > best->value)) best = state;
  }

  if (!best) {
    if (!best_any) throw FitError("optimizer failed at every start", zero_result);
    FitResult partial = base_result(spec);
    partial.beta = best_any->theta.head(p);
    partial.sigma2 = std::exp(best_any->theta(p));
    partial.log_likelihood = best_any->value;
    partial.iterations = best_any->iterations;
    partial.gradient_norm = best_any->gradient.lpNorm<Eigen::Infinity>();
    partial.loglik_trace = best_any->trace;
    partial.covariance = Eigen::MatrixXd::Zero(p + 1, p + 1);
    throw FitError("no optimizer start reached gradient norm " + std::to_string(spec.tolerance) +
                       " (best " + std::to_string(partial.gradient_norm) + ")",
                   partial);
  }

  const double tau = best->theta(p);
  const bool at_boundary =
      tau <= -20.0 || (zero.converged && zero.value >= best->value - 1e-9 * std::max(1.0, std::abs(best->value)));
  if (at_boundary) {
    if (!zero.converged) throw FitError("logistic fit did not converge", zero_result);
    return zero_result;
  }

  FitResult r = base_result(spec);
  r.beta = best->theta.head(p);
  r.sigma2 = std::exp(tau);
  r.log_likelihood = best->value;
  r.converged = true;
  r.boundary = false;
  r.iterations = best->iterations;
  r.gradient_norm = best->gradient.lpNorm<Eigen::Infinity>();
  r.loglik_trace = best->trace;
  // Delta method from log sigma2 to sigma2.
  Eigen::MatrixXd cov_theta = invert_information(mixed.hessian(best->theta));
  Eigen::VectorXd jac = Eigen::VectorXd::Ones(p + 1);
  jac(p) = r.sigma2;
  r.covariance = jac.asDiagonal() * cov_theta * jac.asDiagonal();
  return r;
}

std::vector<EBEstimate> eb_estimates(const FitSpec& spec, const FitResult& fit) {
  if (!fit.converged) throw UsageError("EB estimates need a converged fit");
  const Eigen::VectorXd eta = spec.design * fit.beta;
  std::vector<EBEstimate> out;
  out.reserve(spec.observations.size());
  for (std::size_t i = 0; i < spec.observations.size(); ++i) {
    const auto& obs = spec.observations[i];
    EBEstimate eb;
    eb.institution_id = obs.institution_id;
    if (fit.sigma2 > 0.0) {
      const auto mode = cluster_mode(obs.n_trials, obs.n_success, eta(i), fit.sigma2);
      if (!std::isfinite(mode.curvature) || !(mode.curvature > 0.0)) {
        throw NumericError("non-finite posterior curvature for cluster " + obs.institution_id);
      }
      eb.u_mode = mode.mode;
      eb.u_se = 1.0 / std::sqrt(mode.curvature);
    }
    out.push_back(std::move(eb));
  }
  return out;
}

double predict_probability(const Eigen::VectorXd& beta, const Eigen::VectorXd& design_row,
                           double u) {
  return logistic(beta.dot(design_row) + u);
}

FitSpec make_design(std::vector<ClusterObservation> observations,
                    std::optional<std::span<const double>> covariate) {
  FitSpec spec;
  const auto n = static_cast<Eigen::Index>(observations.size());
  if (covariate && covariate->size() != observations.size()) {
    throw ValidationError("covariate length does not match the observations");
  }
  spec.design = Eigen::MatrixXd::Ones(n, covariate ? 2 : 1);
  spec.column_names = {"intercept"};
  if (covariate) {
    spec.column_names.push_back("covariate");
    for (Eigen::Index i = 0; i < n; ++i) spec.design(i, 1) = (*covariate)[i];
  }
  spec.observations = std::move(observations);
  return spec;
}

FitSpec build_dummy_design(std::vector<ClusterObservation> observations,
                           std::optional<std::span<const double>> covariate) {
  std::set<std::string> subject_set;
  for (const auto& obs : observations) subject_set.insert(obs.subject_area);
  if (subject_set.size() < 2) {
    throw UsageError("subject dummies need at least two subjects; use the per-subject model");
  }
  if (covariate && covariate->size() != observations.size()) {
    throw ValidationError("covariate length does not match the observations");
  }
  std::vector<std::string> subjects(subject_set.begin(), subject_set.end());
  const auto levels = static_cast<Eigen::Index>(subjects.size()) - 1;
  const auto n = static_cast<Eigen::Index>(observations.size());
  const Eigen::Index base = covariate ? 2 : 1;
  const Eigen::Index width = base + levels + (covariate ? levels : 0);

  FitSpec spec;
  spec.subject_levels = subjects;
  spec.design = Eigen::MatrixXd::Zero(n, width);
  spec.column_names = {"intercept"};
  if (covariate) spec.column_names.push_back("covariate");
  for (Eigen::Index j = 1; j <= levels; ++j) {
    spec.column_names.push_back("subject[" + subjects[j] + "]");
  }
  if (covariate) {
    for (Eigen::Index j = 1; j <= levels; ++j) {
      spec.column_names.push_back("subject[" + subjects[j] + "]:covariate");
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    spec.design(i, 0) = 1.0;
    const double x = covariate ? (*covariate)[i] : 0.0;
    if (covariate) spec.design(i, 1) = x;
    const auto level = std::lower_bound(subjects.begin(), subjects.end(),
                                        observations[i].subject_area) -
                       subjects.begin();
    if (level > 0) {
      spec.design(i, base + level - 1) = 1.0;
      if (covariate) spec.design(i, base + levels + level - 1) = x;
    }
  }
  spec.observations = std::move(observations);
  return spec;
}

}  // namespace exmap
