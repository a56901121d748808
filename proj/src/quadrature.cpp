#include "exmap/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "exmap/error.hpp"

namespace exmap {

namespace {

// Roots of the n-th Hermite polynomial by Newton iteration on the
// orthonormal recurrence, starting from the usual asymptotic guesses.
GaussHermiteRule compute_rule(int n) {
  GaussHermiteRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  if (n == 1) {
    rule.weights[0] = std::sqrt(std::numbers::pi);
  } else {
    const double pim4 = std::pow(std::numbers::pi, -0.25);
    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
      if (i == 0) {
        z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
      } else if (i == 1) {
        z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
      } else if (i == 2) {
        z = 1.86 * z - 0.86 * rule.nodes[0];
      } else if (i == 3) {
        z = 1.91 * z - 0.91 * rule.nodes[1];
      } else {
        z = 2.0 * z - rule.nodes[i - 2];
      }
      double pp = 0.0;
      bool converged = false;
      for (int iter = 0; iter < 100; ++iter) {
        double p1 = pim4;
        double p2 = 0.0;
        for (int j = 1; j <= n; ++j) {
          const double p3 = p2;
          p2 = p1;
          p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
        }
        pp = std::sqrt(2.0 * n) * p2;
        const double z1 = z;
        z = z1 - p1 / pp;
        if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) {
          converged = true;
          break;
        }
      }
      if (!converged) throw NumericError("Gauss-Hermite root iteration did not converge");
      rule.nodes[i] = z;
      rule.nodes[n - 1 - i] = -z;
      rule.weights[i] = 2.0 / (pp * pp);
      rule.weights[n - 1 - i] = rule.weights[i];
    }
    // The recurrence produces nodes in descending order.
    for (int i = 0, j = n - 1; i < j; ++i, --j) {
      std::swap(rule.nodes[i], rule.nodes[j]);
      std::swap(rule.weights[i], rule.weights[j]);
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  }
  rule.log_weights.reserve(n);
  for (double w : rule.weights) rule.log_weights.push_back(std::log(w));
  return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite(int n) {
  if (n < 1) throw UsageError("quadrature needs at least one node");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussHermiteRule>(compute_rule(n));
  return *slot;
}

}  // namespace exmap
