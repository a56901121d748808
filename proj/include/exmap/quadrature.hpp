#pragma once

#include <vector>

namespace exmap {

/// Gauss-Hermite rule for integrals of the form
/// \f$\int e^{-x^2} f(x)\,dx \approx \sum_k w_k f(x_k)\f$.
struct GaussHermiteRule {
  std::vector<double> nodes;  // ascending
  std::vector<double> weights;
  std::vector<double> log_weights;
};

/// Rule with `n` nodes (n >= 1). Rules are computed once and cached; the
/// returned reference stays valid for the life of the program.
const GaussHermiteRule& gauss_hermite(int n);

}  // namespace exmap
