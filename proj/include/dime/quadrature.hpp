#pragma once

#include <Eigen/Core>

#include "dime/forward.hpp"
#include "dime/gmm.hpp"

namespace dime {

struct QuadratureSpec {
  int points_per_axis = 201;    // starting resolution; doubled until converged
  double half_width = 8.0;      // box half-width in prior standard deviations
  double convergence_tol = 1e-4;
  int max_refinements = 4;
};

// Brute-force log ∫ p(y|x) p(x) dx by midpoint tensor-grid quadrature.
// Supported for state dimension ≤ 3; the grid is refined (resolution doubled)
// until successive results agree to `convergence_tol`.
double quadrature_evidence_oracle(const GaussianMixturePrior& prior, const ForwardModel& model,
                                  const Eigen::VectorXd& y, const QuadratureSpec& spec = {});

}  // namespace dime
