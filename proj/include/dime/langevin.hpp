#pragma once

#include <Eigen/Core>
#include <functional>
#include <limits>

#include "dime/rng.hpp"

namespace dime {

struct LangevinConfig {
  double step_size = 1e-3;
  int max_steps = 1000;

  enum class Decay { None, LinearToZero };
  Decay decay = Decay::LinearToZero;

  // Windowed plateau rule on the gradient oracle's diagnostic (reduced χ²
  // in the samplers): stop once two adjacent windows of `window` values agree
  // to `rel_tol` relative difference. Disabled unless the oracle reports a
  // finite diagnostic.
  bool convergence_check = false;
  int window = 50;
  double rel_tol = 1e-3;
};

// Gradient of the log target, with an optional scalar diagnostic computed as
// a byproduct (samplers piggyback the reduced χ² on the forward pass already
// done for the likelihood gradient).
struct GradResult {
  Eigen::VectorXd grad;
  double diagnostic = std::numeric_limits<double>::quiet_NaN();
};
using GradientOracle = std::function<GradResult(const Eigen::VectorXd&)>;

struct LangevinResult {
  Eigen::VectorXd state;
  int steps = 0;
  bool converged_early = false;
};

// Unadjusted Langevin: x ← x + η_k ∇log π(x) + √(2η_k) ξ. Throws
// SamplerDivergence on a non-finite gradient, carrying the step index.
LangevinResult langevin_sample(const GradientOracle& grad_log_target, Eigen::VectorXd init,
                               const LangevinConfig& config, Rng& rng);

}  // namespace dime
