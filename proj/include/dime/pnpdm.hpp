#pragma once

#include <Eigen/Core>

#include "dime/forward.hpp"
#include "dime/gmm.hpp"
#include "dime/langevin.hpp"
#include "dime/record.hpp"
#include "dime/schedule.hpp"

namespace dime {

struct PnpDmConfig {
  LangevinConfig langevin;
  bool keep_states = true;
};

// Split-Gibbs annealing along the tilted marginals q(x_t | y) ∝ q(y|x_t) p(x_t),
// where q(y|x) applies the measurement model directly to the noisy state.
// Per timestep t_i: Langevin-sample x_{t_i} ∝ q(y|x_{t_i}) N(x_{t_i}; a x̂_0, σ² I),
// record the evidence-gradient summand v_p(x_{t_i})ᵀ ∇log q(y|x_{t_i}) in both
// estimator slots, then resample x̂_0 from the analytic conditional p(x_0|x_{t_i}).
SamplePathRecord pnpdm_run(const ForwardModel& model, const Eigen::VectorXd& y,
                           const GaussianMixturePrior& prior, const NoiseSchedule& schedule,
                           const AnnealingGrid& grid, const PnpDmConfig& config, uint64_t seed);

}  // namespace dime
