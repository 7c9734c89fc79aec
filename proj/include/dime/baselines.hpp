#pragma once

#include <Eigen/Core>
#include <vector>

#include "dime/forward.hpp"
#include "dime/gmm.hpp"
#include "dime/langevin.hpp"
#include "dime/record.hpp"

namespace dime {

// Tempered family p_β(x) ∝ p(x) p(y|x)^β bridging prior (β = 0) and
// posterior (β = 1). Adaptive-CESS schedules pick the next β online so the
// conditional ESS decays at the configured rate.
struct PowerPosteriorSchedule {
  enum class Kind { Linear, Exponential, Sigmoidal, AdaptiveCess };
  Kind kind = Kind::Exponential;
  int n_steps = 100;        // number of β intervals for the fixed kinds
  double lambda = 6.0;      // exponential / sigmoidal shape
  double adaptive_rate = 0.6;
  double min_delta_beta = 0.002;

  // β_0 = 0 < β_1 < ... < β_K = 1 for the fixed kinds.
  std::vector<double> fixed_grid() const;
};

struct BridgeConfig {
  int n_particles = 20;
  LangevinConfig transition{.step_size = 2e-4,
                            .max_steps = 2000,
                            .decay = LangevinConfig::Decay::None,
                            .convergence_check = false};
};

// log p(y) ≈ log-mean-exp of log p(y|x) over prior draws.
EvidenceEstimate naive_mc(const GaussianMixturePrior& prior, const ForwardModel& model,
                          const Eigen::VectorXd& y, int n_samples, uint64_t seed);

// Quadrature of E_{p_β}[log p(y|x)] over β (left endpoint, matching the
// telescoped identity); stage populations are SMC-propagated.
EvidenceEstimate thermodynamic_integration(const GaussianMixturePrior& prior,
                                           const ForwardModel& model, const Eigen::VectorXd& y,
                                           const PowerPosteriorSchedule& betas,
                                           const BridgeConfig& config, uint64_t seed);

// Per-particle accumulated log-weights, log-mean-exp at the end.
EvidenceEstimate annealed_importance_sampling(const GaussianMixturePrior& prior,
                                              const ForwardModel& model, const Eigen::VectorXd& y,
                                              const PowerPosteriorSchedule& betas,
                                              const BridgeConfig& config, uint64_t seed);

// AIS plus multinomial resampling when normalized ESS < ess_threshold.
EvidenceEstimate sequential_monte_carlo(const GaussianMixturePrior& prior,
                                        const ForwardModel& model, const Eigen::VectorXd& y,
                                        const PowerPosteriorSchedule& betas, double ess_threshold,
                                        const BridgeConfig& config, uint64_t seed);

}  // namespace dime
