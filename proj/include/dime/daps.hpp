#pragma once

#include <Eigen/Core>
#include <utility>

#include "dime/forward.hpp"
#include "dime/gmm.hpp"
#include "dime/langevin.hpp"
#include "dime/record.hpp"
#include "dime/schedule.hpp"

namespace dime {

enum class DapsMode { GaussianApprox, Exact };
enum class CovarianceSource { Lemma2, Heuristic };

struct DapsConfig {
  DapsMode mode = DapsMode::GaussianApprox;
  CovarianceSource covariance = CovarianceSource::Lemma2;
  LangevinConfig langevin;
  // Exact mode evaluates the prior score at the σ_min noise floor unless the
  // truly clean score is requested (available for analytic mixtures).
  bool use_true_clean_score = false;
  bool keep_states = true;
};

// Two independent draws from p(x_0 | x_t, y) via warm-started Langevin.
// In gaussian-approx mode the conditional prior factor is
// N(E[x_0|x_t], Σ_{x_0|x_t}) with Σ from the configured covariance source;
// in exact mode it is p(y|x_0) p(x_t|x_0) p(x_0) through the prior score.
// Both draws start from independently perturbed copies of the Tweedie mean.
std::pair<Eigen::VectorXd, Eigen::VectorXd> daps_sample_x0_pair(
    const Eigen::VectorXd& x_t, double t, const ForwardModel& model, const Eigen::VectorXd& y,
    const GaussianMixturePrior& prior, const EmpiricalGaussian& empirical,
    const NoiseSchedule& schedule, const DapsConfig& config, Rng& rng);

// One full annealing pass: initialize x_{t_N} ~ N(0, σ_{t_N}² I), then per
// timestep draw the paired posterior samples, record both estimator inner
// products, and re-noise with the first draw. Any step failure aborts the
// path with its timestep index.
SamplePathRecord daps_run(const ForwardModel& model, const Eigen::VectorXd& y,
                          const GaussianMixturePrior& prior, const EmpiricalGaussian& empirical,
                          const NoiseSchedule& schedule, const AnnealingGrid& grid,
                          const DapsConfig& config, uint64_t seed);

}  // namespace dime
