#pragma once

#include <Eigen/Core>
#include <span>
#include <utility>
#include <vector>

#include "dime/covariance.hpp"
#include "dime/forward.hpp"
#include "dime/record.hpp"
#include "dime/schedule.hpp"

namespace dime {

// The two unbiased estimators of the likelihood score ∇_{x_t} log p(y | x_t),
// evaluated at a posterior draw x̃_0 ~ p(x_0 | x_t, y). Θ_high has bounded
// variance at high noise; Θ_low wins at low noise.

// Θ_high(x̃_0) = (a_t/σ_t²) (x̃_0 − E[x_0|x_t]).
Eigen::VectorXd theta_high(const Eigen::VectorXd& x0_draw, const Eigen::VectorXd& tweedie_mean,
                           double t, const NoiseSchedule& schedule);

// Θ_low(x̃_0) = (a_t/σ_t²) Σ_{x_0|x_t} ∇_{x̃_0} log p(y | x̃_0).
Eigen::VectorXd theta_low(const Eigen::VectorXd& x0_draw, const ForwardModel& model,
                          const Eigen::VectorXd& y, double t, const NoiseSchedule& schedule,
                          const Covariance& posterior_cov);

// Cross products Θ(x̃₀⁽¹⁾)ᵀ Θ(x̃₀⁽²⁾) for both estimator kinds. Squaring a
// single draw's estimator is biased upward by Tr Cov(Θ); the product of two
// i.i.d. draws is unbiased for ‖∇ log p(y|x_t)‖².
std::pair<double, double> squared_score_summand(const Eigen::VectorXd& draw1,
                                                const Eigen::VectorXd& draw2,
                                                const Eigen::VectorXd& tweedie_mean,
                                                const ForwardModel& model,
                                                const Eigen::VectorXd& y, double t,
                                                const NoiseSchedule& schedule,
                                                const Covariance& posterior_cov);

enum class EstimatorKind { High, Low };
enum class ScoreSelection { Auto, ForceHigh, ForceLow };

// Per-timestep argmin of the empirical cross-product variance across paths.
// Ties break to High, whose variance stays bounded regardless of measurement
// strength. Requires at least two paths.
std::vector<EstimatorKind> select_estimator_per_timestep(
    std::span<const SamplePathRecord> records);

// Assembles log p(y) ≈ E[log p(y|x_0)] − Σ_i c_{t_i} Δt_i E‖∇ log p(y|x_{t_i})‖²
// from the recorded cross products. The [0, t_min] remainder uses a trapezoid
// with the integrand pinned to 0 at t = 0.
EvidenceEstimate dime_evidence(std::span<const SamplePathRecord> records,
                               const NoiseSchedule& schedule, const AnnealingGrid& grid,
                               ScoreSelection selection = ScoreSelection::Auto);

// Accumulation of the recorded PF-ODE summands along the tilted marginals.
// Without the constant C(q, y) the estimate is unnormalized but still valid
// for model selection under a fixed measurement and forward model.
struct TiltedConstant {
  enum class Mode { Unnormalized, MonteCarlo, Analytic };
  Mode mode = Mode::Unnormalized;
  double analytic_value = 0.0;
  int mc_samples = 10000;
  uint64_t mc_seed = 0;
};

EvidenceEstimate dime_tilted(std::span<const SamplePathRecord> records,
                             const NoiseSchedule& schedule, const AnnealingGrid& grid,
                             const ForwardModel& model, const Eigen::VectorXd& y,
                             const TiltedConstant& constant = {});

// C(q, y) = log E_{x ~ N(0, σ_T² I)}[q(y | x)] in closed form for the linear
// model: log N(y; 0, σ_T² A Aᵀ + σ_y² I).
double analytic_tilted_constant(const LinearGaussianModel& model, const NoiseSchedule& schedule,
                                const Eigen::VectorXd& y);
double monte_carlo_tilted_constant(const ForwardModel& model, const NoiseSchedule& schedule,
                                   const Eigen::VectorXd& y, int n_samples, uint64_t seed);

}  // namespace dime
