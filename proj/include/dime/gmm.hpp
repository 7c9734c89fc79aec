#pragma once

#include <Eigen/Core>
#include <vector>

#include "dime/covariance.hpp"
#include "dime/rng.hpp"
#include "dime/schedule.hpp"

namespace dime {

// Analytic Gaussian-mixture prior. Supplies every oracle the estimators
// need: density, clean and noised scores, Tweedie means, exact conditional
// sampling, prior sampling, and the PF-ODE velocity field.
class GaussianMixturePrior {
 public:
  GaussianMixturePrior(Eigen::VectorXd weights, std::vector<Eigen::VectorXd> means,
                       std::vector<Covariance> covariances);

  int dim() const { return dim_; }
  int n_components() const { return static_cast<int>(weights_.size()); }
  const Eigen::VectorXd& weights() const { return weights_; }
  const Eigen::VectorXd& mean(int k) const { return means_[static_cast<size_t>(k)]; }
  const Covariance& covariance(int k) const { return covariances_[static_cast<size_t>(k)]; }

  double log_density(const Eigen::VectorXd& x) const;
  Eigen::VectorXd clean_score(const Eigen::VectorXd& x) const;

  // Density/score of the noised marginal Σ_k w_k N(x; a_t μ_k, a_t²Σ_k + σ_t² I).
  double noised_log_density(const Eigen::VectorXd& x, double t, const NoiseSchedule& s) const;
  Eigen::VectorXd noised_score(const Eigen::VectorXd& x, double t, const NoiseSchedule& s) const;

  // E[x_0 | x_t] = (x_t + σ_t² ∇log p_t(x_t)) / a_t.
  Eigen::VectorXd tweedie_mean(const Eigen::VectorXd& x_t, double t, const NoiseSchedule& s) const;

  Eigen::VectorXd sample(Rng& rng) const;

  // Exact draw from the conditional p(x_0 | x_t): component chosen by noised
  // responsibilities, then the per-component Gaussian conditional.
  Eigen::VectorXd sample_conditional_x0(const Eigen::VectorXd& x_t, double t,
                                        const NoiseSchedule& s, Rng& rng) const;

  // v_p(x_t) = (a'/a) x_t − c_t ∇log p_t(x_t).
  Eigen::VectorXd pf_ode_velocity(const Eigen::VectorXd& x_t, double t,
                                  const NoiseSchedule& s) const;

  Eigen::VectorXd mixture_mean() const;
  Covariance mixture_covariance(Covariance::Kind representation) const;
  // uᵀ Σ_mix u for a unit direction u, computed without forming Σ_mix.
  double direction_variance(const Eigen::VectorXd& u) const;

 private:
  void check_dim(const Eigen::VectorXd& x) const;
  // log w_k + log N(x; a μ_k, a²Σ_k + σ²I) for all k
  Eigen::VectorXd component_log_terms(const Eigen::VectorXd& x, double a, double sigma,
                                      std::vector<Covariance>* noised_out) const;

  Eigen::VectorXd weights_;
  std::vector<Eigen::VectorXd> means_;
  std::vector<Covariance> covariances_;
  int dim_;
};

// Gaussian surrogate N(μ_0, Σ_0) for the prior, used by the improved
// conditional-covariance approximation. `jitter` is added to Σ_0's diagonal
// before any inversion.
class EmpiricalGaussian {
 public:
  EmpiricalGaussian(Eigen::VectorXd mu0, Covariance sigma0, double jitter = 0.0);

  // Exact mixture moments, projected to the requested representation.
  static EmpiricalGaussian from_mixture(const GaussianMixturePrior& prior,
                                        Covariance::Kind representation, double jitter = 0.0);
  // Sample mean/covariance from rows of a data matrix.
  static EmpiricalGaussian from_samples(const Eigen::MatrixXd& rows, double jitter = 1e-2);

  const Eigen::VectorXd& mu0() const { return mu0_; }
  const Covariance& sigma0() const { return sigma0_; }
  double jitter() const { return jitter_; }
  // Σ_0 + jitter·I, the matrix every formula below actually uses.
  const Covariance& effective_sigma0() const { return effective_; }
  int dim() const { return static_cast<int>(mu0_.size()); }

  // Σ_{x_0|x_t} = [Σ_0⁻¹ + (a_t²/σ_t²) I]⁻¹. At σ_t = 0 returns the zero
  // matrix limit.
  Covariance posterior_covariance(double t, const NoiseSchedule& s) const;

 private:
  Eigen::VectorXd mu0_;
  Covariance sigma0_;
  double jitter_;
  Covariance effective_;
};

// σ_t² I, the original covariance heuristic kept as a baseline.
Covariance heuristic_covariance(int dim, double t, const NoiseSchedule& s);

// Exact log evidence log Σ_k w_k N(y; A μ_k, A Σ_k Aᵀ + σ_y² I) under a
// linear-Gaussian observation y = A x + ε. This is the ground-truth oracle.
double analytic_evidence_linear(const GaussianMixturePrior& prior, const Eigen::MatrixXd& A,
                                double sigma_y, const Eigen::VectorXd& y);

}  // namespace dime
