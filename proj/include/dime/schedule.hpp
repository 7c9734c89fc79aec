#pragma once

#include <Eigen/Core>
#include <vector>

#include "dime/rng.hpp"

namespace dime {

enum class ScheduleKind { VarianceExploding, VariancePreserving };

struct ScheduleValues {
  double a;            // signal scaling a_t
  double sigma;        // noise scaling σ_t
  double a_prime;      // da/dt
  double sigma_prime;  // dσ/dt
};

// The diffusion corruption law x_t = a_t x_0 + σ_t z.
//
// Variance-exploding: a_t ≡ 1, σ_t = t on [t_min, t_max] = [σ_min, σ_max].
// Variance-preserving: a_t = exp(−t²/4), σ_t = √(1 − exp(−t²/2)); σ_min/σ_max
// are derived from the time interval.
//
// eval and coefficient_c accept any t in [0, t_max]: the corruption law is
// well defined from t = 0 even though annealing grids never go below t_min.
class NoiseSchedule {
 public:
  static NoiseSchedule variance_exploding(double sigma_min, double sigma_max);
  static NoiseSchedule variance_preserving(double t_min, double t_max);

  ScheduleValues eval(double t) const;

  // c_t = σ'σ − σ²(a'/a), the KL-rate coefficient; nonnegative for both kinds.
  double coefficient_c(double t) const;

  double sigma(double t) const { return eval(t).sigma; }
  double signal(double t) const { return eval(t).a; }
  double time_from_sigma(double s) const;

  ScheduleKind kind() const { return kind_; }
  double sigma_min() const { return sigma_min_; }
  double sigma_max() const { return sigma_max_; }
  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }

 private:
  NoiseSchedule(ScheduleKind kind, double sigma_min, double sigma_max, double t_min, double t_max)
      : kind_(kind), sigma_min_(sigma_min), sigma_max_(sigma_max), t_min_(t_min), t_max_(t_max) {}
  void check_domain(double t) const;

  ScheduleKind kind_;
  double sigma_min_, sigma_max_, t_min_, t_max_;
};

// Strictly decreasing annealing times t_N > ... > t_1 ≥ t_min. The implicit
// endpoint t_0 = 0 is handled by the estimators' trapezoid tail.
struct AnnealingGrid {
  std::vector<double> timesteps;  // decreasing

  int size() const { return static_cast<int>(timesteps.size()); }
  double operator[](int i) const { return timesteps[static_cast<size_t>(i)]; }
  double top() const { return timesteps.front(); }
  double bottom() const { return timesteps.back(); }
};

enum class GridSpacing { Geometric, Polynomial };

// Grid over [t_min, t_max] with n_steps points. Polynomial spacing places
// σ_i = (σ_max^{1/ρ} + (i/(n−1))(σ_min^{1/ρ} − σ_max^{1/ρ}))^ρ.
AnnealingGrid make_grid(const NoiseSchedule& schedule, int n_steps,
                        GridSpacing spacing = GridSpacing::Polynomial, double rho = 7.0);

// x_t = a_t x_0 + σ_t z, z ~ N(0, I).
Eigen::VectorXd noise_forward(const Eigen::VectorXd& x0, double t, const NoiseSchedule& schedule,
                              Rng& rng);

}  // namespace dime
