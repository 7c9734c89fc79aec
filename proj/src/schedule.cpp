#include "dime/schedule.hpp"

#include <cmath>
#include <stdexcept>

#include "dime/errors.hpp"

namespace dime {

NoiseSchedule NoiseSchedule::variance_exploding(double sigma_min, double sigma_max) {
  if (!(sigma_min > 0.0) || !(sigma_max > sigma_min))
    throw ConfigError("schedule: require 0 < sigma_min < sigma_max");
  return NoiseSchedule(ScheduleKind::VarianceExploding, sigma_min, sigma_max, sigma_min, sigma_max);
}

NoiseSchedule NoiseSchedule::variance_preserving(double t_min, double t_max) {
  if (!(t_min > 0.0) || !(t_max > t_min))
    throw ConfigError("schedule: require 0 < t_min < t_max");
  auto sigma_of = [](double t) { return std::sqrt(1.0 - std::exp(-0.5 * t * t)); };
  return NoiseSchedule(ScheduleKind::VariancePreserving, sigma_of(t_min), sigma_of(t_max), t_min,
                       t_max);
}

void NoiseSchedule::check_domain(double t) const {
  double tol = 1e-9 * std::max(1.0, t_max_);
  if (t < -tol || t > t_max_ + tol)
    throw std::domain_error("schedule: t = " + std::to_string(t) + " outside [0, " +
                            std::to_string(t_max_) + "]");
}

ScheduleValues NoiseSchedule::eval(double t) const {
  check_domain(t);
  t = std::max(t, 0.0);
  if (kind_ == ScheduleKind::VarianceExploding) {
    return {1.0, t, 0.0, 1.0};
  }
  // variance-preserving: a = exp(−t²/4), σ = √(1 − exp(−t²/2))
  double a = std::exp(-0.25 * t * t);
  double a_prime = -0.5 * t * a;
  double one_minus = -std::expm1(-0.5 * t * t);  // 1 − exp(−t²/2), stable near 0
  double sigma = std::sqrt(one_minus);
  double sigma_prime;
  if (t < 1e-8) {
    sigma_prime = 1.0 / std::sqrt(2.0);  // limit of tσ'… as t → 0
  } else {
    sigma_prime = t * std::exp(-0.5 * t * t) / (2.0 * sigma);
  }
  return {a, sigma, a_prime, sigma_prime};
}

double NoiseSchedule::coefficient_c(double t) const {
  ScheduleValues v = eval(t);
  return v.sigma_prime * v.sigma - v.sigma * v.sigma * (v.a_prime / v.a);
}

double NoiseSchedule::time_from_sigma(double s) const {
  if (kind_ == ScheduleKind::VarianceExploding) return s;
  if (!(s >= 0.0 && s < 1.0))
    throw std::domain_error("schedule: variance-preserving sigma must lie in [0, 1)");
  return std::sqrt(-2.0 * std::log1p(-s * s));
}

AnnealingGrid make_grid(const NoiseSchedule& schedule, int n_steps, GridSpacing spacing,
                        double rho) {
  if (n_steps < 2) throw ConfigError("grid: n_steps must be >= 2");
  double smin = schedule.sigma_min();
  double smax = schedule.sigma_max();
  AnnealingGrid grid;
  grid.timesteps.resize(static_cast<size_t>(n_steps));
  for (int i = 0; i < n_steps; ++i) {
    double u = static_cast<double>(i) / static_cast<double>(n_steps - 1);
    double sigma;
    if (spacing == GridSpacing::Geometric) {
      sigma = smax * std::pow(smin / smax, u);
    } else {
      double inv_max = std::pow(smax, 1.0 / rho);
      double inv_min = std::pow(smin, 1.0 / rho);
      sigma = std::pow(inv_max + u * (inv_min - inv_max), rho);
    }
    grid.timesteps[static_cast<size_t>(i)] = schedule.time_from_sigma(sigma);
  }
  // pin the endpoints exactly
  grid.timesteps.front() = schedule.t_max();
  grid.timesteps.back() = schedule.t_min();
  for (size_t i = 1; i < grid.timesteps.size(); ++i) {
    if (!(grid.timesteps[i] < grid.timesteps[i - 1]))
      throw ConfigError("grid: timesteps must be strictly decreasing");
  }
  return grid;
}

Eigen::VectorXd noise_forward(const Eigen::VectorXd& x0, double t, const NoiseSchedule& schedule,
                              Rng& rng) {
  ScheduleValues v = schedule.eval(t);
  return v.a * x0 + v.sigma * rng.normal_vector(static_cast<int>(x0.size()));
}

}  // namespace dime
