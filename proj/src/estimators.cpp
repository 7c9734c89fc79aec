#include "dime/estimators.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dime/errors.hpp"
#include "dime/math_util.hpp"

namespace dime {

Eigen::VectorXd theta_high(const Eigen::VectorXd& x0_draw, const Eigen::VectorXd& tweedie_mean,
                           double t, const NoiseSchedule& schedule) {
  ScheduleValues v = schedule.eval(t);
  if (v.sigma <= 0.0) throw std::domain_error("theta_high: sigma_t must be positive");
  return (v.a / (v.sigma * v.sigma)) * (x0_draw - tweedie_mean);
}

Eigen::VectorXd theta_low(const Eigen::VectorXd& x0_draw, const ForwardModel& model,
                          const Eigen::VectorXd& y, double t, const NoiseSchedule& schedule,
                          const Covariance& posterior_cov) {
  ScheduleValues v = schedule.eval(t);
  if (v.sigma <= 0.0) throw std::domain_error("theta_low: sigma_t must be positive");
  return (v.a / (v.sigma * v.sigma)) * posterior_cov.apply(model.likelihood_grad(y, x0_draw));
}

std::pair<double, double> squared_score_summand(const Eigen::VectorXd& draw1,
                                                const Eigen::VectorXd& draw2,
                                                const Eigen::VectorXd& tweedie_mean,
                                                const ForwardModel& model,
                                                const Eigen::VectorXd& y, double t,
                                                const NoiseSchedule& schedule,
                                                const Covariance& posterior_cov) {
  Eigen::VectorXd high1 = theta_high(draw1, tweedie_mean, t, schedule);
  Eigen::VectorXd high2 = theta_high(draw2, tweedie_mean, t, schedule);
  Eigen::VectorXd low1 = theta_low(draw1, model, y, t, schedule, posterior_cov);
  Eigen::VectorXd low2 = theta_low(draw2, model, y, t, schedule, posterior_cov);
  return {high1.dot(high2), low1.dot(low2)};
}

namespace {
void check_common_grid(std::span<const SamplePathRecord> records, const AnnealingGrid& grid) {
  if (records.empty()) throw ConfigError("evidence: no path records");
  for (const auto& rec : records) {
    if (static_cast<int>(rec.entries.size()) != grid.size())
      throw ConfigError("evidence: record/grid size mismatch");
    for (int i = 0; i < grid.size(); ++i) {
      if (std::abs(rec.entries[static_cast<size_t>(i)].t - grid[i]) >
          1e-9 * std::max(1.0, grid[i]))
        throw ConfigError("evidence: records were produced on a different grid");
    }
  }
}

double selected_product(const PathEntry& e, EstimatorKind kind) {
  return kind == EstimatorKind::High ? e.theta_high_prod : e.theta_low_prod;
}
}  // namespace

std::vector<EstimatorKind> select_estimator_per_timestep(
    std::span<const SamplePathRecord> records) {
  if (records.size() < 2)
    throw ConfigError("estimator selection: requires at least two sample paths");
  size_t n_steps = records[0].entries.size();
  std::vector<EstimatorKind> choice(n_steps, EstimatorKind::High);
  std::vector<double> high(records.size()), low(records.size());
  for (size_t i = 0; i < n_steps; ++i) {
    for (size_t p = 0; p < records.size(); ++p) {
      high[p] = records[p].entries[i].theta_high_prod;
      low[p] = records[p].entries[i].theta_low_prod;
    }
    double var_high = sample_variance(high);
    double var_low = sample_variance(low);
    choice[i] = (var_low < var_high) ? EstimatorKind::Low : EstimatorKind::High;
  }
  return choice;
}

EvidenceEstimate dime_evidence(std::span<const SamplePathRecord> records,
                               const NoiseSchedule& schedule, const AnnealingGrid& grid,
                               ScoreSelection selection) {
  check_common_grid(records, grid);

  std::vector<EstimatorKind> choice;
  if (selection == ScoreSelection::Auto) {
    choice = select_estimator_per_timestep(records);
  } else {
    choice.assign(static_cast<size_t>(grid.size()), selection == ScoreSelection::ForceHigh
                                                        ? EstimatorKind::High
                                                        : EstimatorKind::Low);
  }

  const int n = grid.size();
  std::vector<double> per_path;
  per_path.reserve(records.size());
  for (const auto& rec : records) {
    double kl = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
      double dt = grid[i] - grid[i + 1];
      kl += schedule.coefficient_c(grid[i]) * dt *
            selected_product(rec.entries[static_cast<size_t>(i)], choice[static_cast<size_t>(i)]);
    }
    // trapezoid over [0, t_min]: the integrand vanishes at t = 0
    double t_min = grid[n - 1];
    kl += 0.5 * t_min * schedule.coefficient_c(t_min) *
          selected_product(rec.entries[static_cast<size_t>(n - 1)],
                           choice[static_cast<size_t>(n - 1)]);
    per_path.push_back(rec.final_log_likelihood - kl);
  }

  EvidenceEstimate est;
  est.method = "dime";
  est.per_path_values = per_path;
  est.point_estimate = mean(per_path);
  est.dispersion = 0.0;
  est.normalized = true;
  int n_high = 0;
  for (auto k : choice)
    if (k == EstimatorKind::High) ++n_high;
  nlohmann::json meta;
  meta["n_paths"] = records.size();
  meta["grid_steps"] = n;
  meta["selected_high"] = n_high;
  meta["selected_low"] = n - n_high;
  est.metadata = meta.dump();
  return est;
}

EvidenceEstimate dime_tilted(std::span<const SamplePathRecord> records,
                             const NoiseSchedule& schedule, const AnnealingGrid& grid,
                             const ForwardModel& model, const Eigen::VectorXd& y,
                             const TiltedConstant& constant) {
  check_common_grid(records, grid);
  const int n = grid.size();

  double c_value = 0.0;
  bool normalized = true;
  switch (constant.mode) {
    case TiltedConstant::Mode::Unnormalized:
      normalized = false;
      break;
    case TiltedConstant::Mode::Analytic:
      c_value = constant.analytic_value;
      break;
    case TiltedConstant::Mode::MonteCarlo:
      c_value = monte_carlo_tilted_constant(model, schedule, y, constant.mc_samples,
                                            constant.mc_seed);
      break;
  }

  std::vector<double> per_path;
  per_path.reserve(records.size());
  for (const auto& rec : records) {
    double f = 0.0;
    for (int i = 0; i < n; ++i) {
      double dt = (i + 1 < n) ? grid[i] - grid[i + 1] : grid[i];  // t_0 = 0
      f -= dt * rec.entries[static_cast<size_t>(i)].theta_high_prod;
    }
    per_path.push_back(f + c_value);
  }

  EvidenceEstimate est;
  est.method = "dime_tilted";
  est.per_path_values = per_path;
  est.point_estimate = mean(per_path);
  est.normalized = normalized;
  nlohmann::json meta;
  meta["n_paths"] = records.size();
  meta["grid_steps"] = n;
  meta["constant_mode"] = constant.mode == TiltedConstant::Mode::Unnormalized ? "unnormalized"
                          : constant.mode == TiltedConstant::Mode::Analytic   ? "analytic"
                                                                              : "monte_carlo";
  if (normalized) meta["constant_value"] = c_value;
  est.metadata = meta.dump();
  return est;
}

double analytic_tilted_constant(const LinearGaussianModel& model, const NoiseSchedule& schedule,
                                const Eigen::VectorXd& y) {
  double sigma_T = schedule.sigma_max();
  const Eigen::MatrixXd& A = model.matrix();
  Eigen::MatrixXd S = sigma_T * sigma_T * (A * A.transpose());
  S.diagonal().array() += model.sigma_y() * model.sigma_y();
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("tilted constant: factorization failed");
  double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  double quad = y.dot(llt.solve(y));
  constexpr double kLog2Pi = 1.8378770664093453;
  return -0.5 * (static_cast<double>(y.size()) * kLog2Pi + log_det + quad);
}

double monte_carlo_tilted_constant(const ForwardModel& model, const NoiseSchedule& schedule,
                                   const Eigen::VectorXd& y, int n_samples, uint64_t seed) {
  if (n_samples < 1) throw ConfigError("tilted constant: n_samples must be >= 1");
  Rng rng(seed);
  double sigma_T = schedule.sigma_max();
  std::vector<double> lls(static_cast<size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    Eigen::VectorXd x = sigma_T * rng.normal_vector(model.input_dim());
    lls[static_cast<size_t>(i)] = model.log_likelihood(y, x);
  }
  return log_sum_exp(lls) - std::log(static_cast<double>(n_samples));
}

}  // namespace dime
