#include "dime/daps.hpp"

#include <cmath>

#include "dime/errors.hpp"
#include "dime/estimators.hpp"
#include "dime/math_util.hpp"

namespace dime {

namespace {

Covariance conditional_covariance(const DapsConfig& config, const EmpiricalGaussian& empirical,
                                  int dim, double t, const NoiseSchedule& schedule) {
  if (config.covariance == CovarianceSource::Lemma2)
    return empirical.posterior_covariance(t, schedule);
  return heuristic_covariance(dim, t, schedule);
}

GradientOracle make_conditional_oracle(const Eigen::VectorXd& x_t, double t,
                                       const ForwardModel& model, const Eigen::VectorXd& y,
                                       const GaussianMixturePrior& prior,
                                       const NoiseSchedule& schedule, const DapsConfig& config,
                                       const Eigen::VectorXd& x_hat, const Covariance& cov_t) {
  if (config.mode == DapsMode::GaussianApprox) {
    return [&model, &y, &x_hat, &cov_t](const Eigen::VectorXd& x) {
      auto [grad, chi2] = model.likelihood_grad_chi2(y, x);
      grad -= cov_t.solve(x - x_hat);
      return GradResult{std::move(grad), chi2};
    };
  }
  ScheduleValues v = schedule.eval(t);
  double t_floor = schedule.time_from_sigma(schedule.sigma_min());
  bool clean = config.use_true_clean_score;
  return [&model, &y, &prior, &schedule, &x_t, v, t_floor, clean](const Eigen::VectorXd& x) {
    auto [grad, chi2] = model.likelihood_grad_chi2(y, x);
    grad += clean ? prior.clean_score(x) : prior.noised_score(x, t_floor, schedule);
    grad += (v.a / (v.sigma * v.sigma)) * (x_t - v.a * x);
    return GradResult{std::move(grad), chi2};
  };
}

}  // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd> daps_sample_x0_pair(
    const Eigen::VectorXd& x_t, double t, const ForwardModel& model, const Eigen::VectorXd& y,
    const GaussianMixturePrior& prior, const EmpiricalGaussian& empirical,
    const NoiseSchedule& schedule, const DapsConfig& config, Rng& rng) {
  Eigen::VectorXd x_hat = prior.tweedie_mean(x_t, t, schedule);
  Covariance cov_t = conditional_covariance(config, empirical, prior.dim(), t, schedule);
  GradientOracle oracle =
      make_conditional_oracle(x_t, t, model, y, prior, schedule, config, x_hat, cov_t);

  auto one_draw = [&]() {
    Eigen::VectorXd init = x_hat + cov_t.sample(rng);
    return langevin_sample(oracle, std::move(init), config.langevin, rng).state;
  };
  Eigen::VectorXd first = one_draw();
  Eigen::VectorXd second = one_draw();
  return {std::move(first), std::move(second)};
}

SamplePathRecord daps_run(const ForwardModel& model, const Eigen::VectorXd& y,
                          const GaussianMixturePrior& prior, const EmpiricalGaussian& empirical,
                          const NoiseSchedule& schedule, const AnnealingGrid& grid,
                          const DapsConfig& config, uint64_t seed) {
  Rng rng(seed);
  const int n = grid.size();
  const int dim = prior.dim();

  SamplePathRecord rec;
  rec.seed = seed;
  rec.entries.reserve(static_cast<size_t>(n));

  double sigma_top = schedule.sigma(grid.top());
  Eigen::VectorXd x_t = sigma_top * rng.normal_vector(dim);

  for (int i = 0; i < n; ++i) {
    double t = grid[i];
    try {
      Eigen::VectorXd x_hat = prior.tweedie_mean(x_t, t, schedule);
      Covariance cov_t = conditional_covariance(config, empirical, dim, t, schedule);
      GradientOracle oracle =
          make_conditional_oracle(x_t, t, model, y, prior, schedule, config, x_hat, cov_t);

      auto one_draw = [&]() {
        Eigen::VectorXd init = x_hat + cov_t.sample(rng);
        return langevin_sample(oracle, std::move(init), config.langevin, rng).state;
      };
      Eigen::VectorXd draw1 = one_draw();
      Eigen::VectorXd draw2 = one_draw();

      auto [high, low] = squared_score_summand(draw1, draw2, x_hat, model, y, t, schedule, cov_t);

      PathEntry entry;
      entry.t = t;
      entry.theta_high_prod = high;
      entry.theta_low_prod = low;
      entry.chi_squared = model.reduced_chi_squared(y, draw1);
      entry.state_hash = state_hash(x_t);
      if (config.keep_states) {
        entry.x_t = x_t;
        entry.draw1 = draw1;
        entry.draw2 = draw2;
      }
      rec.entries.push_back(std::move(entry));

      if (i + 1 < n) {
        x_t = noise_forward(draw1, grid[i + 1], schedule, rng);
      } else {
        rec.x0 = std::move(draw1);
      }
    } catch (const SamplerDivergence& e) {
      throw PathError(e.what(), i, t);
    }
  }
  rec.final_log_likelihood = model.log_likelihood(y, rec.x0);
  return rec;
}

}  // namespace dime
