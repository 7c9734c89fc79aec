#include "dime/pnpdm.hpp"

#include "dime/errors.hpp"
#include "dime/math_util.hpp"

namespace dime {

SamplePathRecord pnpdm_run(const ForwardModel& model, const Eigen::VectorXd& y,
                           const GaussianMixturePrior& prior, const NoiseSchedule& schedule,
                           const AnnealingGrid& grid, const PnpDmConfig& config, uint64_t seed) {
  Rng rng(seed);
  const int n = grid.size();
  const int dim = prior.dim();

  SamplePathRecord rec;
  rec.seed = seed;
  rec.entries.reserve(static_cast<size_t>(n));

  Eigen::VectorXd x0_hat = prior.sample(rng);

  for (int i = 0; i < n; ++i) {
    double t = grid[i];
    try {
      ScheduleValues v = schedule.eval(t);
      double inv_var = 1.0 / (v.sigma * v.sigma);
      Eigen::VectorXd anchor = v.a * x0_hat;

      GradientOracle oracle = [&model, &y, &anchor, inv_var](const Eigen::VectorXd& x) {
        auto [grad, chi2] = model.likelihood_grad_chi2(y, x);
        grad -= inv_var * (x - anchor);
        return GradResult{std::move(grad), chi2};
      };
      Eigen::VectorXd init = anchor + v.sigma * rng.normal_vector(dim);
      Eigen::VectorXd x_t = langevin_sample(oracle, std::move(init), config.langevin, rng).state;

      double summand = prior.pf_ode_velocity(x_t, t, schedule).dot(model.likelihood_grad(y, x_t));

      PathEntry entry;
      entry.t = t;
      entry.theta_high_prod = summand;
      entry.theta_low_prod = summand;
      entry.chi_squared = model.reduced_chi_squared(y, x_t);
      entry.state_hash = state_hash(x_t);
      if (config.keep_states) entry.x_t = x_t;
      rec.entries.push_back(std::move(entry));

      x0_hat = prior.sample_conditional_x0(x_t, t, schedule, rng);
    } catch (const SamplerDivergence& e) {
      throw PathError(e.what(), i, t);
    }
  }
  rec.x0 = x0_hat;
  rec.final_log_likelihood = model.log_likelihood(y, rec.x0);
  return rec;
}

}  // namespace dime
