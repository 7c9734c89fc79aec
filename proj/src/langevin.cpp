#include "dime/langevin.hpp"

#include <cmath>
#include <vector>

#include "dime/errors.hpp"

namespace dime {

LangevinResult langevin_sample(const GradientOracle& grad_log_target, Eigen::VectorXd init,
                               const LangevinConfig& config, Rng& rng) {
  if (!(config.step_size > 0.0)) throw ConfigError("langevin: step_size must be positive");
  if (config.max_steps < 1) throw ConfigError("langevin: max_steps must be >= 1");

  Eigen::VectorXd x = std::move(init);
  const int n = static_cast<int>(x.size());
  const int w = config.window;

  // rolling sums of the last 2w diagnostics
  std::vector<double> history;
  if (config.convergence_check) history.reserve(static_cast<size_t>(2 * w + 1));
  double sum_recent = 0.0, sum_previous = 0.0;

  LangevinResult result;
  for (int k = 0; k < config.max_steps; ++k) {
    GradResult g = grad_log_target(x);
    if (!g.grad.allFinite()) throw SamplerDivergence("non-finite gradient", k);

    double eta = config.step_size;
    if (config.decay == LangevinConfig::Decay::LinearToZero)
      eta *= 1.0 - static_cast<double>(k) / static_cast<double>(config.max_steps);
    x += eta * g.grad + std::sqrt(2.0 * eta) * rng.normal_vector(n);
    result.steps = k + 1;

    if (config.convergence_check && std::isfinite(g.diagnostic)) {
      history.push_back(g.diagnostic);
      int count = static_cast<int>(history.size());
      sum_recent += g.diagnostic;
      if (count > w) {
        double moved = history[static_cast<size_t>(count - w - 1)];
        sum_recent -= moved;
        sum_previous += moved;
      }
      if (count > 2 * w) sum_previous -= history[static_cast<size_t>(count - 2 * w - 1)];
      if (count >= 2 * w) {
        double m_recent = sum_recent / w;
        double m_previous = sum_previous / w;
        if (std::abs(m_recent - m_previous) <=
            config.rel_tol * std::max(std::abs(m_previous), 1.0)) {
          result.converged_early = true;
          break;
        }
      }
    }
  }
  result.state = std::move(x);
  return result;
}

}  // namespace dime
