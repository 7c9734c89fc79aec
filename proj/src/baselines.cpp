#include "dime/baselines.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "dime/errors.hpp"
#include "dime/math_util.hpp"

namespace dime {

std::vector<double> PowerPosteriorSchedule::fixed_grid() const {
  if (n_steps < 1) throw ConfigError("power posterior: n_steps must be >= 1");
  std::vector<double> betas(static_cast<size_t>(n_steps) + 1);
  for (int k = 0; k <= n_steps; ++k) {
    double u = static_cast<double>(k) / n_steps;
    switch (kind) {
      case Kind::Linear:
        betas[static_cast<size_t>(k)] = u;
        break;
      case Kind::Exponential:
        betas[static_cast<size_t>(k)] = std::expm1(lambda * u) / std::expm1(lambda);
        break;
      case Kind::Sigmoidal: {
        auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
        double lo = sig(-0.5 * lambda), hi = sig(0.5 * lambda);
        betas[static_cast<size_t>(k)] = (sig(lambda * (u - 0.5)) - lo) / (hi - lo);
        break;
      }
      case Kind::AdaptiveCess:
        throw ConfigError("power posterior: adaptive schedule has no fixed grid");
    }
  }
  betas.front() = 0.0;
  betas.back() = 1.0;
  return betas;
}

EvidenceEstimate naive_mc(const GaussianMixturePrior& prior, const ForwardModel& model,
                          const Eigen::VectorXd& y, int n_samples, uint64_t seed) {
  if (n_samples < 1) throw ConfigError("naive_mc: n_samples must be >= 1");
  Rng rng(seed);
  std::vector<double> lls(static_cast<size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i)
    lls[static_cast<size_t>(i)] = model.log_likelihood(y, prior.sample(rng));
  EvidenceEstimate est;
  est.method = "naive_mc";
  est.point_estimate = log_sum_exp(lls) - std::log(static_cast<double>(n_samples));
  est.normalized = true;
  nlohmann::json meta;
  meta["n_samples"] = n_samples;
  meta["seed"] = seed;
  est.metadata = meta.dump();
  return est;
}

namespace {

struct SweepResult {
  double log_evidence = 0.0;       // accumulated log normalizing-constant ratios
  double ti_quadrature = 0.0;      // Σ Δβ · E_{β_prev}[log p(y|x)]
  std::vector<double> log_weights; // per-particle, meaningful when never resampled
  int n_stages = 0;
  int n_resamples = 0;
};

// One annealed sweep from β = 0 to 1 shared by TI, AIS, and SMC.
// resampling is disabled when ess_threshold <= 0.
SweepResult annealed_sweep(const GaussianMixturePrior& prior, const ForwardModel& model,
                           const Eigen::VectorXd& y, const PowerPosteriorSchedule& betas,
                           double ess_threshold, const BridgeConfig& config, uint64_t seed) {
  if (config.n_particles < 1) throw ConfigError("annealed sweep: need at least one particle");
  Rng rng(seed);
  const int M = config.n_particles;

  std::vector<Eigen::VectorXd> particles(static_cast<size_t>(M));
  for (auto& p : particles) p = prior.sample(rng);
  std::vector<double> logw(static_cast<size_t>(M), 0.0);
  std::vector<double> lls(static_cast<size_t>(M));

  std::vector<double> fixed;
  bool adaptive = betas.kind == PowerPosteriorSchedule::Kind::AdaptiveCess;
  if (!adaptive) fixed = betas.fixed_grid();

  auto normalized_weights = [&]() {
    double lse = log_sum_exp(logw);
    std::vector<double> w(static_cast<size_t>(M));
    for (int j = 0; j < M; ++j) w[static_cast<size_t>(j)] = std::exp(logw[static_cast<size_t>(j)] - lse);
    return w;
  };

  SweepResult out;
  double beta = 0.0;
  size_t stage = 0;
  while (beta < 1.0) {
    for (int j = 0; j < M; ++j)
      lls[static_cast<size_t>(j)] = model.log_likelihood(y, particles[static_cast<size_t>(j)]);

    double beta_next;
    if (adaptive) {
      // choose Δβ by bisection so the conditional ESS fraction hits the rate
      std::vector<double> w = normalized_weights();
      auto cess = [&](double db) {
        std::vector<double> num(static_cast<size_t>(M)), den(static_cast<size_t>(M));
        for (int j = 0; j < M; ++j) {
          double lw = std::log(w[static_cast<size_t>(j)]);
          num[static_cast<size_t>(j)] = lw + db * lls[static_cast<size_t>(j)];
          den[static_cast<size_t>(j)] = lw + 2.0 * db * lls[static_cast<size_t>(j)];
        }
        return std::exp(2.0 * log_sum_exp(num) - log_sum_exp(den));
      };
      double lo = 0.0, hi = 1.0 - beta;
      if (cess(hi) >= betas.adaptive_rate) {
        beta_next = 1.0;
      } else {
        for (int it = 0; it < 60; ++it) {
          double mid = 0.5 * (lo + hi);
          (cess(mid) >= betas.adaptive_rate ? lo : hi) = mid;
        }
        double db = std::max(0.5 * (lo + hi), betas.min_delta_beta);
        beta_next = std::min(beta + db, 1.0);
      }
    } else {
      ++stage;
      beta_next = stage < fixed.size() ? fixed[stage] : 1.0;
    }
    double delta = beta_next - beta;

    // TI uses the current population as E_{p_β}[log p(y|x)]
    {
      std::vector<double> w = normalized_weights();
      double expected_ll = 0.0;
      for (int j = 0; j < M; ++j)
        expected_ll += w[static_cast<size_t>(j)] * lls[static_cast<size_t>(j)];
      out.ti_quadrature += delta * expected_ll;
    }

    // reweight and accumulate the evidence increment
    double before = log_sum_exp(logw);
    for (int j = 0; j < M; ++j) logw[static_cast<size_t>(j)] += delta * lls[static_cast<size_t>(j)];
    double after = log_sum_exp(logw);
    if (!std::isfinite(after))
      throw DegenerateWeightsError("annealed sweep: all particle weights collapsed");
    out.log_evidence += after - before;

    // resample on low ESS
    if (ess_threshold > 0.0) {
      std::vector<double> w = normalized_weights();
      double sum_sq = 0.0;
      for (double wj : w) sum_sq += wj * wj;
      double ess_fraction = 1.0 / (sum_sq * M);
      if (ess_fraction < ess_threshold) {
        Eigen::VectorXd probs = Eigen::Map<Eigen::VectorXd>(w.data(), M);
        std::vector<Eigen::VectorXd> resampled(static_cast<size_t>(M));
        for (int j = 0; j < M; ++j)
          resampled[static_cast<size_t>(j)] = particles[static_cast<size_t>(rng.categorical(probs))];
        particles = std::move(resampled);
        std::fill(logw.begin(), logw.end(), 0.0);
        ++out.n_resamples;
      }
    }

    // move particles within p_{β_next} via Langevin
    for (int j = 0; j < M; ++j) {
      GradientOracle oracle = [&prior, &model, &y, beta_next](const Eigen::VectorXd& x) {
        return GradResult{prior.clean_score(x) + beta_next * model.likelihood_grad(y, x)};
      };
      particles[static_cast<size_t>(j)] =
          langevin_sample(oracle, std::move(particles[static_cast<size_t>(j)]), config.transition,
                          rng)
              .state;
    }

    beta = beta_next;
    ++out.n_stages;
  }
  out.log_weights = std::move(logw);
  return out;
}

nlohmann::json sweep_meta(const SweepResult& sweep, const BridgeConfig& config, uint64_t seed) {
  nlohmann::json meta;
  meta["n_particles"] = config.n_particles;
  meta["n_stages"] = sweep.n_stages;
  meta["n_resamples"] = sweep.n_resamples;
  meta["seed"] = seed;
  return meta;
}

}  // namespace

EvidenceEstimate thermodynamic_integration(const GaussianMixturePrior& prior,
                                           const ForwardModel& model, const Eigen::VectorXd& y,
                                           const PowerPosteriorSchedule& betas,
                                           const BridgeConfig& config, uint64_t seed) {
  SweepResult sweep = annealed_sweep(prior, model, y, betas, /*ess_threshold=*/0.6, config, seed);
  EvidenceEstimate est;
  est.method = "ti";
  est.point_estimate = sweep.ti_quadrature;
  est.normalized = true;
  est.metadata = sweep_meta(sweep, config, seed).dump();
  return est;
}

EvidenceEstimate annealed_importance_sampling(const GaussianMixturePrior& prior,
                                              const ForwardModel& model, const Eigen::VectorXd& y,
                                              const PowerPosteriorSchedule& betas,
                                              const BridgeConfig& config, uint64_t seed) {
  SweepResult sweep = annealed_sweep(prior, model, y, betas, /*ess_threshold=*/0.0, config, seed);
  EvidenceEstimate est;
  est.method = "ais";
  est.point_estimate = sweep.log_evidence;
  est.per_path_values = sweep.log_weights;  // per-particle accumulated log-weights
  est.normalized = true;
  est.metadata = sweep_meta(sweep, config, seed).dump();
  return est;
}

EvidenceEstimate sequential_monte_carlo(const GaussianMixturePrior& prior,
                                        const ForwardModel& model, const Eigen::VectorXd& y,
                                        const PowerPosteriorSchedule& betas, double ess_threshold,
                                        const BridgeConfig& config, uint64_t seed) {
  if (!(ess_threshold > 0.0 && ess_threshold <= 1.0))
    throw ConfigError("smc: ess_threshold must lie in (0, 1]");
  SweepResult sweep = annealed_sweep(prior, model, y, betas, ess_threshold, config, seed);
  EvidenceEstimate est;
  est.method = "smc";
  est.point_estimate = sweep.log_evidence;
  est.normalized = true;
  est.metadata = sweep_meta(sweep, config, seed).dump();
  return est;
}

}  // namespace dime
