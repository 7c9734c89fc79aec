#include "dime/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "dime/baselines.hpp"
#include "dime/daps.hpp"
#include "dime/errors.hpp"
#include "dime/math_util.hpp"
#include "dime/parallel.hpp"
#include "dime/pnpdm.hpp"
#include "dime/quadrature.hpp"

namespace dime {

namespace {

using nlohmann::json;

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

struct ExperimentObjects {
  GaussianMixturePrior prior;
  std::unique_ptr<ForwardModel> model;
  NoiseSchedule schedule;
  AnnealingGrid grid;
  EmpiricalGaussian empirical;
  Measurement measurement;
};

ExperimentObjects materialize(const ExperimentConfig& cfg) {
  GaussianMixturePrior prior = build_prior(cfg.prior_json);
  auto model = build_forward_model(cfg.model, prior.dim(), cfg.master_seed);
  NoiseSchedule schedule = cfg.schedule.build();
  AnnealingGrid grid = make_grid(schedule, cfg.grid.steps, cfg.grid.spacing, cfg.grid.rho);
  EmpiricalGaussian empirical =
      EmpiricalGaussian::from_mixture(prior, cfg.empirical.representation, cfg.empirical.jitter);

  Eigen::VectorXd x_star = place_ground_truth(cfg.ground_truth, prior, cfg.master_seed);
  uint64_t meas_seed = derive_seed(cfg.master_seed, "measurement");
  Rng rng(meas_seed);
  Measurement meas = model->simulate(x_star, rng);
  meas.meta.seed = meas_seed;

  return {std::move(prior), std::move(model), schedule, std::move(grid), std::move(empirical),
          std::move(meas)};
}

json enrich_metadata(const EvidenceEstimate& est, const ExperimentConfig& cfg,
                     const std::string& label) {
  json meta = est.metadata.empty() ? json::object() : json::parse(est.metadata);
  meta["master_seed"] = cfg.master_seed;
  meta["label"] = label;
  meta["n_trials"] = cfg.n_trials;
  return meta;
}

EvidenceEstimate run_path_method(const ExperimentConfig& cfg, const EstimatorConfig& est,
                                 const ExperimentObjects& objs) {
  const int trials = cfg.n_trials, paths = cfg.n_paths;
  std::vector<std::vector<SamplePathRecord>> records(
      static_cast<size_t>(trials), std::vector<SamplePathRecord>(static_cast<size_t>(paths)));

  if (est.method == "dime") {
    DapsConfig daps_cfg;
    daps_cfg.mode = est.mode;
    daps_cfg.covariance = est.covariance;
    daps_cfg.langevin = est.langevin;
    daps_cfg.use_true_clean_score = est.use_true_clean_score;
    daps_cfg.keep_states = cfg.keep_states;
    parallel_for(trials * paths, [&](int idx) {
      int trial = idx / paths, path = idx % paths;
      uint64_t seed = experiment_path_seed(cfg.master_seed, est.label, trial, path);
      records[static_cast<size_t>(trial)][static_cast<size_t>(path)] =
          daps_run(*objs.model, objs.measurement.y, objs.prior, objs.empirical, objs.schedule,
                   objs.grid, daps_cfg, seed);
    });
    std::vector<EvidenceEstimate> per_trial;
    for (int t = 0; t < trials; ++t) {
      per_trial.push_back(dime_evidence(records[static_cast<size_t>(t)], objs.schedule, objs.grid,
                                        est.selection));
    }
    return combine_trials(per_trial);
  }

  // dime_tilted
  PnpDmConfig pnp_cfg;
  pnp_cfg.langevin = est.langevin;
  pnp_cfg.keep_states = cfg.keep_states;
  parallel_for(trials * paths, [&](int idx) {
    int trial = idx / paths, path = idx % paths;
    uint64_t seed = experiment_path_seed(cfg.master_seed, est.label, trial, path);
    records[static_cast<size_t>(trial)][static_cast<size_t>(path)] =
        pnpdm_run(*objs.model, objs.measurement.y, objs.prior, objs.schedule, objs.grid, pnp_cfg,
                  seed);
  });

  TiltedConstant constant;
  constant.mode = est.constant_mode;
  if (constant.mode == TiltedConstant::Mode::Analytic) {
    const auto* linear = dynamic_cast<const LinearGaussianModel*>(objs.model.get());
    if (!linear)
      throw ConfigError("dime_tilted: analytic constant requires a linear-Gaussian model");
    constant.analytic_value =
        analytic_tilted_constant(*linear, objs.schedule, objs.measurement.y);
  } else if (constant.mode == TiltedConstant::Mode::MonteCarlo) {
    constant.mc_samples = est.constant_mc_samples;
    constant.mc_seed = derive_seed(cfg.master_seed, "tilted_constant");
  }
  std::vector<EvidenceEstimate> per_trial;
  for (int t = 0; t < trials; ++t) {
    per_trial.push_back(dime_tilted(records[static_cast<size_t>(t)], objs.schedule, objs.grid,
                                    *objs.model, objs.measurement.y, constant));
  }
  return combine_trials(per_trial);
}

EvidenceEstimate run_one_estimator(const ExperimentConfig& cfg, const EstimatorConfig& est,
                                   const ExperimentObjects& objs) {
  if (est.method == "dime" || est.method == "dime_tilted") return run_path_method(cfg, est, objs);

  std::vector<EvidenceEstimate> per_trial(static_cast<size_t>(cfg.n_trials));
  parallel_for(cfg.n_trials, [&](int trial) {
    uint64_t seed = derive_seed(cfg.master_seed, "estimator_trial",
                                {tag_hash(est.label), static_cast<uint64_t>(trial)});
    if (est.method == "naive_mc") {
      per_trial[static_cast<size_t>(trial)] =
          naive_mc(objs.prior, *objs.model, objs.measurement.y, est.n_samples, seed);
    } else if (est.method == "ti") {
      per_trial[static_cast<size_t>(trial)] = thermodynamic_integration(
          objs.prior, *objs.model, objs.measurement.y, est.betas, est.bridge, seed);
    } else if (est.method == "ais") {
      per_trial[static_cast<size_t>(trial)] = annealed_importance_sampling(
          objs.prior, *objs.model, objs.measurement.y, est.betas, est.bridge, seed);
    } else {
      per_trial[static_cast<size_t>(trial)] =
          sequential_monte_carlo(objs.prior, *objs.model, objs.measurement.y, est.betas,
                                 est.ess_threshold, est.bridge, seed);
    }
  });
  return combine_trials(per_trial);
}

}  // namespace

uint64_t experiment_path_seed(uint64_t master_seed, const std::string& label, int trial,
                              int path) {
  uint64_t s = derive_seed(master_seed, "estimator_path");
  s = seed_combine(s, tag_hash(label));
  s = seed_combine(s, static_cast<uint64_t>(trial));
  s = seed_combine(s, static_cast<uint64_t>(path));
  return s;
}

std::unique_ptr<ForwardModel> build_forward_model(const ForwardModelConfig& cfg, int state_dim,
                                                  uint64_t master_seed) {
  uint64_t seed = cfg.matrix_seed.value_or(derive_seed(master_seed, "forward_model"));
  Rng rng(seed);
  if (cfg.type == "linear_gaussian") {
    return std::make_unique<LinearGaussianModel>(
        LinearGaussianModel::random(cfg.m, state_dim, cfg.sigma_y, rng));
  }
  if (cfg.type == "gaussian_phase_retrieval") {
    return std::make_unique<GaussianPhaseRetrievalModel>(cfg.m, state_dim, cfg.sigma_y, rng);
  }
  if (cfg.type == "fourier_phase_retrieval") {
    int n = 1;
    for (int s : cfg.grid_shape) n *= s;
    if (n != state_dim)
      throw ConfigError("forward_model: fourier grid shape does not match prior dimension");
    return std::make_unique<FourierPhaseRetrievalModel>(cfg.grid_shape, cfg.sigma_y);
  }
  throw ConfigError("forward_model: unknown type '" + cfg.type + "'");
}

Eigen::VectorXd place_ground_truth(const GroundTruthConfig& cfg, const GaussianMixturePrior& prior,
                                   uint64_t master_seed) {
  using P = GroundTruthConfig::Placement;
  Rng rng(derive_seed(master_seed, "ground_truth"));
  switch (cfg.placement) {
    case P::Saddle:
      return Eigen::VectorXd::Zero(prior.dim());
    case P::Explicit: {
      if (cfg.explicit_vector.size() != prior.dim())
        throw ConfigError("ground_truth: explicit vector dimension mismatch");
      return cfg.explicit_vector;
    }
    case P::InDistribution: {
      // a component mean plus a scaled within-component draw
      int k = rng.categorical(prior.weights());
      return prior.mean(k) + cfg.in_dist_scale * prior.covariance(k).sample(rng);
    }
    case P::OutOfDistribution: {
      // several prior standard deviations along a random direction
      Eigen::VectorXd u = rng.normal_vector(prior.dim()).normalized();
      double sd = std::sqrt(prior.direction_variance(u));
      return prior.mixture_mean() + cfg.ood_distance * sd * u;
    }
  }
  throw ConfigError("ground_truth: unknown placement");
}

ResultBundle run_experiment(const ExperimentConfig& cfg) {
  ExperimentObjects objs = materialize(cfg);

  ResultBundle bundle;
  bundle.config_json = experiment_config_to_json(cfg);
  bundle.config_hash = config_hash(bundle.config_json);
  bundle.measurement = objs.measurement;

  if (cfg.model.type == "linear_gaussian") {
    const auto& linear = dynamic_cast<const LinearGaussianModel&>(*objs.model);
    bundle.ground_truth =
        analytic_evidence_linear(objs.prior, linear.matrix(), linear.sigma_y(), objs.measurement.y);
  } else if (objs.prior.dim() <= 3) {
    try {
      bundle.ground_truth = quadrature_evidence_oracle(objs.prior, *objs.model, objs.measurement.y);
    } catch (const std::exception&) {
      // no oracle for this configuration
    }
  }

  for (const auto& est : cfg.estimators) {
    auto start = std::chrono::steady_clock::now();
    try {
      EvidenceEstimate result = run_one_estimator(cfg, est, objs);
      result.method = est.label;
      result.metadata = enrich_metadata(result, cfg, est.label).dump();
      if (bundle.ground_truth && result.normalized) {
        bundle.relative_errors[est.label] =
            std::abs(result.point_estimate - *bundle.ground_truth) / std::abs(*bundle.ground_truth);
      }
      bundle.methods.push_back(std::move(result));
    } catch (const std::exception& e) {
      bundle.method_errors[est.label] = e.what();
    }
    bundle.wall_clock_ms[est.label] = elapsed_ms(start);
  }

  if (!cfg.output_path.empty())
    write_json_file(cfg.output_path, bundle_to_json(bundle, cfg.include_timings));
  if (!cfg.csv_path.empty()) write_bundle_csv(cfg.csv_path, bundle);
  return bundle;
}

json bundle_to_json(const ResultBundle& bundle, bool include_timings) {
  json j;
  j["config_hash"] = bundle.config_hash;
  j["config"] = bundle.config_json;
  json meas;
  meas["y"] = std::vector<double>(bundle.measurement.y.data(),
                                  bundle.measurement.y.data() + bundle.measurement.y.size());
  meas["model"] = bundle.measurement.meta.model_kind;
  meas["m"] = bundle.measurement.meta.m;
  meas["n"] = bundle.measurement.meta.n;
  meas["sigma_y"] = bundle.measurement.meta.sigma_y;
  meas["seed"] = bundle.measurement.meta.seed;
  if (bundle.measurement.x_star) {
    meas["x_star"] = std::vector<double>(
        bundle.measurement.x_star->data(),
        bundle.measurement.x_star->data() + bundle.measurement.x_star->size());
  }
  j["measurement"] = std::move(meas);
  j["ground_truth_evidence"] =
      bundle.ground_truth ? json(*bundle.ground_truth) : json(nullptr);
  json methods = json::object();
  for (const auto& m : bundle.methods) methods[m.method] = evidence_to_json(m);
  j["methods"] = std::move(methods);
  j["relative_errors"] = bundle.relative_errors;
  j["errors"] = bundle.method_errors;
  if (include_timings) j["wall_clock_ms"] = bundle.wall_clock_ms;
  return j;
}

void write_bundle_csv(const std::string& path, const ResultBundle& bundle) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.precision(17);
  out << "method,trial,estimate\n";
  for (const auto& m : bundle.methods) {
    if (m.per_trial_values) {
      for (size_t t = 0; t < m.per_trial_values->size(); ++t)
        out << m.method << "," << t << "," << (*m.per_trial_values)[t] << "\n";
    } else {
      out << m.method << ",0," << m.point_estimate << "\n";
    }
  }
}

ConfusionResult run_confusion_matrix(const ConfusionConfig& cfg) {
  const int G = static_cast<int>(cfg.prior_jsons.size());
  const int I = cfg.n_measurements_per_prior;
  const int P = cfg.n_paths;

  std::vector<GaussianMixturePrior> priors;
  priors.reserve(static_cast<size_t>(G));
  for (const auto& pj : cfg.prior_jsons) priors.push_back(build_prior(pj));
  for (const auto& p : priors)
    if (p.dim() != priors[0].dim()) throw ConfigError("confusion: priors must share one dimension");

  auto model = build_forward_model(cfg.model, priors[0].dim(), cfg.master_seed);
  NoiseSchedule schedule = cfg.schedule.build();
  AnnealingGrid grid = make_grid(schedule, cfg.grid.steps, cfg.grid.spacing, cfg.grid.rho);
  std::vector<EmpiricalGaussian> empiricals;
  for (const auto& p : priors)
    empiricals.push_back(
        EmpiricalGaussian::from_mixture(p, cfg.empirical.representation, cfg.empirical.jitter));

  DapsConfig daps_cfg;
  daps_cfg.mode = cfg.estimator.mode;
  daps_cfg.covariance = cfg.estimator.covariance;
  daps_cfg.langevin = cfg.estimator.langevin;
  daps_cfg.use_true_clean_score = cfg.estimator.use_true_clean_score;
  daps_cfg.keep_states = cfg.keep_states;

  // one measurement per (generating prior, index), shared across candidates
  std::vector<Measurement> measurements(static_cast<size_t>(G * I));
  for (int g = 0; g < G; ++g)
    for (int i = 0; i < I; ++i) {
      Rng truth_rng(derive_seed(cfg.master_seed, "confusion_truth",
                                {static_cast<uint64_t>(g), static_cast<uint64_t>(i)}));
      Eigen::VectorXd x_star = priors[static_cast<size_t>(g)].sample(truth_rng);
      Rng meas_rng(derive_seed(cfg.master_seed, "confusion_measurement",
                               {static_cast<uint64_t>(g), static_cast<uint64_t>(i)}));
      measurements[static_cast<size_t>(g * I + i)] = model->simulate(x_star, meas_rng);
    }

  // flatten (g, i, c) cells; paths within a cell run inside the task
  struct CellTask {
    int g, i, c;
  };
  std::vector<CellTask> tasks;
  for (int g = 0; g < G; ++g)
    for (int i = 0; i < I; ++i)
      for (int c = 0; c < G; ++c) tasks.push_back({g, i, c});
  std::vector<double> estimates(tasks.size());

  parallel_for(static_cast<int>(tasks.size()), [&](int idx) {
    const CellTask& task = tasks[static_cast<size_t>(idx)];
    const Measurement& meas = measurements[static_cast<size_t>(task.g * I + task.i)];
    std::vector<SamplePathRecord> records(static_cast<size_t>(P));
    for (int p = 0; p < P; ++p) {
      uint64_t seed = derive_seed(cfg.master_seed, "confusion_path",
                                  {static_cast<uint64_t>(task.g), static_cast<uint64_t>(task.i),
                                   static_cast<uint64_t>(task.c), static_cast<uint64_t>(p)});
      records[static_cast<size_t>(p)] =
          daps_run(*model, meas.y, priors[static_cast<size_t>(task.c)],
                   empiricals[static_cast<size_t>(task.c)], schedule, grid, daps_cfg, seed);
    }
    estimates[static_cast<size_t>(idx)] =
        dime_evidence(records, schedule, grid, cfg.estimator.selection).point_estimate;
  });

  ConfusionResult result;
  result.n_priors = G;
  result.n_measurements_per_prior = I;
  result.matrix.assign(static_cast<size_t>(G), std::vector<double>(static_cast<size_t>(G), 0.0));

  const auto* linear = dynamic_cast<const LinearGaussianModel*>(model.get());
  for (size_t idx = 0; idx < tasks.size(); ++idx) {
    const CellTask& task = tasks[idx];
    ConfusionCell cell;
    cell.generating_prior = task.g;
    cell.measurement_index = task.i;
    cell.candidate_prior = task.c;
    cell.estimate = estimates[idx];
    const Measurement& meas = measurements[static_cast<size_t>(task.g * I + task.i)];
    if (linear) {
      cell.analytic = analytic_evidence_linear(priors[static_cast<size_t>(task.c)],
                                               linear->matrix(), linear->sigma_y(), meas.y);
    }
    result.matrix[static_cast<size_t>(task.g)][static_cast<size_t>(task.c)] +=
        estimates[idx] / static_cast<double>(I);
    result.cells.push_back(std::move(cell));
  }

  // per-measurement argmax over candidates
  for (int g = 0; g < G; ++g)
    for (int i = 0; i < I; ++i) {
      int best = 0;
      double best_val = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < G; ++c) {
        double v = estimates[static_cast<size_t>((g * I + i) * G + c)];
        if (v > best_val) {
          best_val = v;
          best = c;
        }
      }
      ++result.total_selections;
      if (best == g) ++result.correct_selections;
    }
  for (int g = 0; g < G; ++g) {
    const auto& row = result.matrix[static_cast<size_t>(g)];
    result.row_argmax.push_back(static_cast<int>(
        std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return result;
}

json confusion_to_json(const ConfusionResult& r) {
  json j;
  j["n_priors"] = r.n_priors;
  j["n_measurements_per_prior"] = r.n_measurements_per_prior;
  j["matrix"] = r.matrix;
  j["row_argmax"] = r.row_argmax;
  j["correct_selections"] = r.correct_selections;
  j["total_selections"] = r.total_selections;
  json cells = json::array();
  for (const auto& c : r.cells) {
    json cj;
    cj["generating"] = c.generating_prior;
    cj["measurement"] = c.measurement_index;
    cj["candidate"] = c.candidate_prior;
    cj["estimate"] = c.estimate;
    if (c.analytic) cj["analytic"] = *c.analytic;
    cells.push_back(std::move(cj));
  }
  j["cells"] = std::move(cells);
  return j;
}

void write_confusion_csv(const std::string& path, const ConfusionResult& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.precision(17);
  for (int g = 0; g < r.n_priors; ++g) {
    for (int c = 0; c < r.n_priors; ++c) {
      if (c > 0) out << ",";
      out << r.matrix[static_cast<size_t>(g)][static_cast<size_t>(c)];
    }
    out << "\n";
  }
}

ValidationResult validate_evidence(std::span<const double> references, double test) {
  if (references.size() < 2)
    throw ConfigError("validate: need at least two reference evidences");
  ValidationResult r;
  r.reference_mean = mean(references);
  r.reference_std = std::sqrt(population_variance(references));
  if (r.reference_std == 0.0) throw ConfigError("validate: degenerate references (zero spread)");
  r.z = (test - r.reference_mean) / r.reference_std;
  r.p = standard_normal_cdf(r.z);
  return r;
}

SamplePathRecord replay_path(const ExperimentConfig& cfg, const std::string& label, int trial,
                             int path) {
  if (trial < 0 || trial >= cfg.n_trials || path < 0 || path >= cfg.n_paths)
    throw ConfigError("replay: trial/path index out of range");
  const EstimatorConfig* est = nullptr;
  for (const auto& e : cfg.estimators)
    if (e.label == label) est = &e;
  if (!est) throw ConfigError("replay: no estimator labeled '" + label + "'");
  if (est->method != "dime" && est->method != "dime_tilted")
    throw ConfigError("replay: only path-based methods can be replayed");

  ExperimentObjects objs = materialize(cfg);
  uint64_t seed = experiment_path_seed(cfg.master_seed, label, trial, path);
  if (est->method == "dime") {
    DapsConfig daps_cfg;
    daps_cfg.mode = est->mode;
    daps_cfg.covariance = est->covariance;
    daps_cfg.langevin = est->langevin;
    daps_cfg.use_true_clean_score = est->use_true_clean_score;
    daps_cfg.keep_states = false;
    return daps_run(*objs.model, objs.measurement.y, objs.prior, objs.empirical, objs.schedule,
                    objs.grid, daps_cfg, seed);
  }
  PnpDmConfig pnp_cfg;
  pnp_cfg.langevin = est->langevin;
  pnp_cfg.keep_states = false;
  return pnpdm_run(*objs.model, objs.measurement.y, objs.prior, objs.schedule, objs.grid, pnp_cfg,
                   seed);
}

}  // namespace dime
