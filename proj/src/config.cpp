#include "dime/config.hpp"

#include <fstream>
#include <sstream>

#include "dime/errors.hpp"
#include "dime/math_util.hpp"

namespace dime {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError("config: " + path + ": " + message);
}

const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) fail(path + "." + key, "missing required field");
  return j.at(key);
}

Eigen::VectorXd parse_vector(const json& j, int dim, const std::string& path) {
  if (j.is_number()) return Eigen::VectorXd::Constant(dim, j.get<double>());
  if (!j.is_array()) fail(path, "expected number or array");
  auto v = j.get<std::vector<double>>();
  if (dim > 0 && static_cast<int>(v.size()) != dim) fail(path, "length mismatch");
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
}

Covariance parse_covariance(const json& j, int dim, const std::string& path) {
  std::string kind = require(j, "kind", path).get<std::string>();
  if (kind == "isotropic")
    return Covariance::isotropic(dim, require(j, "variance", path).get<double>());
  if (kind == "diagonal")
    return Covariance::diagonal(parse_vector(require(j, "variances", path), dim, path));
  if (kind == "full") {
    auto rows = require(j, "matrix", path).get<std::vector<std::vector<double>>>();
    Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (size_t r = 0; r < rows.size(); ++r)
      for (size_t c = 0; c < rows[r].size(); ++c) m(static_cast<long>(r), static_cast<long>(c)) = rows[r][c];
    return Covariance::full(std::move(m));
  }
  fail(path + ".kind", "unknown covariance kind '" + kind + "'");
}

json covariance_to_json(const Covariance& cov) {
  json j;
  switch (cov.kind()) {
    case Covariance::Kind::Isotropic:
      j["kind"] = "isotropic";
      j["variance"] = cov.diagonal_vector()[0];
      break;
    case Covariance::Kind::Diagonal: {
      j["kind"] = "diagonal";
      Eigen::VectorXd d = cov.diagonal_vector();
      j["variances"] = std::vector<double>(d.data(), d.data() + d.size());
      break;
    }
    case Covariance::Kind::Full: {
      j["kind"] = "full";
      Eigen::MatrixXd m = cov.dense();
      std::vector<std::vector<double>> rows(static_cast<size_t>(m.rows()));
      for (long r = 0; r < m.rows(); ++r)
        rows[static_cast<size_t>(r)].assign(m.row(r).begin(), m.row(r).end());
      j["matrix"] = rows;
      break;
    }
  }
  return j;
}

LangevinConfig parse_langevin(const json& j, const std::string& path) {
  LangevinConfig cfg;
  cfg.step_size = require(j, "step_size", path).get<double>();
  cfg.max_steps = require(j, "max_steps", path).get<int>();
  std::string decay = j.value("decay", "linear");
  if (decay == "linear") cfg.decay = LangevinConfig::Decay::LinearToZero;
  else if (decay == "none") cfg.decay = LangevinConfig::Decay::None;
  else fail(path + ".decay", "expected 'linear' or 'none'");
  cfg.convergence_check = j.value("convergence_check", false);
  cfg.window = j.value("window", 50);
  cfg.rel_tol = j.value("rel_tol", 1e-3);
  return cfg;
}

json langevin_to_json(const LangevinConfig& cfg) {
  return json{{"step_size", cfg.step_size},
              {"max_steps", cfg.max_steps},
              {"decay", cfg.decay == LangevinConfig::Decay::LinearToZero ? "linear" : "none"},
              {"convergence_check", cfg.convergence_check},
              {"window", cfg.window},
              {"rel_tol", cfg.rel_tol}};
}

ScheduleConfig parse_schedule(const json& j, const std::string& path) {
  ScheduleConfig cfg;
  std::string kind = j.value("kind", "variance_exploding");
  if (kind == "variance_exploding") cfg.kind = ScheduleKind::VarianceExploding;
  else if (kind == "variance_preserving") cfg.kind = ScheduleKind::VariancePreserving;
  else fail(path + ".kind", "unknown schedule kind '" + kind + "'");
  cfg.sigma_min = j.value("sigma_min", 0.05);
  cfg.sigma_max = j.value("sigma_max", 80.0);
  cfg.t_min = j.value("t_min", 0.1);
  cfg.t_max = j.value("t_max", 3.0);
  return cfg;
}

json schedule_to_json(const ScheduleConfig& cfg) {
  json j;
  j["kind"] = cfg.kind == ScheduleKind::VarianceExploding ? "variance_exploding"
                                                          : "variance_preserving";
  j["sigma_min"] = cfg.sigma_min;
  j["sigma_max"] = cfg.sigma_max;
  j["t_min"] = cfg.t_min;
  j["t_max"] = cfg.t_max;
  return j;
}

GridConfig parse_grid(const json& j, const std::string& path) {
  GridConfig cfg;
  cfg.steps = j.value("steps", 100);
  std::string spacing = j.value("spacing", "polynomial");
  if (spacing == "polynomial") cfg.spacing = GridSpacing::Polynomial;
  else if (spacing == "geometric") cfg.spacing = GridSpacing::Geometric;
  else fail(path + ".spacing", "expected 'polynomial' or 'geometric'");
  cfg.rho = j.value("rho", 7.0);
  return cfg;
}

json grid_to_json(const GridConfig& cfg) {
  return json{{"steps", cfg.steps},
              {"spacing", cfg.spacing == GridSpacing::Polynomial ? "polynomial" : "geometric"},
              {"rho", cfg.rho}};
}

ForwardModelConfig parse_model(const json& j, const std::string& path) {
  ForwardModelConfig cfg;
  cfg.type = require(j, "type", path).get<std::string>();
  cfg.sigma_y = require(j, "sigma_y", path).get<double>();
  if (cfg.type == "fourier_phase_retrieval") {
    cfg.grid_shape = require(j, "grid_shape", path).get<std::vector<int>>();
  } else {
    cfg.m = require(j, "m", path).get<int>();
  }
  if (j.contains("matrix_seed")) cfg.matrix_seed = j["matrix_seed"].get<uint64_t>();
  return cfg;
}

json model_to_json(const ForwardModelConfig& cfg) {
  json j;
  j["type"] = cfg.type;
  j["sigma_y"] = cfg.sigma_y;
  if (cfg.type == "fourier_phase_retrieval") j["grid_shape"] = cfg.grid_shape;
  else j["m"] = cfg.m;
  if (cfg.matrix_seed) j["matrix_seed"] = *cfg.matrix_seed;
  return j;
}

EmpiricalConfig parse_empirical(const json& j, const std::string& path) {
  EmpiricalConfig cfg;
  std::string repr = j.value("representation", "diagonal");
  if (repr == "isotropic") cfg.representation = Covariance::Kind::Isotropic;
  else if (repr == "diagonal") cfg.representation = Covariance::Kind::Diagonal;
  else if (repr == "full") cfg.representation = Covariance::Kind::Full;
  else fail(path + ".representation", "unknown representation '" + repr + "'");
  cfg.jitter = j.value("jitter", 1e-2);
  return cfg;
}

json empirical_to_json(const EmpiricalConfig& cfg) {
  const char* repr = cfg.representation == Covariance::Kind::Isotropic  ? "isotropic"
                     : cfg.representation == Covariance::Kind::Diagonal ? "diagonal"
                                                                        : "full";
  return json{{"representation", repr}, {"jitter", cfg.jitter}};
}

GroundTruthConfig parse_ground_truth(const json& j, const std::string& path) {
  GroundTruthConfig cfg;
  std::string placement = j.value("placement", "in-distribution");
  using P = GroundTruthConfig::Placement;
  if (placement == "in-distribution") cfg.placement = P::InDistribution;
  else if (placement == "out-of-distribution") cfg.placement = P::OutOfDistribution;
  else if (placement == "saddle") cfg.placement = P::Saddle;
  else if (placement == "explicit") cfg.placement = P::Explicit;
  else fail(path + ".placement", "unknown placement '" + placement + "'");
  cfg.in_dist_scale = j.value("in_dist_scale", 0.5);
  cfg.ood_distance = j.value("ood_distance", 4.0);
  if (cfg.placement == P::Explicit)
    cfg.explicit_vector = parse_vector(require(j, "vector", path), 0, path + ".vector");
  return cfg;
}

json ground_truth_to_json(const GroundTruthConfig& cfg) {
  using P = GroundTruthConfig::Placement;
  json j;
  j["placement"] = cfg.placement == P::InDistribution    ? "in-distribution"
                   : cfg.placement == P::OutOfDistribution ? "out-of-distribution"
                   : cfg.placement == P::Saddle            ? "saddle"
                                                           : "explicit";
  j["in_dist_scale"] = cfg.in_dist_scale;
  j["ood_distance"] = cfg.ood_distance;
  if (cfg.placement == P::Explicit)
    j["vector"] = std::vector<double>(cfg.explicit_vector.data(),
                                      cfg.explicit_vector.data() + cfg.explicit_vector.size());
  return j;
}

PowerPosteriorSchedule parse_betas(const json& j, const std::string& path) {
  PowerPosteriorSchedule b;
  std::string kind = j.value("kind", "exponential");
  using K = PowerPosteriorSchedule::Kind;
  if (kind == "linear") b.kind = K::Linear;
  else if (kind == "exponential") b.kind = K::Exponential;
  else if (kind == "sigmoidal") b.kind = K::Sigmoidal;
  else if (kind == "adaptive_cess") b.kind = K::AdaptiveCess;
  else fail(path + ".kind", "unknown beta schedule kind '" + kind + "'");
  b.n_steps = j.value("steps", 100);
  b.lambda = j.value("lambda", 6.0);
  b.adaptive_rate = j.value("rate", 0.6);
  b.min_delta_beta = j.value("min_delta_beta", 0.002);
  return b;
}

json betas_to_json(const PowerPosteriorSchedule& b) {
  using K = PowerPosteriorSchedule::Kind;
  json j;
  j["kind"] = b.kind == K::Linear        ? "linear"
              : b.kind == K::Exponential ? "exponential"
              : b.kind == K::Sigmoidal   ? "sigmoidal"
                                         : "adaptive_cess";
  j["steps"] = b.n_steps;
  j["lambda"] = b.lambda;
  j["rate"] = b.adaptive_rate;
  j["min_delta_beta"] = b.min_delta_beta;
  return j;
}

EstimatorConfig parse_estimator(const json& j, const std::string& path) {
  EstimatorConfig cfg;
  cfg.method = require(j, "method", path).get<std::string>();
  cfg.label = j.value("label", cfg.method);

  if (cfg.method == "dime" || cfg.method == "dime_tilted") {
    std::string mode = j.value("mode", "gaussian_approx");
    if (mode == "gaussian_approx") cfg.mode = DapsMode::GaussianApprox;
    else if (mode == "exact") cfg.mode = DapsMode::Exact;
    else fail(path + ".mode", "expected 'gaussian_approx' or 'exact'");
    std::string cov = j.value("covariance", "lemma2");
    if (cov == "lemma2") cfg.covariance = CovarianceSource::Lemma2;
    else if (cov == "heuristic") cfg.covariance = CovarianceSource::Heuristic;
    else fail(path + ".covariance", "expected 'lemma2' or 'heuristic'");
    std::string sel = j.value("selection", "auto");
    if (sel == "auto") cfg.selection = ScoreSelection::Auto;
    else if (sel == "high") cfg.selection = ScoreSelection::ForceHigh;
    else if (sel == "low") cfg.selection = ScoreSelection::ForceLow;
    else fail(path + ".selection", "expected 'auto', 'high' or 'low'");
    cfg.use_true_clean_score = j.value("use_true_clean_score", false);
    if (j.contains("langevin")) cfg.langevin = parse_langevin(j["langevin"], path + ".langevin");
    std::string constant = j.value("constant", "analytic");
    if (constant == "unnormalized") cfg.constant_mode = TiltedConstant::Mode::Unnormalized;
    else if (constant == "analytic") cfg.constant_mode = TiltedConstant::Mode::Analytic;
    else if (constant == "monte_carlo") cfg.constant_mode = TiltedConstant::Mode::MonteCarlo;
    else fail(path + ".constant", "expected 'unnormalized', 'analytic' or 'monte_carlo'");
    cfg.constant_mc_samples = j.value("constant_mc_samples", 10000);
  } else if (cfg.method == "naive_mc") {
    cfg.n_samples = j.value("n_samples", 1000);
  } else if (cfg.method == "ti" || cfg.method == "ais" || cfg.method == "smc") {
    if (j.contains("beta_schedule")) cfg.betas = parse_betas(j["beta_schedule"], path + ".beta_schedule");
    cfg.bridge.n_particles = j.value("particles", 20);
    if (j.contains("transition"))
      cfg.bridge.transition = parse_langevin(j["transition"], path + ".transition");
    cfg.ess_threshold = j.value("ess_threshold", 0.6);
  } else {
    fail(path + ".method", "unknown method '" + cfg.method + "'");
  }
  return cfg;
}

json estimator_to_json(const EstimatorConfig& cfg) {
  json j;
  j["method"] = cfg.method;
  j["label"] = cfg.label;
  if (cfg.method == "dime" || cfg.method == "dime_tilted") {
    j["mode"] = cfg.mode == DapsMode::GaussianApprox ? "gaussian_approx" : "exact";
    j["covariance"] = cfg.covariance == CovarianceSource::Lemma2 ? "lemma2" : "heuristic";
    j["selection"] = cfg.selection == ScoreSelection::Auto        ? "auto"
                     : cfg.selection == ScoreSelection::ForceHigh ? "high"
                                                                  : "low";
    j["use_true_clean_score"] = cfg.use_true_clean_score;
    j["langevin"] = langevin_to_json(cfg.langevin);
    j["constant"] = cfg.constant_mode == TiltedConstant::Mode::Unnormalized ? "unnormalized"
                    : cfg.constant_mode == TiltedConstant::Mode::Analytic   ? "analytic"
                                                                            : "monte_carlo";
    j["constant_mc_samples"] = cfg.constant_mc_samples;
  } else if (cfg.method == "naive_mc") {
    j["n_samples"] = cfg.n_samples;
  } else {
    j["beta_schedule"] = betas_to_json(cfg.betas);
    j["particles"] = cfg.bridge.n_particles;
    j["transition"] = langevin_to_json(cfg.bridge.transition);
    j["ess_threshold"] = cfg.ess_threshold;
  }
  return j;
}

}  // namespace

NoiseSchedule ScheduleConfig::build() const {
  if (kind == ScheduleKind::VarianceExploding)
    return NoiseSchedule::variance_exploding(sigma_min, sigma_max);
  return NoiseSchedule::variance_preserving(t_min, t_max);
}

GaussianMixturePrior build_prior(const nlohmann::json& spec) {
  int dim = require(spec, "dim", "prior").get<int>();
  const json& comps = require(spec, "components", "prior");
  if (!comps.is_array() || comps.empty()) fail("prior.components", "expected non-empty array");
  Eigen::VectorXd weights(comps.size());
  std::vector<Eigen::VectorXd> means;
  std::vector<Covariance> covs;
  for (size_t k = 0; k < comps.size(); ++k) {
    std::string path = "prior.components[" + std::to_string(k) + "]";
    const json& c = comps[k];
    weights[static_cast<long>(k)] = require(c, "weight", path).get<double>();
    means.push_back(parse_vector(require(c, "mean", path), dim, path + ".mean"));
    covs.push_back(parse_covariance(require(c, "covariance", path), dim, path + ".covariance"));
  }
  return GaussianMixturePrior(weights, std::move(means), std::move(covs));
}

nlohmann::json prior_to_json(const GaussianMixturePrior& prior) {
  json j;
  j["dim"] = prior.dim();
  json comps = json::array();
  for (int k = 0; k < prior.n_components(); ++k) {
    json c;
    c["weight"] = prior.weights()[k];
    const Eigen::VectorXd& mu = prior.mean(k);
    c["mean"] = std::vector<double>(mu.data(), mu.data() + mu.size());
    c["covariance"] = covariance_to_json(prior.covariance(k));
    comps.push_back(std::move(c));
  }
  j["components"] = std::move(comps);
  return j;
}

ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.name = j.value("name", "experiment");
  cfg.master_seed = require(j, "seed", "").get<uint64_t>();
  cfg.prior_json = require(j, "prior", "");
  build_prior(cfg.prior_json);  // validate now, fail early
  cfg.model = parse_model(require(j, "forward_model", ""), "forward_model");
  if (j.contains("schedule")) cfg.schedule = parse_schedule(j["schedule"], "schedule");
  if (j.contains("grid")) cfg.grid = parse_grid(j["grid"], "grid");
  if (j.contains("empirical")) cfg.empirical = parse_empirical(j["empirical"], "empirical");
  if (j.contains("ground_truth"))
    cfg.ground_truth = parse_ground_truth(j["ground_truth"], "ground_truth");
  cfg.n_trials = j.value("n_trials", 1);
  cfg.n_paths = j.value("n_paths", 20);
  cfg.keep_states = j.value("keep_states", true);
  if (cfg.n_trials < 1) fail("n_trials", "must be >= 1");
  if (cfg.n_paths < 1) fail("n_paths", "must be >= 1");
  const json& ests = require(j, "estimators", "");
  if (!ests.is_array() || ests.empty()) fail("estimators", "expected non-empty array");
  for (size_t i = 0; i < ests.size(); ++i)
    cfg.estimators.push_back(parse_estimator(ests[i], "estimators[" + std::to_string(i) + "]"));
  for (size_t i = 0; i < cfg.estimators.size(); ++i)
    for (size_t k = i + 1; k < cfg.estimators.size(); ++k)
      if (cfg.estimators[i].label == cfg.estimators[k].label)
        fail("estimators", "duplicate label '" + cfg.estimators[i].label + "'");
  if (j.contains("output")) {
    cfg.output_path = j["output"].value("path", "");
    cfg.csv_path = j["output"].value("csv", "");
    cfg.include_timings = j["output"].value("include_timings", false);
  }
  return cfg;
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["seed"] = c.master_seed;
  j["prior"] = c.prior_json;
  j["forward_model"] = model_to_json(c.model);
  j["schedule"] = schedule_to_json(c.schedule);
  j["grid"] = grid_to_json(c.grid);
  j["empirical"] = empirical_to_json(c.empirical);
  j["ground_truth"] = ground_truth_to_json(c.ground_truth);
  j["n_trials"] = c.n_trials;
  j["n_paths"] = c.n_paths;
  j["keep_states"] = c.keep_states;
  json ests = json::array();
  for (const auto& e : c.estimators) ests.push_back(estimator_to_json(e));
  j["estimators"] = std::move(ests);
  json out;
  out["path"] = c.output_path;
  out["csv"] = c.csv_path;
  out["include_timings"] = c.include_timings;
  j["output"] = std::move(out);
  return j;
}

ConfusionConfig parse_confusion_config(const nlohmann::json& j) {
  ConfusionConfig cfg;
  cfg.name = j.value("name", "confusion");
  cfg.master_seed = require(j, "seed", "").get<uint64_t>();
  const json& priors = require(j, "priors", "");
  if (!priors.is_array() || priors.size() < 2) fail("priors", "expected at least two priors");
  for (const auto& p : priors) {
    build_prior(p);
    cfg.prior_jsons.push_back(p);
  }
  cfg.model = parse_model(require(j, "forward_model", ""), "forward_model");
  if (j.contains("schedule")) cfg.schedule = parse_schedule(j["schedule"], "schedule");
  if (j.contains("grid")) cfg.grid = parse_grid(j["grid"], "grid");
  if (j.contains("empirical")) cfg.empirical = parse_empirical(j["empirical"], "empirical");
  cfg.n_measurements_per_prior = j.value("n_measurements_per_prior", 10);
  cfg.n_paths = j.value("n_paths", 20);
  cfg.keep_states = j.value("keep_states", false);
  cfg.estimator = parse_estimator(require(j, "estimator", ""), "estimator");
  if (cfg.estimator.method != "dime") fail("estimator.method", "confusion runs use 'dime'");
  if (j.contains("output")) {
    cfg.output_path = j["output"].value("path", "");
    cfg.csv_path = j["output"].value("csv", "");
  }
  return cfg;
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return j;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

std::string config_hash(const nlohmann::json& j) {
  std::string dump = j.dump();
  uint64_t h = fnv1a_bytes(dump.data(), dump.size());
  std::ostringstream ss;
  ss << std::hex << h;
  return ss.str();
}

}  // namespace dime
