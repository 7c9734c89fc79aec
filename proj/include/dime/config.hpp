#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dime/baselines.hpp"
#include "dime/daps.hpp"
#include "dime/estimators.hpp"
#include "dime/gmm.hpp"
#include "dime/schedule.hpp"

namespace dime {

struct ScheduleConfig {
  ScheduleKind kind = ScheduleKind::VarianceExploding;
  double sigma_min = 0.05;
  double sigma_max = 80.0;
  double t_min = 0.1;  // variance-preserving only
  double t_max = 3.0;

  NoiseSchedule build() const;
};

struct GridConfig {
  int steps = 100;
  GridSpacing spacing = GridSpacing::Polynomial;
  double rho = 7.0;
};

struct ForwardModelConfig {
  std::string type = "linear_gaussian";  // | gaussian_phase_retrieval | fourier_phase_retrieval
  int m = 0;
  double sigma_y = 0.1;
  std::vector<int> grid_shape;             // fourier only
  std::optional<uint64_t> matrix_seed;     // default: derived from the master seed
};

struct EmpiricalConfig {
  Covariance::Kind representation = Covariance::Kind::Diagonal;
  double jitter = 1e-2;
};

struct GroundTruthConfig {
  enum class Placement { InDistribution, OutOfDistribution, Saddle, Explicit };
  Placement placement = Placement::InDistribution;
  double in_dist_scale = 0.5;   // fraction of a component draw added to its mean
  double ood_distance = 4.0;    // prior standard deviations along a random direction
  Eigen::VectorXd explicit_vector;
};

struct EstimatorConfig {
  std::string method;  // dime | dime_tilted | naive_mc | ti | ais | smc
  std::string label;   // result key; defaults to method

  // dime / dime_tilted
  DapsMode mode = DapsMode::GaussianApprox;
  CovarianceSource covariance = CovarianceSource::Lemma2;
  ScoreSelection selection = ScoreSelection::Auto;
  bool use_true_clean_score = false;
  LangevinConfig langevin{.step_size = 5e-4, .max_steps = 2000};
  TiltedConstant::Mode constant_mode = TiltedConstant::Mode::Analytic;
  int constant_mc_samples = 10000;

  // naive_mc
  int n_samples = 1000;

  // ti / ais / smc
  PowerPosteriorSchedule betas;
  BridgeConfig bridge;
  double ess_threshold = 0.6;
};

struct ExperimentConfig {
  std::string name;
  uint64_t master_seed = 0;
  nlohmann::json prior_json;
  ForwardModelConfig model;
  ScheduleConfig schedule;
  GridConfig grid;
  EmpiricalConfig empirical;
  GroundTruthConfig ground_truth;
  int n_trials = 1;
  int n_paths = 20;
  bool keep_states = true;
  std::vector<EstimatorConfig> estimators;
  std::string output_path;
  std::string csv_path;
  bool include_timings = false;
};

struct ConfusionConfig {
  std::string name;
  uint64_t master_seed = 0;
  std::vector<nlohmann::json> prior_jsons;
  ForwardModelConfig model;
  ScheduleConfig schedule;
  GridConfig grid;
  EmpiricalConfig empirical;
  int n_measurements_per_prior = 10;
  int n_paths = 20;
  bool keep_states = false;
  EstimatorConfig estimator;  // a dime entry
  std::string output_path;
  std::string csv_path;
};

GaussianMixturePrior build_prior(const nlohmann::json& spec);
nlohmann::json prior_to_json(const GaussianMixturePrior& prior);

ExperimentConfig parse_experiment_config(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& c);
ConfusionConfig parse_confusion_config(const nlohmann::json& j);

nlohmann::json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

std::string config_hash(const nlohmann::json& j);

}  // namespace dime
