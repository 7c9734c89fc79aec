#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dime/config.hpp"
#include "dime/forward.hpp"
#include "dime/record.hpp"

namespace dime {

struct ResultBundle {
  std::string config_hash;
  nlohmann::json config_json;       // embedded for replay
  Measurement measurement;
  std::optional<double> ground_truth;
  std::vector<EvidenceEstimate> methods;          // keyed by estimator label
  std::map<std::string, double> relative_errors;  // |estimate − truth| / |truth|
  std::map<std::string, double> wall_clock_ms;
  std::map<std::string, std::string> method_errors;  // failures, run continues
};

nlohmann::json bundle_to_json(const ResultBundle& bundle, bool include_timings);
void write_bundle_csv(const std::string& path, const ResultBundle& bundle);

// Materializes prior/model/truth from the config, simulates the measurement
// once, runs every requested estimator with seeds derived from the master
// seed, and computes the analytic truth when available (linear-Gaussian over
// a mixture prior; quadrature for dim ≤ 3 otherwise).
ResultBundle run_experiment(const ExperimentConfig& config);

struct ConfusionCell {
  int generating_prior = 0;
  int measurement_index = 0;
  int candidate_prior = 0;
  double estimate = 0.0;
  std::optional<double> analytic;
};

struct ConfusionResult {
  int n_priors = 0;
  int n_measurements_per_prior = 0;
  std::vector<ConfusionCell> cells;
  // mean estimate over measurements, [generating][candidate]
  std::vector<std::vector<double>> matrix;
  std::vector<int> row_argmax;
  int correct_selections = 0;
  int total_selections = 0;
};

ConfusionResult run_confusion_matrix(const ConfusionConfig& config);
nlohmann::json confusion_to_json(const ConfusionResult& result);
void write_confusion_csv(const std::string& path, const ConfusionResult& result);

struct ValidationResult {
  double z = 0.0;
  double p = 0.0;
  double reference_mean = 0.0;
  double reference_std = 0.0;  // population convention (divide by n)
};

// Fits a Gaussian to the reference evidences and scores the test value.
ValidationResult validate_evidence(std::span<const double> references, double test);

// Re-executes a single sample path of a path-based method from its derived
// seed; used by the replay CLI subcommand.
SamplePathRecord replay_path(const ExperimentConfig& config, const std::string& label, int trial,
                             int path);

// Seed derivation shared by run and replay.
uint64_t experiment_path_seed(uint64_t master_seed, const std::string& label, int trial, int path);

// Construction helpers shared with the test suites.
std::unique_ptr<ForwardModel> build_forward_model(const ForwardModelConfig& cfg,
                                                  int state_dim, uint64_t master_seed);
Eigen::VectorXd place_ground_truth(const GroundTruthConfig& cfg, const GaussianMixturePrior& prior,
                                   uint64_t master_seed);

}  // namespace dime
