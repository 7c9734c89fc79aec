#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace dime {

// One annealing timestep of a sample path. Both estimator inner products are
// recorded at every timestep; estimator selection happens later, across paths.
struct PathEntry {
  double t = 0.0;
  double theta_high_prod = 0.0;
  double theta_low_prod = 0.0;
  double chi_squared = 0.0;   // reduced χ² of the first paired draw
  uint64_t state_hash = 0;    // hash of x_t, for replay verification

  // retained only when the sampler is configured to keep states
  std::optional<Eigen::VectorXd> x_t;
  std::optional<Eigen::VectorXd> draw1;
  std::optional<Eigen::VectorXd> draw2;
};

struct SamplePathRecord {
  std::vector<PathEntry> entries;  // ordered by decreasing t, one per grid timestep
  Eigen::VectorXd x0;
  double final_log_likelihood = 0.0;
  uint64_t seed = 0;
};

// Line-delimited record file: one header line per path, then one line per
// timestep with (t, state hash, inner products, χ²). Enough to re-run the
// evidence assembly offline.
void write_path_records(std::ostream& out, const std::vector<SamplePathRecord>& records);
std::vector<SamplePathRecord> read_path_records(std::istream& in);

// Per-method evidence result. `point_estimate` is the documented aggregation
// of `per_path_values` (mean for the path-integral estimators, log-mean-exp of
// particle weights for AIS). `dispersion` is the sample standard deviation
// across trials when several trials were run.
struct EvidenceEstimate {
  std::string method;
  double point_estimate = 0.0;
  std::vector<double> per_path_values;
  std::optional<std::vector<double>> per_trial_values;
  double dispersion = 0.0;
  bool normalized = true;
  std::string metadata;  // JSON text: seeds, grid size, path count, ...
};

nlohmann::json evidence_to_json(const EvidenceEstimate& e);
EvidenceEstimate evidence_from_json(const nlohmann::json& j);

// Mean/std aggregation of independent trials of the same method.
EvidenceEstimate combine_trials(const std::vector<EvidenceEstimate>& trials);

}  // namespace dime
