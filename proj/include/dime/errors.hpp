#pragma once

#include <stdexcept>
#include <string>

namespace dime {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Langevin dynamics produced a non-finite gradient or state.
struct SamplerDivergence : std::runtime_error {
  SamplerDivergence(const std::string& what, int step_index)
      : std::runtime_error(what + " (langevin step " + std::to_string(step_index) + ")"),
        step(step_index) {}
  int step;
};

// A sample path aborted; carries the annealing timestep where it happened.
struct PathError : std::runtime_error {
  PathError(const std::string& what, int timestep_idx, double t_value)
      : std::runtime_error(what + " (timestep index " + std::to_string(timestep_idx) +
                           ", t = " + std::to_string(t_value) + ")"),
        timestep_index(timestep_idx),
        t(t_value) {}
  int timestep_index;
  double t;
};

// All SMC particle weights collapsed to -inf.
struct DegenerateWeightsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dime
