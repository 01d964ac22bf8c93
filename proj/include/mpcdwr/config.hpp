#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mpcdwr/mpc.hpp"

namespace mpcdwr {

// Bad configuration or unusable output location; the CLI maps this to exit 1.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class ExperimentKind { SolveOcp, Mpc, Decay, Sweep };

struct SweepConfig {
  std::vector<int> time_point_budgets{5, 8, 11, 21, 31, 41};
  // Empty list runs the problem's own alpha only.
  std::vector<double> alphas;
};

struct RunConfig {
  ExperimentKind experiment = ExperimentKind::SolveOcp;
  ProblemSpec problem;
  Qoi qoi = Qoi::truncated(0.5);
  AdaptConfig adapt;
  // The mpc section shares the top-level adapt settings; run() copies them in.
  MpcConfig mpc;
  SweepConfig sweep;
  SolveOptions solver;
  int initial_time_points = 21;
  int initial_space_elems = 8;
  unsigned seed = 0;
  std::string out_dir = "out";
  bool compare_policies = false;
};

// Strict JSON parsing: unknown keys, wrong types, and inconsistent values are
// rejected with the offending field path in the message.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

// Executes the configured experiment, writing CSV/JSON artifacts into out_dir.
// Returns 0 on success, 2 when a solve fails to converge; configuration and
// output-directory problems throw ConfigError.
int run(const RunConfig& cfg);

}  // namespace mpcdwr
