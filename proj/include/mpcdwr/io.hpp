#pragma once

#include <string>
#include <vector>

#include "mpcdwr/adapt.hpp"
#include "mpcdwr/mpc.hpp"

namespace mpcdwr {

// Shortest 17-significant-digit form; round-trips doubles exactly.
std::string format_double(double x);

// Creates the directory (and parents) when missing; ConfigError if unusable.
void ensure_dir(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

std::string history_csv(const std::vector<AdaptHistoryRow>& rows);
std::string indicator_csv(const SpaceTimeGrid& grid, const Indicators& ind);
std::string trajectory_csv(const KktSolution& sol);
std::string control_csv(const ControlTrajectory& u);
std::string convergence_csv(const SolverInfo& info);
std::string decay_csv(const DecayReport& rep);

struct MpcCsvRow {
  std::string policy;
  int budget = 0;
  int step = 0;
  double open_loop_qoi = 0.0;
  double cumulative_closed_loop_cost = 0.0;
  int time_points = 0;
  int space_dofs = 0;
};
std::string mpc_csv(const std::vector<MpcCsvRow>& rows);

struct SweepRow {
  std::string policy;
  int budget = 0;
  double alpha = 0.0;
  double closed_loop_cost = 0.0;
};
std::string sweep_csv(const std::vector<SweepRow>& rows);

// Worker cap for concurrent sweep arms: MPCDWR_WORKERS when set (minimum 1),
// otherwise the hardware concurrency.
int worker_cap();

}  // namespace mpcdwr
