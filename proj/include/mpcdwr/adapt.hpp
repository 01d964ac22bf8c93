#pragma once

#include <set>

#include "mpcdwr/dwr.hpp"

namespace mpcdwr {

enum class AdaptMode { TimeOnly, SpaceOnly, SpaceTime };

struct AdaptConfig {
  AdaptMode mode = AdaptMode::SpaceTime;
  double theta_time = 0.5;
  double theta_space = 0.3;
  int max_time_points = 41;
  int max_space_dofs_total = 1 << 20;
  int max_rounds = 30;
};

// Smallest prefix of the descending-sorted values whose sum reaches
// theta * total; ties broken by ascending index, zero total -> empty set.
std::set<int> mark(const Vec& values, double theta);

struct AdaptHistoryRow {
  int round = 0;
  int time_points = 0;
  int space_dofs_total = 0;
  double qoi_value = 0.0;
  double eta_k = 0.0;
  double eta_h = 0.0;
};

struct AdaptResult {
  GridPtr grid;
  KktSolution solution;
  Indicators indicators;
  std::vector<AdaptHistoryRow> history;
  bool converged = true;
};

// Solve / estimate / mark / refine until a budget binds, marks run dry, or
// max_rounds is hit. Time marking bisects slabs by |eta_k_m|; space marking
// refines (slab, element) pairs by |eta_h_m_e| with one Doerfler pass over all
// pairs; SpaceTime picks the side with the larger total each round. Chosen
// refinements are clipped largest-first so budgets are never exceeded; the
// previous solution warm-starts each solve. A solver failure stops the loop
// with the history collected so far.
AdaptResult adapt_loop(const ProblemSpec& spec, const Qoi& qoi, const AdaptConfig& cfg,
                       GridPtr initial, const SolveOptions& opts = {});

}  // namespace mpcdwr
