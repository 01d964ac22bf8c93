#include "mpcdwr/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mpcdwr {

namespace {

// Indices ordered by value descending, index ascending on ties.
std::vector<int> ranked(const Vec& values) {
  std::vector<int> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  });
  return idx;
}

struct FlatEntry {
  int slab = 0;
  int elem = 0;
};

}  // namespace

std::set<int> mark(const Vec& values, double theta) {
  std::set<int> out;
  double total = std::accumulate(values.begin(), values.end(), 0.0);
  if (total <= 0.0) return out;
  double target = theta * total;
  double acc = 0.0;
  for (int i : ranked(values)) {
    if (acc >= target) break;
    if (values[i] <= 0.0) break;
    out.insert(i);
    acc += values[i];
  }
  return out;
}

AdaptResult adapt_loop(const ProblemSpec& spec, const Qoi& qoi, const AdaptConfig& cfg,
                       GridPtr initial, const SolveOptions& opts) {
  AdaptResult result;
  result.grid = initial;
  const KktSolution* warm = nullptr;
  for (int round = 0;; ++round) {
    result.solution = solve_ocp(result.grid, spec, warm, opts);
    if (!result.solution.info.converged) {
      result.converged = false;
      return result;
    }
    SecondarySolution chi = solve_secondary(spec, result.solution, qoi, opts);
    result.indicators = estimate(spec, result.solution, chi, qoi);
    AdaptHistoryRow row;
    row.round = round;
    row.time_points = static_cast<int>(result.grid->time.points.size());
    row.space_dofs_total = result.grid->total_space_dofs();
    row.qoi_value = eval_qoi(result.solution.x, result.solution.u, spec, qoi);
    row.eta_k = result.indicators.eta_k();
    row.eta_h = result.indicators.eta_h();
    result.history.push_back(row);
    if (round >= cfg.max_rounds) return result;

    const SpaceTimeGrid& g = *result.grid;
    int M = g.time.slabs();
    bool refine_time_side;
    switch (cfg.mode) {
      case AdaptMode::TimeOnly: refine_time_side = true; break;
      case AdaptMode::SpaceOnly: refine_time_side = false; break;
      default:
        refine_time_side =
            std::abs(result.indicators.eta_k()) >= std::abs(result.indicators.eta_h());
    }

    if (refine_time_side) {
      int budget = cfg.max_time_points - static_cast<int>(g.time.points.size());
      if (budget <= 0) return result;
      Vec mags(M + 1, 0.0);
      for (int m = 1; m <= M; ++m) mags[m] = std::abs(result.indicators.time[m]);
      std::set<int> marks = mark(mags, cfg.theta_time);
      if (static_cast<int>(marks.size()) > budget) {
        std::set<int> clipped;
        for (int i : ranked(mags)) {
          if (static_cast<int>(clipped.size()) == budget) break;
          if (marks.count(i)) clipped.insert(i);
        }
        marks = std::move(clipped);
      }
      if (marks.empty()) return result;
      SpaceTimeGrid refined;
      refined.time = refine_time(g.time, marks);
      refined.meshes.push_back(g.mesh(0));
      for (int m = 1; m <= M; ++m) {
        refined.meshes.push_back(g.mesh(m));
        if (marks.count(m)) refined.meshes.push_back(g.mesh(m));
      }
      warm = &result.solution;
      result.grid = std::make_shared<const SpaceTimeGrid>(std::move(refined));
    } else {
      int budget = cfg.max_space_dofs_total - g.total_space_dofs();
      if (budget <= 0) return result;
      std::vector<FlatEntry> entries;
      Vec mags;
      for (int m = 0; m <= M; ++m)
        for (int e = 0; e < g.mesh(m).n_elems(); ++e) {
          entries.push_back({m, e});
          mags.push_back(std::abs(result.indicators.space[m][e]));
        }
      std::set<int> marks = mark(mags, cfg.theta_space);
      // Each refined element adds one node to its slab mesh.
      if (static_cast<int>(marks.size()) > budget) {
        std::set<int> clipped;
        for (int i : ranked(mags)) {
          if (static_cast<int>(clipped.size()) == budget) break;
          if (marks.count(i)) clipped.insert(i);
        }
        marks = std::move(clipped);
      }
      if (marks.empty()) return result;
      std::vector<std::set<int>> per_slab(M + 1);
      for (int i : marks) per_slab[entries[i].slab].insert(entries[i].elem);
      SpaceTimeGrid refined;
      refined.time = g.time;
      for (int m = 0; m <= M; ++m)
        refined.meshes.push_back(per_slab[m].empty() ? g.mesh(m)
                                                     : refine_space(g.mesh(m), per_slab[m]));
      warm = &result.solution;
      result.grid = std::make_shared<const SpaceTimeGrid>(std::move(refined));
    }
  }
}

}  // namespace mpcdwr
