#pragma once

#include <set>
#include <vector>

namespace mpcdwr {

using Vec = std::vector<double>;

// Partition 0 = t_0 < t_1 < ... < t_M = T. Slab m is the interval
// (t_{m-1}, t_m], indexed 1..M.
struct TimeGrid {
  std::vector<double> points;

  int slabs() const { return static_cast<int>(points.size()) - 1; }
  double t(int m) const { return points[m]; }
  double k(int m) const { return points[m] - points[m - 1]; }
  double horizon() const { return points.back() - points.front(); }
  // Index of the slab containing time `t` (left-open), clamped to 1..M.
  int slab_of(double t) const;
  void validate() const;
};

TimeGrid make_uniform_time_grid(double t0, double t1, int n_points);
// Bisect every marked slab; slab indices are 1-based.
TimeGrid refine_time(const TimeGrid& grid, const std::set<int>& marks);
// Insert a point (no-op if already present up to tolerance).
TimeGrid with_time_point(const TimeGrid& grid, double t);

// 1D mesh of [a, b]: strictly increasing nodes, elements between consecutive
// nodes, per-element refinement level for reporting.
struct SpaceMesh {
  std::vector<double> nodes;
  std::vector<int> levels;

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_elems() const { return static_cast<int>(nodes.size()) - 1; }
  double h(int e) const { return nodes[e + 1] - nodes[e]; }
  double mid(int e) const { return 0.5 * (nodes[e] + nodes[e + 1]); }
  double length() const { return nodes.back() - nodes.front(); }
  // Element containing coordinate w, clamped to the domain.
  int locate(double w) const;
  void validate() const;
};

SpaceMesh make_uniform_mesh(double L, int n_elems);
SpaceMesh refine_space(const SpaceMesh& mesh, const std::set<int>& marks);
SpaceMesh uniform_refine(const SpaceMesh& mesh, int n);
// Node-set union of two meshes over the same domain.
SpaceMesh common_refinement(const SpaceMesh& a, const SpaceMesh& b);

// Nodal values of the piecewise-linear interpolant of (from, values) at the
// nodes of `to`. Exact whenever `to` refines `from`.
Vec prolong(const Vec& values, const SpaceMesh& from, const SpaceMesh& to);
// Adjoint of prolongation: maps dual coefficients (load vectors) on `from`
// back to `to`, so that <restrict_dual(w), v>_to = <w, prolong(v)>_from.
Vec restrict_dual(const Vec& dual, const SpaceMesh& from, const SpaceMesh& to);

struct SpaceTimeGrid {
  TimeGrid time;
  std::vector<SpaceMesh> meshes;  // size M+1, [0] is the initial-time mesh

  const SpaceMesh& mesh(int m) const { return meshes[m]; }
  int total_space_dofs() const;
  void validate() const;
};

SpaceTimeGrid make_space_time_grid(TimeGrid time, const SpaceMesh& mesh);

}  // namespace mpcdwr
