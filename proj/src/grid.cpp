#include "mpcdwr/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mpcdwr {

namespace {
// Two coordinates are the same grid point if they agree to this relative
// tolerance; refined meshes share bitwise-equal ancestors, so this only
// matters when merging meshes of independent origin.
double merge_tol(double scale) { return 1e-12 * std::max(1.0, std::abs(scale)); }
}  // namespace

int TimeGrid::slab_of(double t) const {
  auto it = std::lower_bound(points.begin(), points.end(), t);
  int m = static_cast<int>(it - points.begin());
  return std::clamp(m, 1, slabs());
}

void TimeGrid::validate() const {
  if (points.size() < 2) throw std::invalid_argument("time grid needs at least 2 points");
  for (size_t i = 1; i < points.size(); ++i)
    if (!(points[i] > points[i - 1]))
      throw std::invalid_argument("time grid points must be strictly increasing");
}

TimeGrid make_uniform_time_grid(double t0, double t1, int n_points) {
  if (n_points < 2 || !(t1 > t0)) throw std::invalid_argument("bad uniform time grid request");
  TimeGrid g;
  g.points.resize(n_points);
  for (int i = 0; i < n_points; ++i)
    g.points[i] = t0 + (t1 - t0) * static_cast<double>(i) / (n_points - 1);
  g.points.front() = t0;
  g.points.back() = t1;
  return g;
}

TimeGrid refine_time(const TimeGrid& grid, const std::set<int>& marks) {
  grid.validate();
  TimeGrid out;
  out.points.reserve(grid.points.size() + marks.size());
  for (int m : marks)
    if (m < 1 || m > grid.slabs()) throw std::out_of_range("time mark out of range");
  for (int m = 0; m <= grid.slabs(); ++m) {
    out.points.push_back(grid.points[m]);
    if (m < grid.slabs() && marks.count(m + 1))
      out.points.push_back(0.5 * (grid.points[m] + grid.points[m + 1]));
  }
  return out;
}

TimeGrid with_time_point(const TimeGrid& grid, double t) {
  double tol = merge_tol(grid.points.back() - grid.points.front());
  for (double p : grid.points)
    if (std::abs(p - t) <= tol) return grid;
  if (t <= grid.points.front() || t >= grid.points.back())
    throw std::invalid_argument("inserted time point outside the horizon");
  TimeGrid out = grid;
  out.points.insert(std::upper_bound(out.points.begin(), out.points.end(), t), t);
  return out;
}

int SpaceMesh::locate(double w) const {
  auto it = std::upper_bound(nodes.begin(), nodes.end(), w);
  int e = static_cast<int>(it - nodes.begin()) - 1;
  return std::clamp(e, 0, n_elems() - 1);
}

void SpaceMesh::validate() const {
  if (nodes.size() < 2) throw std::invalid_argument("mesh needs at least 2 nodes");
  for (size_t i = 1; i < nodes.size(); ++i)
    if (!(nodes[i] > nodes[i - 1]))
      throw std::invalid_argument("mesh nodes must be strictly increasing");
  if (levels.size() != nodes.size() - 1)
    throw std::invalid_argument("mesh levels/elements mismatch");
}

SpaceMesh make_uniform_mesh(double L, int n_elems) {
  if (n_elems < 1 || !(L > 0)) throw std::invalid_argument("bad uniform mesh request");
  SpaceMesh m;
  m.nodes.resize(n_elems + 1);
  for (int i = 0; i <= n_elems; ++i) m.nodes[i] = L * static_cast<double>(i) / n_elems;
  m.nodes.front() = 0.0;
  m.nodes.back() = L;
  m.levels.assign(n_elems, 0);
  return m;
}

SpaceMesh refine_space(const SpaceMesh& mesh, const std::set<int>& marks) {
  mesh.validate();
  for (int e : marks)
    if (e < 0 || e >= mesh.n_elems()) throw std::out_of_range("space mark out of range");
  SpaceMesh out;
  out.nodes.reserve(mesh.nodes.size() + marks.size());
  out.levels.reserve(mesh.levels.size() + marks.size());
  for (int e = 0; e < mesh.n_elems(); ++e) {
    out.nodes.push_back(mesh.nodes[e]);
    if (marks.count(e)) {
      out.nodes.push_back(mesh.mid(e));
      out.levels.push_back(mesh.levels[e] + 1);
      out.levels.push_back(mesh.levels[e] + 1);
    } else {
      out.levels.push_back(mesh.levels[e]);
    }
  }
  out.nodes.push_back(mesh.nodes.back());
  return out;
}

SpaceMesh uniform_refine(const SpaceMesh& mesh, int n) {
  if (n < 0) throw std::invalid_argument("negative refinement count");
  SpaceMesh out = mesh;
  for (int i = 0; i < n; ++i) {
    std::set<int> all;
    for (int e = 0; e < out.n_elems(); ++e) all.insert(e);
    out = refine_space(out, all);
  }
  return out;
}

SpaceMesh common_refinement(const SpaceMesh& a, const SpaceMesh& b) {
  a.validate();
  b.validate();
  double tol = merge_tol(a.length());
  if (std::abs(a.nodes.front() - b.nodes.front()) > tol ||
      std::abs(a.nodes.back() - b.nodes.back()) > tol)
    throw std::invalid_argument("common refinement of mismatched domains");
  SpaceMesh out;
  size_t i = 0, j = 0;
  while (i < a.nodes.size() || j < b.nodes.size()) {
    double va = i < a.nodes.size() ? a.nodes[i] : std::numeric_limits<double>::infinity();
    double vb = j < b.nodes.size() ? b.nodes[j] : std::numeric_limits<double>::infinity();
    if (std::abs(va - vb) <= tol) {
      out.nodes.push_back(va);
      ++i;
      ++j;
    } else if (va < vb) {
      out.nodes.push_back(va);
      ++i;
    } else {
      out.nodes.push_back(vb);
      ++j;
    }
  }
  out.levels.assign(out.nodes.size() - 1, 0);
  return out;
}

Vec prolong(const Vec& values, const SpaceMesh& from, const SpaceMesh& to) {
  if (values.size() != from.nodes.size())
    throw std::invalid_argument("prolong: value/node count mismatch");
  Vec out(to.nodes.size());
  for (size_t i = 0; i < to.nodes.size(); ++i) {
    double w = to.nodes[i];
    int e = from.locate(w);
    double wl = from.nodes[e], wr = from.nodes[e + 1];
    double th = (w - wl) / (wr - wl);
    out[i] = (1.0 - th) * values[e] + th * values[e + 1];
  }
  return out;
}

Vec restrict_dual(const Vec& dual, const SpaceMesh& from, const SpaceMesh& to) {
  if (dual.size() != from.nodes.size())
    throw std::invalid_argument("restrict_dual: value/node count mismatch");
  Vec out(to.nodes.size(), 0.0);
  for (size_t i = 0; i < from.nodes.size(); ++i) {
    double w = from.nodes[i];
    int e = to.locate(w);
    double wl = to.nodes[e], wr = to.nodes[e + 1];
    double th = (w - wl) / (wr - wl);
    out[e] += (1.0 - th) * dual[i];
    out[e + 1] += th * dual[i];
  }
  return out;
}

int SpaceTimeGrid::total_space_dofs() const {
  int n = 0;
  for (const auto& m : meshes) n += m.n_nodes();
  return n;
}

void SpaceTimeGrid::validate() const {
  time.validate();
  if (static_cast<int>(meshes.size()) != time.slabs() + 1)
    throw std::invalid_argument("space-time grid needs M+1 meshes");
  double tol = merge_tol(meshes[0].length());
  for (const auto& m : meshes) {
    m.validate();
    if (std::abs(m.nodes.front() - meshes[0].nodes.front()) > tol ||
        std::abs(m.nodes.back() - meshes[0].nodes.back()) > tol)
      throw std::invalid_argument("slab meshes must share the domain");
  }
}

SpaceTimeGrid make_space_time_grid(TimeGrid time, const SpaceMesh& mesh) {
  SpaceTimeGrid g;
  g.time = std::move(time);
  g.meshes.assign(g.time.slabs() + 1, mesh);
  g.validate();
  return g;
}

}  // namespace mpcdwr
