#include "mpcdwr/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "mpcdwr/config.hpp"

namespace mpcdwr {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec || !std::filesystem::is_directory(path))
    throw ConfigError("out_dir: cannot create directory '" + path + "'");
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw ConfigError("write failed for '" + path + "'");
}

std::string history_csv(const std::vector<AdaptHistoryRow>& rows) {
  std::string s = "round,time_points,space_dofs_total,qoi_value,eta_k,eta_h\n";
  for (const auto& r : rows) {
    s += std::to_string(r.round) + ',' + std::to_string(r.time_points) + ',' +
         std::to_string(r.space_dofs_total) + ',' + format_double(r.qoi_value) + ',' +
         format_double(r.eta_k) + ',' + format_double(r.eta_h) + '\n';
  }
  return s;
}

std::string indicator_csv(const SpaceTimeGrid& grid, const Indicators& ind) {
  std::string s = "m,t_m,eta_k_m,element_index,element_midpoint,eta_h_m_e\n";
  for (int m = 0; m <= grid.time.slabs(); ++m) {
    const SpaceMesh& mesh = grid.mesh(m);
    for (int e = 0; e < mesh.n_elems(); ++e) {
      s += std::to_string(m) + ',' + format_double(grid.time.t(m)) + ',' +
           format_double(ind.time[m]) + ',' + std::to_string(e) + ',' +
           format_double(mesh.mid(e)) + ',' + format_double(ind.space[m][e]) + '\n';
    }
  }
  return s;
}

std::string trajectory_csv(const KktSolution& sol) {
  const SpaceTimeGrid& grid = *sol.x.grid;
  std::string s = "m,t_m,node_index,w,x,lambda\n";
  for (int m = 0; m <= grid.time.slabs(); ++m) {
    const SpaceMesh& mesh = grid.mesh(m);
    for (int i = 0; i < mesh.n_nodes(); ++i) {
      s += std::to_string(m) + ',' + format_double(grid.time.t(m)) + ',' + std::to_string(i) +
           ',' + format_double(mesh.nodes[i]) + ',' + format_double(sol.x.vals[m][i]) + ',' +
           format_double(sol.lam.vals[m][i]) + '\n';
    }
  }
  return s;
}

std::string control_csv(const ControlTrajectory& u) {
  const SpaceTimeGrid& grid = *u.grid;
  std::string s = "m,t_m,component,value\n";
  for (int m = 1; m <= grid.time.slabs(); ++m) {
    for (size_t i = 0; i < u.vals[m].size(); ++i) {
      s += std::to_string(m) + ',' + format_double(grid.time.t(m)) + ',' + std::to_string(i) +
           ',' + format_double(u.vals[m][i]) + '\n';
    }
  }
  return s;
}

std::string convergence_csv(const SolverInfo& info) {
  std::string s = "iteration,grad_norm,step\n";
  for (const auto& r : info.history) {
    s += std::to_string(r.iteration) + ',' + format_double(r.grad_norm) + ',' +
         format_double(r.step) + '\n';
  }
  return s;
}

std::string decay_csv(const DecayReport& rep) {
  std::string s = "t,v_norm,q_norm,z_norm,eta_k_abs,eta_h_abs\n";
  for (const auto& r : rep.rows) {
    s += format_double(r.t) + ',' + format_double(r.v_norm) + ',' + format_double(r.q_norm) +
         ',' + format_double(r.z_norm) + ',' + format_double(r.eta_k_abs) + ',' +
         format_double(r.eta_h_abs) + '\n';
  }
  return s;
}

std::string mpc_csv(const std::vector<MpcCsvRow>& rows) {
  std::string s =
      "policy,budget,step,open_loop_qoi,cumulative_closed_loop_cost,time_points,space_dofs\n";
  for (const auto& r : rows) {
    s += r.policy + ',' + std::to_string(r.budget) + ',' + std::to_string(r.step) + ',' +
         format_double(r.open_loop_qoi) + ',' + format_double(r.cumulative_closed_loop_cost) +
         ',' + std::to_string(r.time_points) + ',' + std::to_string(r.space_dofs) + '\n';
  }
  return s;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string s = "policy,budget,alpha,closed_loop_cost\n";
  for (const auto& r : rows) {
    s += r.policy + ',' + std::to_string(r.budget) + ',' + format_double(r.alpha) + ',' +
         format_double(r.closed_loop_cost) + '\n';
  }
  return s;
}

int worker_cap() {
  if (const char* env = std::getenv("MPCDWR_WORKERS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
    return 1;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace mpcdwr
