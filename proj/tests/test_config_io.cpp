#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mpcdwr/config.hpp"
#include "mpcdwr/io.hpp"

using namespace mpcdwr;
namespace fs = std::filesystem;

namespace {

std::string error_message(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const char* name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("empty config fills the documented defaults") {
  RunConfig cfg = parse_config(R"({"experiment":"solve_ocp"})");
  CHECK(cfg.experiment == ExperimentKind::SolveOcp);
  CHECK(cfg.problem.nu == 0.1);
  CHECK(cfg.problem.L == 3.0);
  CHECK(cfg.problem.T == 10.0);
  CHECK(cfg.problem.alpha == 1e-3);
  CHECK(cfg.problem.dynamics == DynamicsKind::Linear);
  CHECK(cfg.problem.control == ControlKind::Distributed);
  CHECK(cfg.qoi.kind == Qoi::Kind::Truncated);
  CHECK(cfg.qoi.tau == 0.5);
  CHECK(cfg.adapt.theta_time == 0.5);
  CHECK(cfg.adapt.theta_space == 0.3);
  CHECK(cfg.mpc.n_steps == 4);
  CHECK(cfg.mpc.tau == 0.5);
  CHECK(cfg.mpc.sim_time_points_per_tau == 51);
  CHECK(cfg.mpc.sim_uniform_refs == 5);
  CHECK(cfg.out_dir == "out");
}

TEST_CASE("rejections carry the offending field path") {
  CHECK(error_message(R"({"problem":{"alpha":0}})").find("problem.alpha") != std::string::npos);
  CHECK(error_message(R"({"qoi":{"kind":"truncated","tau":12}})").find("qoi.tau") !=
        std::string::npos);
  CHECK(error_message(R"({"probem":{}})").find("config.probem") != std::string::npos);
  CHECK(error_message(R"({"problem":{"nu":"thick"}})").find("problem.nu") != std::string::npos);
  CHECK(error_message(R"({"problem":{"dynamics":"cubic"}})").find("problem.dynamics") !=
        std::string::npos);
  CHECK(error_message(R"({"mpc":{"n_steps":0}})").find("mpc.n_steps") != std::string::npos);
  CHECK(error_message(R"({"adapt":{"theta_time":1.5}})").find("adapt.theta_time") !=
        std::string::npos);
  CHECK(error_message(R"({"sweep":{"time_point_budgets":[]}})").find("sweep.time_point_budgets") !=
        std::string::npos);
  CHECK(error_message("{not json").find("config") != std::string::npos);
  CHECK_THROWS_AS(parse_config(R"([1,2])"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("double formatting round-trips exactly") {
  for (double x : {1.0 / 3.0, 0.1, 3.141592653589793, 1e-300, 12345.678901234567, -2.5e17, 0.0}) {
    std::string s = format_double(x);
    CHECK(std::strtod(s.c_str(), nullptr) == x);
  }
}

TEST_CASE("csv builders emit headers and pinned layouts") {
  std::vector<AdaptHistoryRow> rows(2);
  rows[0] = {0, 5, 25, 1.5, -0.25, 0.0625};
  rows[1] = {1, 7, 35, 1.25, -0.125, 0.03125};
  std::string h = history_csv(rows);
  CHECK(h ==
        "round,time_points,space_dofs_total,qoi_value,eta_k,eta_h\n"
        "0,5,25,1.5,-0.25,0.0625\n"
        "1,7,35,1.25,-0.125,0.03125\n");

  std::string m = mpc_csv({{"truncated", 41, 0, 1.5, 0.75, 21, 100}});
  CHECK(m ==
        "policy,budget,step,open_loop_qoi,cumulative_closed_loop_cost,time_points,space_dofs\n"
        "truncated,41,0,1.5,0.75,21,100\n");

  std::string sw = sweep_csv({{"full", 5, 0.001, 4.5}});
  CHECK(sw ==
        "policy,budget,alpha,closed_loop_cost\n"
        "full,5,0.001,4.5\n");

  SolverInfo info;
  info.history.push_back({0, 0.5, 0.0});
  CHECK(convergence_csv(info) == "iteration,grad_norm,step\n0,0.5,0\n");
}

TEST_CASE("solution csv builders cover every dof") {
  auto grid = std::make_shared<const SpaceTimeGrid>(
      make_space_time_grid(make_uniform_time_grid(0.0, 1.0, 4), make_uniform_mesh(3.0, 4)));
  ProblemSpec spec;
  spec.T = 1.0;
  auto sol = solve_ocp(grid, spec);
  std::string t = trajectory_csv(sol);
  CHECK(count_lines(t) == 1 + 4 * 5);
  CHECK(t.rfind("m,t_m,node_index,w,x,lambda\n", 0) == 0);
  std::string c = control_csv(sol.u);
  CHECK(count_lines(c) == 1 + 3 * 5);

  Qoi qoi = Qoi::truncated(1.0 / 3.0);
  auto chi = solve_secondary(spec, sol, qoi);
  auto ind = estimate(spec, sol, chi, qoi);
  std::string i = indicator_csv(*grid, ind);
  CHECK(count_lines(i) == 1 + 4 * 4);
  CHECK(i.rfind("m,t_m,eta_k_m,element_index,element_midpoint,eta_h_m_e\n", 0) == 0);
}

TEST_CASE("output directories are created or rejected") {
  fs::path base = fresh_dir("mpcdwr_io_dirs");
  ensure_dir((base / "a" / "b").string());
  CHECK(fs::is_directory(base / "a" / "b"));
  std::ofstream(base / "file").put('x');
  CHECK_THROWS_AS(ensure_dir((base / "file" / "sub").string()), ConfigError);
  fs::remove_all(base);
}

TEST_CASE("worker cap honors the environment") {
  setenv("MPCDWR_WORKERS", "3", 1);
  CHECK(worker_cap() == 3);
  setenv("MPCDWR_WORKERS", "0", 1);
  CHECK(worker_cap() == 1);
  unsetenv("MPCDWR_WORKERS");
  CHECK(worker_cap() >= 1);
}

TEST_CASE("solve experiment writes its artifact set byte-identically") {
  fs::path d1 = fresh_dir("mpcdwr_run1");
  fs::path d2 = fresh_dir("mpcdwr_run2");
  std::string base = R"({
    "experiment": "solve_ocp",
    "problem": {"T": 1.0, "alpha": 1e-2},
    "qoi": {"kind": "truncated", "tau": 0.25},
    "adapt": {"mode": "time", "max_time_points": 7, "max_rounds": 2},
    "initial_time_points": 5,
    "initial_space_elems": 4,
    "out_dir": ")";
  RunConfig c1 = parse_config(base + d1.string() + "\"}");
  RunConfig c2 = parse_config(base + d2.string() + "\"}");
  CHECK(run(c1) == 0);
  CHECK(run(c2) == 0);
  for (const char* f :
       {"history.csv", "indicators.csv", "trajectory.csv", "control.csv", "convergence.csv",
        "summary.json"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(d1 / f));
    CHECK(slurp(d1 / f) == slurp(d2 / f));
  }
  auto summary = nlohmann::json::parse(slurp(d1 / "summary.json"));
  CHECK(summary.at("converged").get<bool>());
  CHECK(summary.at("experiment").get<std::string>() == "solve_ocp");
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("solver breakdown maps to exit code 2") {
  fs::path d = fresh_dir("mpcdwr_fail");
  RunConfig cfg = parse_config(R"({
    "experiment": "solve_ocp",
    "problem": {"T": 1.0, "dynamics": "quasilinear", "control": "neumann_boundary"},
    "qoi": {"kind": "truncated", "tau": 0.25},
    "adapt": {"max_rounds": 0},
    "initial_time_points": 5,
    "initial_space_elems": 4,
    "solver": {"newton_max_iter": 1},
    "out_dir": ")" + d.string() + "\"}");
  CHECK(run(cfg) == 2);
  CHECK(fs::exists(d / "error.txt"));
  fs::remove_all(d);
}

TEST_CASE("paired mpc experiment reports both policies") {
  fs::path d = fresh_dir("mpcdwr_mpc");
  RunConfig cfg = parse_config(R"({
    "experiment": "mpc",
    "problem": {"T": 1.0, "alpha": 1e-2},
    "adapt": {"mode": "time", "max_time_points": 7, "max_rounds": 1},
    "mpc": {"tau": 0.25, "n_steps": 1, "sim_time_points_per_tau": 5,
            "sim_uniform_refs": 1, "initial_time_points": 5, "initial_space_elems": 4},
    "out_dir": ")" + d.string() + "\"}");
  cfg.compare_policies = true;
  CHECK(run(cfg) == 0);
  std::string csv = slurp(d / "mpc.csv");
  CHECK(count_lines(csv) == 1 + 2);
  auto summary = nlohmann::json::parse(slurp(d / "summary.json"));
  CHECK(summary.at("closed_loop_cost").contains("truncated"));
  CHECK(summary.at("closed_loop_cost").contains("full"));
  CHECK(summary.at("closed_loop_cost").at("truncated").get<double>() > 0.0);
  fs::remove_all(d);
}

TEST_CASE("sweep output is worker-count independent") {
  auto make_cfg = [](const fs::path& d) {
    return parse_config(R"({
      "experiment": "sweep",
      "problem": {"T": 1.0, "alpha": 1e-2},
      "adapt": {"mode": "time", "max_rounds": 1},
      "mpc": {"tau": 0.25, "n_steps": 1, "sim_time_points_per_tau": 5,
              "sim_uniform_refs": 1, "initial_time_points": 5, "initial_space_elems": 4},
      "sweep": {"time_point_budgets": [5, 7]},
      "out_dir": ")" + d.string() + "\"}");
  };
  fs::path d1 = fresh_dir("mpcdwr_sweep1");
  fs::path d2 = fresh_dir("mpcdwr_sweep2");
  setenv("MPCDWR_WORKERS", "1", 1);
  CHECK(run(make_cfg(d1)) == 0);
  setenv("MPCDWR_WORKERS", "4", 1);
  CHECK(run(make_cfg(d2)) == 0);
  unsetenv("MPCDWR_WORKERS");
  std::string csv = slurp(d1 / "sweep.csv");
  CHECK(count_lines(csv) == 1 + 4);
  CHECK(csv == slurp(d2 / "sweep.csv"));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("decay experiment emits per-slab series") {
  fs::path d = fresh_dir("mpcdwr_decay");
  RunConfig cfg = parse_config(R"({
    "experiment": "decay",
    "problem": {"T": 1.0, "alpha": 1e-2},
    "qoi": {"kind": "truncated", "tau": 0.25},
    "initial_time_points": 9,
    "initial_space_elems": 4,
    "out_dir": ")" + d.string() + "\"}");
  CHECK(run(cfg) == 0);
  std::string csv = slurp(d / "decay.csv");
  CHECK(count_lines(csv) == 1 + 8);
  auto summary = nlohmann::json::parse(slurp(d / "summary.json"));
  CHECK(summary.contains("fit_q"));
  fs::remove_all(d);
}
