#include "mpcdwr/config.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mpcdwr/io.hpp"

namespace mpcdwr {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) fail(path + "." + it.key(), "unknown field");
  }
}

const json* section(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) return nullptr;
  const json& v = j.at(key);
  if (!v.is_object()) fail(path + "." + key, "expected an object");
  return &v;
}

double get_num(const json& j, const std::string& path, const char* key, double def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

int get_int(const json& j, const std::string& path, const char* key, int def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  return v.get<int>();
}

std::string get_str(const json& j, const std::string& path, const char* key,
                    const std::string& def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

int enum_index(const json& j, const std::string& path, const char* key, int def,
               std::initializer_list<const char*> names) {
  std::string s = get_str(j, path, key, "");
  if (s.empty()) return def;
  int i = 0;
  for (const char* n : names) {
    if (s == n) return i;
    ++i;
  }
  std::string all;
  for (const char* n : names) {
    if (!all.empty()) all += ", ";
    all += n;
  }
  fail(path + "." + key, "expected one of: " + all);
}

void parse_problem(const json& j, ProblemSpec& p) {
  const std::string path = "problem";
  check_keys(j, path,
             {"L", "T", "dynamics", "nu", "s", "c", "d", "control", "reference", "alpha",
              "time_offset", "x0"});
  p.L = get_num(j, path, "L", p.L);
  p.T = get_num(j, path, "T", p.T);
  p.dynamics = static_cast<DynamicsKind>(enum_index(j, path, "dynamics",
                                                    static_cast<int>(p.dynamics),
                                                    {"linear", "quasilinear"}));
  p.nu = get_num(j, path, "nu", p.nu);
  p.s = get_num(j, path, "s", p.s);
  p.c = get_num(j, path, "c", p.c);
  p.d = get_num(j, path, "d", p.d);
  p.control = static_cast<ControlKind>(enum_index(j, path, "control",
                                                  static_cast<int>(p.control),
                                                  {"distributed", "neumann_boundary"}));
  p.reference = static_cast<ReferenceKind>(enum_index(
      j, path, "reference", static_cast<int>(p.reference),
      {"static", "dynamic", "exp_increasing"}));
  p.alpha = get_num(j, path, "alpha", p.alpha);
  p.time_offset = get_num(j, path, "time_offset", p.time_offset);
  if (const json* x0 = section(j, path, "x0")) {
    check_keys(*x0, path + ".x0", {"nodes", "values"});
    if (!x0->contains("nodes") || !x0->contains("values"))
      fail(path + ".x0", "needs both nodes and values");
    const json& nodes = x0->at("nodes");
    const json& values = x0->at("values");
    if (!nodes.is_array() || !values.is_array() || nodes.size() != values.size())
      fail(path + ".x0", "nodes and values must be arrays of equal length");
    if (nodes.size() < 2) fail(path + ".x0", "needs at least two nodes");
    p.x0_mesh.nodes.clear();
    p.x0_vals.clear();
    for (const auto& v : nodes) {
      if (!v.is_number()) fail(path + ".x0.nodes", "expected numbers");
      p.x0_mesh.nodes.push_back(v.get<double>());
    }
    if (!std::is_sorted(p.x0_mesh.nodes.begin(), p.x0_mesh.nodes.end()))
      fail(path + ".x0.nodes", "must be increasing");
    p.x0_mesh.levels.assign(p.x0_mesh.nodes.size() - 1, 0);
    for (const auto& v : values) {
      if (!v.is_number()) fail(path + ".x0.values", "expected numbers");
      p.x0_vals.push_back(v.get<double>());
    }
  }
}

void parse_qoi(const json& j, Qoi& q) {
  const std::string path = "qoi";
  check_keys(j, path, {"kind", "tau"});
  q.kind = static_cast<Qoi::Kind>(
      enum_index(j, path, "kind", static_cast<int>(q.kind), {"full", "truncated"}));
  q.tau = get_num(j, path, "tau", q.tau);
}

void parse_adapt(const json& j, AdaptConfig& a) {
  const std::string path = "adapt";
  check_keys(j, path, {"mode", "theta_time", "theta_space", "max_time_points",
                       "max_space_dofs_total", "max_rounds"});
  a.mode = static_cast<AdaptMode>(enum_index(j, path, "mode", static_cast<int>(a.mode),
                                             {"time", "space", "space_time"}));
  a.theta_time = get_num(j, path, "theta_time", a.theta_time);
  a.theta_space = get_num(j, path, "theta_space", a.theta_space);
  a.max_time_points = get_int(j, path, "max_time_points", a.max_time_points);
  a.max_space_dofs_total = get_int(j, path, "max_space_dofs_total", a.max_space_dofs_total);
  a.max_rounds = get_int(j, path, "max_rounds", a.max_rounds);
  if (!(a.theta_time > 0.0) || a.theta_time > 1.0) fail(path + ".theta_time", "must lie in (0, 1]");
  if (!(a.theta_space > 0.0) || a.theta_space > 1.0)
    fail(path + ".theta_space", "must lie in (0, 1]");
  if (a.max_rounds < 0) fail(path + ".max_rounds", "must be nonnegative");
}

void parse_mpc(const json& j, MpcConfig& m) {
  const std::string path = "mpc";
  check_keys(j, path, {"tau", "n_steps", "sim_time_points_per_tau", "sim_uniform_refs",
                       "refinement_qoi", "initial_time_points", "initial_space_elems"});
  m.tau = get_num(j, path, "tau", m.tau);
  m.n_steps = get_int(j, path, "n_steps", m.n_steps);
  m.sim_time_points_per_tau = get_int(j, path, "sim_time_points_per_tau", m.sim_time_points_per_tau);
  m.sim_uniform_refs = get_int(j, path, "sim_uniform_refs", m.sim_uniform_refs);
  m.refinement_qoi = static_cast<Qoi::Kind>(enum_index(
      j, path, "refinement_qoi", static_cast<int>(m.refinement_qoi), {"full", "truncated"}));
  m.initial_time_points = get_int(j, path, "initial_time_points", m.initial_time_points);
  m.initial_space_elems = get_int(j, path, "initial_space_elems", m.initial_space_elems);
}

void parse_sweep(const json& j, SweepConfig& s) {
  const std::string path = "sweep";
  check_keys(j, path, {"time_point_budgets", "alphas"});
  if (j.contains("time_point_budgets")) {
    const json& v = j.at("time_point_budgets");
    if (!v.is_array() || v.empty()) fail(path + ".time_point_budgets", "expected a nonempty array");
    s.time_point_budgets.clear();
    for (const auto& b : v) {
      if (!b.is_number_integer()) fail(path + ".time_point_budgets", "expected integers");
      int n = b.get<int>();
      if (n < 3) fail(path + ".time_point_budgets", "entries must be at least 3");
      s.time_point_budgets.push_back(n);
    }
  }
  if (j.contains("alphas")) {
    const json& v = j.at("alphas");
    if (!v.is_array()) fail(path + ".alphas", "expected an array");
    s.alphas.clear();
    for (const auto& a : v) {
      if (!a.is_number()) fail(path + ".alphas", "expected numbers");
      double x = a.get<double>();
      if (!(x > 0.0)) fail(path + ".alphas", "entries must be positive");
      s.alphas.push_back(x);
    }
  }
}

void parse_solver(const json& j, SolveOptions& o) {
  const std::string path = "solver";
  check_keys(j, path,
             {"newton_abs_tol", "newton_max_iter", "cg_rel_tol", "cg_max_iter", "outer_tol",
              "outer_max_iter", "armijo_sigma", "armijo_max_halvings", "inner_cg_max_iter",
              "secondary_rel_tol", "secondary_max_iter", "hessian_mode"});
  o.newton_abs_tol = get_num(j, path, "newton_abs_tol", o.newton_abs_tol);
  o.newton_max_iter = get_int(j, path, "newton_max_iter", o.newton_max_iter);
  o.cg_rel_tol = get_num(j, path, "cg_rel_tol", o.cg_rel_tol);
  o.cg_max_iter = get_int(j, path, "cg_max_iter", o.cg_max_iter);
  o.outer_tol = get_num(j, path, "outer_tol", o.outer_tol);
  o.outer_max_iter = get_int(j, path, "outer_max_iter", o.outer_max_iter);
  o.armijo_sigma = get_num(j, path, "armijo_sigma", o.armijo_sigma);
  o.armijo_max_halvings = get_int(j, path, "armijo_max_halvings", o.armijo_max_halvings);
  o.inner_cg_max_iter = get_int(j, path, "inner_cg_max_iter", o.inner_cg_max_iter);
  o.secondary_rel_tol = get_num(j, path, "secondary_rel_tol", o.secondary_rel_tol);
  o.secondary_max_iter = get_int(j, path, "secondary_max_iter", o.secondary_max_iter);
  o.hessian_mode = static_cast<HessianMode>(enum_index(
      j, path, "hessian_mode", static_cast<int>(o.hessian_mode), {"exact", "gauss_newton"}));
}

std::string path_join(const std::string& dir, const char* name) {
  return (std::filesystem::path(dir) / name).string();
}

const char* policy_name(Qoi::Kind k) {
  return k == Qoi::Kind::Full ? "full" : "truncated";
}

GridPtr initial_grid_for(const RunConfig& cfg) {
  TimeGrid t = make_uniform_time_grid(0.0, cfg.problem.T, cfg.initial_time_points);
  if (cfg.qoi.kind == Qoi::Kind::Truncated) t = with_time_point(t, cfg.qoi.tau);
  return std::make_shared<const SpaceTimeGrid>(
      make_space_time_grid(t, make_uniform_mesh(cfg.problem.L, cfg.initial_space_elems)));
}

json fit_json(const DecayFit& f) {
  json j;
  j["ok"] = f.ok;
  j["slope"] = f.slope;
  j["intercept"] = f.intercept;
  j["points_used"] = f.points_used;
  return j;
}

void write_summary(const RunConfig& cfg, json body) {
  body["seed"] = cfg.seed;
  write_text_file(path_join(cfg.out_dir, "summary.json"), body.dump(2) + "\n");
}

int run_solve_ocp(const RunConfig& cfg) {
  AdaptResult ar = adapt_loop(cfg.problem, cfg.qoi, cfg.adapt, initial_grid_for(cfg), cfg.solver);
  write_text_file(path_join(cfg.out_dir, "history.csv"), history_csv(ar.history));
  write_text_file(path_join(cfg.out_dir, "indicators.csv"),
                  indicator_csv(*ar.grid, ar.indicators));
  write_text_file(path_join(cfg.out_dir, "trajectory.csv"), trajectory_csv(ar.solution));
  write_text_file(path_join(cfg.out_dir, "control.csv"), control_csv(ar.solution.u));
  write_text_file(path_join(cfg.out_dir, "convergence.csv"), convergence_csv(ar.solution.info));
  json s;
  s["experiment"] = "solve_ocp";
  s["converged"] = ar.converged;
  s["rounds"] = ar.history.size();
  s["time_points"] = ar.grid->time.points.size();
  s["space_dofs_total"] = ar.grid->total_space_dofs();
  if (!ar.history.empty()) {
    s["qoi_value"] = ar.history.back().qoi_value;
    s["eta_k"] = ar.history.back().eta_k;
    s["eta_h"] = ar.history.back().eta_h;
  }
  write_summary(cfg, s);
  return ar.converged ? 0 : 2;
}

int run_decay(const RunConfig& cfg) {
  KktSolution base = solve_ocp(initial_grid_for(cfg), cfg.problem, nullptr, cfg.solver);
  if (!base.info.converged) {
    json s;
    s["experiment"] = "decay";
    s["converged"] = false;
    write_summary(cfg, s);
    return 2;
  }
  SecondarySolution chi = solve_secondary(cfg.problem, base, cfg.qoi, cfg.solver);
  Indicators ind = estimate(cfg.problem, base, chi, cfg.qoi);
  DecayReport rep = decay_report(cfg.problem, base, chi, ind, cfg.qoi.tau);
  write_text_file(path_join(cfg.out_dir, "decay.csv"), decay_csv(rep));
  json s;
  s["experiment"] = "decay";
  s["converged"] = true;
  s["fit_v"] = fit_json(rep.fit_v);
  s["fit_q"] = fit_json(rep.fit_q);
  s["fit_z"] = fit_json(rep.fit_z);
  s["fit_eta_k"] = fit_json(rep.fit_eta_k);
  s["fit_eta_h"] = fit_json(rep.fit_eta_h);
  write_summary(cfg, s);
  return 0;
}

int run_mpc(const RunConfig& cfg) {
  std::vector<Qoi::Kind> policies;
  if (cfg.compare_policies)
    policies = {Qoi::Kind::Truncated, Qoi::Kind::Full};
  else
    policies = {cfg.mpc.refinement_qoi};
  std::vector<MpcCsvRow> rows;
  json costs;
  for (Qoi::Kind pol : policies) {
    MpcConfig m = cfg.mpc;
    m.refinement_qoi = pol;
    ClosedLoopResult r = mpc_run(cfg.problem, m, cfg.solver);
    double cum = 0.0;
    for (const auto& st : r.steps) {
      cum += st.step_cost;
      rows.push_back({policy_name(pol), m.adapt.max_time_points, st.step, st.qoi_value, cum,
                      st.time_points, st.space_dofs});
    }
    costs[policy_name(pol)] = r.closed_loop_cost;
  }
  write_text_file(path_join(cfg.out_dir, "mpc.csv"), mpc_csv(rows));
  json s;
  s["experiment"] = "mpc";
  s["closed_loop_cost"] = costs;
  s["n_steps"] = cfg.mpc.n_steps;
  write_summary(cfg, s);
  return 0;
}

int run_sweep(const RunConfig& cfg) {
  struct Arm {
    int budget;
    double alpha;
    Qoi::Kind pol;
  };
  std::vector<double> alphas =
      cfg.sweep.alphas.empty() ? std::vector<double>{cfg.problem.alpha} : cfg.sweep.alphas;
  std::vector<Arm> arms;
  for (int b : cfg.sweep.time_point_budgets)
    for (double a : alphas)
      for (Qoi::Kind pol : {Qoi::Kind::Truncated, Qoi::Kind::Full}) arms.push_back({b, a, pol});

  std::vector<SweepRow> rows(arms.size());
  std::vector<std::string> errors(arms.size());
  std::atomic<size_t> next{0};
  auto work = [&]() {
    for (size_t i = next.fetch_add(1); i < arms.size(); i = next.fetch_add(1)) {
      const Arm& arm = arms[i];
      try {
        ProblemSpec p = cfg.problem;
        p.alpha = arm.alpha;
        MpcConfig m = cfg.mpc;
        m.adapt.max_time_points = arm.budget;
        m.refinement_qoi = arm.pol;
        ClosedLoopResult r = mpc_run(p, m, cfg.solver);
        rows[i] = {policy_name(arm.pol), arm.budget, arm.alpha, r.closed_loop_cost};
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  int workers = std::min<int>(worker_cap(), static_cast<int>(arms.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  write_text_file(path_join(cfg.out_dir, "sweep.csv"), sweep_csv(rows));
  json s;
  s["experiment"] = "sweep";
  s["arms"] = arms.size();
  json errs = json::array();
  for (size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty())
      errs.push_back({{"policy", rows[i].policy.empty() ? policy_name(arms[i].pol) : rows[i].policy},
                      {"budget", arms[i].budget},
                      {"error", errors[i]}});
  s["failures"] = errs;
  write_summary(cfg, s);
  return errs.empty() ? 0 : 2;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  check_keys(j, "config",
             {"experiment", "problem", "qoi", "adapt", "mpc", "sweep", "solver",
              "initial_time_points", "initial_space_elems", "seed", "out_dir"});
  RunConfig cfg;
  cfg.experiment = static_cast<ExperimentKind>(
      enum_index(j, "config", "experiment", static_cast<int>(cfg.experiment),
                 {"solve_ocp", "mpc", "decay", "sweep"}));
  if (const json* p = section(j, "config", "problem")) parse_problem(*p, cfg.problem);
  if (const json* q = section(j, "config", "qoi")) parse_qoi(*q, cfg.qoi);
  if (const json* a = section(j, "config", "adapt")) parse_adapt(*a, cfg.adapt);
  if (const json* m = section(j, "config", "mpc")) parse_mpc(*m, cfg.mpc);
  if (const json* sw = section(j, "config", "sweep")) parse_sweep(*sw, cfg.sweep);
  if (const json* so = section(j, "config", "solver")) parse_solver(*so, cfg.solver);
  cfg.initial_time_points = get_int(j, "config", "initial_time_points", cfg.initial_time_points);
  cfg.initial_space_elems = get_int(j, "config", "initial_space_elems", cfg.initial_space_elems);
  int seed = get_int(j, "config", "seed", static_cast<int>(cfg.seed));
  if (seed < 0) fail("config.seed", "must be nonnegative");
  cfg.seed = static_cast<unsigned>(seed);
  cfg.out_dir = get_str(j, "config", "out_dir", cfg.out_dir);

  if (!(cfg.problem.alpha > 0.0)) fail("problem.alpha", "must be positive");
  if (cfg.qoi.kind == Qoi::Kind::Truncated &&
      (!(cfg.qoi.tau > 0.0) || cfg.qoi.tau > cfg.problem.T))
    fail("qoi.tau", "must lie in (0, T]");
  if (!(cfg.mpc.tau > 0.0) || cfg.mpc.tau > cfg.problem.T) fail("mpc.tau", "must lie in (0, T]");
  if (cfg.mpc.n_steps < 1) fail("mpc.n_steps", "must be at least 1");
  if (cfg.mpc.initial_time_points < 3) fail("mpc.initial_time_points", "need at least 3");
  if (cfg.mpc.initial_space_elems < 1) fail("mpc.initial_space_elems", "need at least 1");
  if (cfg.mpc.sim_time_points_per_tau < 2) fail("mpc.sim_time_points_per_tau", "need at least 2");
  if (cfg.mpc.sim_uniform_refs < 0) fail("mpc.sim_uniform_refs", "must be nonnegative");
  if (cfg.initial_time_points < 3) fail("initial_time_points", "need at least 3");
  if (cfg.initial_space_elems < 1) fail("initial_space_elems", "need at least 1");
  try {
    cfg.problem.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("problem: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

int run(const RunConfig& cfg0) {
  RunConfig cfg = cfg0;
  cfg.mpc.adapt = cfg.adapt;
  ensure_dir(cfg.out_dir);
  try {
    switch (cfg.experiment) {
      case ExperimentKind::SolveOcp:
        return run_solve_ocp(cfg);
      case ExperimentKind::Mpc:
        return run_mpc(cfg);
      case ExperimentKind::Decay:
        return run_decay(cfg);
      case ExperimentKind::Sweep:
        return run_sweep(cfg);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    write_text_file(path_join(cfg.out_dir, "error.txt"), std::string(e.what()) + "\n");
    return 2;
  }
  return 0;
}

}  // namespace mpcdwr
