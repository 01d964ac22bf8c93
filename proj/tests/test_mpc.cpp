#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mpcdwr/mpc.hpp"

using namespace mpcdwr;

namespace {

GridPtr shared(SpaceTimeGrid g) { return std::make_shared<const SpaceTimeGrid>(std::move(g)); }

GridPtr uniform_grid(double T, int n_time_points, double L, int n_elems) {
  return shared(make_space_time_grid(make_uniform_time_grid(0.0, T, n_time_points),
                                     make_uniform_mesh(L, n_elems)));
}

}  // namespace

TEST_CASE("decay fit recovers an exact exponential") {
  std::vector<double> ts, vs;
  for (int i = 0; i <= 12; ++i) {
    double t = 0.25 * i;
    ts.push_back(t);
    vs.push_back(std::exp(-2.0 * t));
  }
  auto fit = fit_decay(ts, vs, 0.0, 3.0, 1e-30);
  REQUIRE(fit.ok);
  CHECK(fit.points_used == 13);
  CHECK(fit.slope == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK(std::abs(fit.intercept) <= 1e-9);
}

TEST_CASE("decay fit on a constant series is flat") {
  std::vector<double> ts{0.0, 1.0, 2.0, 3.0};
  std::vector<double> vs(4, 3.7);
  auto fit = fit_decay(ts, vs, 0.0, 3.0, 1e-12);
  REQUIRE(fit.ok);
  CHECK(std::abs(fit.slope) <= 1e-12);
  CHECK(fit.intercept == doctest::Approx(std::log(3.7)).epsilon(1e-12));
}

TEST_CASE("decay fit excludes the sub-floor tail") {
  std::vector<double> ts, vs;
  for (int i = 0; i <= 10; ++i) {
    double t = 0.5 * i;
    ts.push_back(t);
    vs.push_back(t <= 2.0 ? std::exp(-t) : 1e-15);
  }
  auto fit = fit_decay(ts, vs, 0.0, 5.0, 1e-10);
  REQUIRE(fit.ok);
  CHECK(fit.points_used == 5);
  CHECK(fit.slope == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("decay fit refuses short series and bad windows") {
  std::vector<double> ts{0.0, 1.0};
  std::vector<double> vs{1.0, 0.5};
  CHECK_FALSE(fit_decay(ts, vs, 0.0, 2.0, 1e-12).ok);
  CHECK(fit_decay(ts, vs, 0.0, 2.0, 1e-12).points_used == 2);
  CHECK_THROWS_AS(fit_decay(ts, vs, 2.0, 2.0, 1e-12), std::invalid_argument);
  CHECK_THROWS_AS(fit_decay(ts, vs, 0.0, 2.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(fit_decay(ts, {1.0}, 0.0, 2.0, 1e-12), std::invalid_argument);
}

TEST_CASE("decay report on a zero sensitivity triple") {
  ProblemSpec spec;
  spec.T = 1.0;
  auto grid = uniform_grid(1.0, 5, 3.0, 4);
  auto base = solve_ocp(grid, spec);
  SecondarySolution chi;
  chi.v = DgTrajectory::zeros(grid);
  chi.q = ControlTrajectory::zeros(grid, spec.control);
  chi.z = DgTrajectory::zeros(grid);
  Indicators ind;
  ind.time = Vec(grid->time.slabs() + 1, 0.0);
  for (int m = 0; m <= grid->time.slabs(); ++m)
    ind.space.push_back(Vec(grid->mesh(m).n_elems(), 0.0));
  auto rep = decay_report(spec, base, chi, ind, 0.25);
  REQUIRE(rep.rows.size() == 4);
  for (const auto& row : rep.rows) {
    CHECK(row.v_norm == 0.0);
    CHECK(row.q_norm == 0.0);
    CHECK(row.z_norm == 0.0);
    CHECK(row.eta_k_abs == 0.0);
    CHECK(row.eta_h_abs == 0.0);
  }
  CHECK_FALSE(rep.fit_q.ok);
  CHECK(rep.fit_q.points_used == 0);
}

TEST_CASE("decay report fits steepen as the control penalty shrinks") {
  auto grid = uniform_grid(4.0, 17, 3.0, 8);
  Qoi qoi = Qoi::truncated(0.5);
  auto slope_for = [&](double alpha) {
    ProblemSpec spec;
    spec.T = 4.0;
    spec.alpha = alpha;
    auto base = solve_ocp(grid, spec);
    auto chi = solve_secondary(spec, base, qoi);
    auto ind = estimate(spec, base, chi, qoi);
    auto rep = decay_report(spec, base, chi, ind, 0.5, 1e-12);
    REQUIRE(rep.fit_q.ok);
    return rep.fit_q.slope;
  };
  double s1 = slope_for(1e-1);
  double s2 = slope_for(1e-2);
  CHECK(s1 < -0.5);
  CHECK(s2 < s1);
}

TEST_CASE("degenerate single-step loop reproduces the open-loop cost") {
  ProblemSpec spec;
  spec.T = 1.0;
  spec.alpha = 1e-2;
  MpcConfig cfg;
  cfg.tau = 0.5;
  cfg.n_steps = 1;
  cfg.initial_time_points = 5;
  cfg.initial_space_elems = 4;
  cfg.sim_time_points_per_tau = 3;
  cfg.sim_uniform_refs = 0;
  cfg.adapt.max_rounds = 0;
  auto res = mpc_run(spec, cfg);
  REQUIRE(res.steps.size() == 1);
  CHECK(res.steps[0].adapt_rounds == 0);

  auto grid = uniform_grid(1.0, 5, 3.0, 4);
  auto ol = solve_ocp(grid, spec);
  double expected = eval_cost(ol.x, ol.u, spec, 0.0, 0.5);
  CHECK(res.closed_loop_cost ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(res.steps[0].qoi_value ==
        doctest::Approx(eval_qoi(ol.x, ol.u, spec, Qoi::truncated(0.5))).epsilon(1e-12));
}

TEST_CASE("mpc loop is deterministic and covers the implemented window") {
  ProblemSpec spec;
  spec.T = 2.0;
  spec.alpha = 1e-3;
  MpcConfig cfg;
  cfg.tau = 0.5;
  cfg.n_steps = 2;
  cfg.initial_time_points = 5;
  cfg.initial_space_elems = 4;
  cfg.sim_time_points_per_tau = 11;
  cfg.sim_uniform_refs = 2;
  cfg.adapt.mode = AdaptMode::TimeOnly;
  cfg.adapt.max_time_points = 9;
  cfg.adapt.max_rounds = 4;
  auto res = mpc_run(spec, cfg);
  REQUIRE(res.steps.size() == 2);
  CHECK(res.closed_loop_cost > 0.0);
  CHECK(res.steps[0].step_cost + res.steps[1].step_cost ==
        doctest::Approx(res.closed_loop_cost).epsilon(1e-15));
  CHECK(res.sim_state.grid->time.points.front() == doctest::Approx(0.0));
  CHECK(res.sim_state.grid->time.points.back() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(res.sim_state.vals.size() == res.sim_state.grid->time.points.size());
  for (const auto& st : res.steps) {
    CHECK(st.time_points <= 9);
    CHECK(std::isfinite(st.qoi_value));
  }

  auto rerun = mpc_run(spec, cfg);
  CHECK(rerun.closed_loop_cost == res.closed_loop_cost);
  for (size_t k = 0; k < res.steps.size(); ++k) {
    CHECK(rerun.steps[k].qoi_value == res.steps[k].qoi_value);
    CHECK(rerun.steps[k].time_points == res.steps[k].time_points);
  }

  // The implemented control stays constant across simulation slabs that fall
  // inside one open-loop slab.
  const auto& gt = res.sim_control.grid->time;
  for (int m = 2; m <= gt.slabs(); ++m) {
    double mid_prev = 0.5 * (gt.t(m - 2) + gt.t(m - 1));
    double mid = 0.5 * (gt.t(m - 1) + gt.t(m));
    int k_prev = static_cast<int>(mid_prev / cfg.tau);
    int k_cur = static_cast<int>(mid / cfg.tau);
    if (k_prev != k_cur) continue;
    const auto& ocp = *res.steps[k_cur].ocp_grid;
    if (ocp.time.slab_of(mid_prev - k_cur * cfg.tau) == ocp.time.slab_of(mid - k_cur * cfg.tau))
      CHECK(res.sim_control.vals[m] == res.sim_control.vals[m - 1]);
  }
}

TEST_CASE("truncated refinement leaves late-horizon meshes coarse in every step") {
  ProblemSpec spec;
  spec.T = 4.0;
  spec.alpha = 1e-3;
  MpcConfig cfg;
  cfg.tau = 0.5;
  cfg.n_steps = 2;
  cfg.initial_time_points = 9;
  cfg.initial_space_elems = 4;
  cfg.sim_time_points_per_tau = 11;
  cfg.sim_uniform_refs = 3;
  cfg.adapt.mode = AdaptMode::SpaceOnly;
  cfg.adapt.max_space_dofs_total = 450;
  cfg.adapt.max_rounds = 12;
  auto res = mpc_run(spec, cfg);
  for (const auto& st : res.steps) {
    CHECK(st.space_dofs <= 450);
    int tail = 0;
    const auto& g = *st.ocp_grid;
    for (int m = 0; m <= g.time.slabs(); ++m)
      if (g.time.t(m) > 2.0 + 1e-9) tail += g.mesh(m).n_nodes();
    CHECK(tail <= 45);
  }
}

TEST_CASE("mpc configs are validated") {
  ProblemSpec spec;
  spec.T = 10.0;
  MpcConfig cfg;
  cfg.tau = 12.0;
  CHECK_THROWS_AS(mpc_run(spec, cfg), std::invalid_argument);
  cfg.tau = 0.5;
  cfg.n_steps = 0;
  CHECK_THROWS_AS(mpc_run(spec, cfg), std::invalid_argument);
  cfg.n_steps = 1;
  cfg.initial_time_points = 2;
  CHECK_THROWS_AS(mpc_run(spec, cfg), std::invalid_argument);
}
