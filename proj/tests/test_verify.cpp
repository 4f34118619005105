#include "mtvf/errors.hpp"
#include "mtvf/flow.hpp"
#include "mtvf/verify.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace mtvf;
using std::numbers::pi;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no exception");
  return ErrorCode::IoError;
}

const PiecewiseConstantCurve& pc(const Snapshot& s) { return std::get<PiecewiseConstantCurve>(s.curve); }

PiecewiseConstantCurve with_value(const PiecewiseConstantCurve& c, std::size_t i, const Vec& value) {
  std::vector<double> bps(c.breakpoints().begin(), c.breakpoints().end());
  std::vector<Vec> vals(c.values().begin(), c.values().end());
  vals[i] = value;
  return PiecewiseConstantCurve(c.manifold(), bps, vals);
}

FlowTrajectory sphere_exact(double t_max = 0.3) {
  const auto s = Manifold::sphere(3);
  const PiecewiseConstantCurve u0(s, {0.3, 0.7}, {vec({1, 0, 0}), vec({0, 1, 0}), vec({0, 0, 1})});
  ExactPcOptions opt;
  opt.t_max = t_max;
  opt.snapshot_dt = 0.01;
  return run_exact_pc(u0, opt);
}

FlowTrajectory line_exact(double t_max = 0.4) {
  const auto r1 = Manifold::euclidean(1);
  const PiecewiseConstantCurve u0(r1, {0.3, 0.6}, {vec({0}), vec({1}), vec({-0.5})});
  ExactPcOptions opt;
  opt.t_max = t_max;
  opt.snapshot_dt = 0.005;
  return run_exact_pc(u0, opt);
}

FlowTrajectory sphere_regularized() {
  const auto s = Manifold::sphere(3);
  const PiecewiseConstantCurve u0(s, {0.3, 0.7}, {vec({1, 0, 0}), vec({0, 1, 0}), vec({0, 0, 1})});
  FlowConfig cfg;
  cfg.manifold = s;
  // Pointwise monotonicity only holds up to O(eps) for the regularized
  // flow, hence the tiny epsilon.
  cfg.epsilon = 1e-6;
  cfg.grid_n = 201;
  cfg.t_max = 0.1;
  cfg.snapshot_every = 2;
  return run_regularized(mollify(u0, 201, 0.2), cfg);
}

FlowTrajectory constant_trajectory() {
  const auto s = Manifold::sphere(3);
  // Both solvers stop at once on constant data; stop_tv = 0 keeps the
  // regularized one recording.
  FlowConfig cfg;
  cfg.manifold = s;
  cfg.stop_tv = 0.0;
  cfg.epsilon = 1e-3;
  cfg.grid_n = 51;
  cfg.t_max = 0.1;
  return run_regularized(mollify(PiecewiseConstantCurve::constant(s, vec({0, 0, 1})), 51, 0.1), cfg);
}

}  // namespace

TEST_SUITE("verifier") {

TEST_CASE("check report formatting") {
  CheckReport r{"energy", false, 2e-3, 0.5, 0.25, 1e-6, "bump"};
  CHECK(r.line().find("FAIL") != std::string::npos);
  CHECK(r.csv_row().rfind("energy,0,", 0) == 0);
  CHECK(CheckReport::csv_header() == "check,pass,worst,at_t,at_x,tol");
}

TEST_CASE("genuine trajectories pass every applicable check") {
  const auto ex = sphere_exact();
  CHECK(check_energy(ex).pass);
  CHECK(check_monotone_variation(ex).pass);
  CHECK(check_sphere_equivalence(ex).pass);
  for (const auto& r : check_z_field(ex)) CHECK(r.pass);

  const auto reg = sphere_regularized();
  CHECK(check_energy(reg).pass);
  CHECK(check_monotone_variation(reg).pass);
  CHECK(check_p_energy(reg, 2.0).pass);
  CHECK(check_p_energy(reg, 4.0).pass);
  CHECK(check_sphere_equivalence(reg).pass);
  for (const auto& r : check_z_field(reg)) CHECK(r.pass);
}

TEST_CASE("single jump run satisfies the energy identity") {
  // Steepest descent: TV + dissipation stays constant up to quadrature.
  const auto r1 = Manifold::euclidean(1);
  ExactPcOptions opt;
  opt.t_max = 0.3;
  opt.snapshot_dt = 0.01;
  const auto traj = run_exact_pc(PiecewiseConstantCurve(r1, {0.5}, {vec({-1}), vec({1})}), opt);
  double e = 0.0;
  for (const auto& s : traj.snapshots) e += s.diag.dissipation;
  CHECK(traj.snapshots.back().diag.tv + e == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(check_energy(traj).pass);
}

TEST_CASE("constant trajectory") {
  const auto traj = constant_trajectory();
  const auto e = check_energy(traj);
  CHECK(e.pass);
  CHECK(e.worst_violation <= 0.0);
  const auto r = sphere_equivalence_residuals(traj);
  CHECK(r.tangency == 0.0);
  CHECK(r.wedge == 0.0);
  CHECK(r.duality == 0.0);
  const auto stop = detect_stopping(traj);
  REQUIRE(stop.has_value());
  CHECK(stop->t_star == 0.0);
  CHECK(stop->snapshot == 0);
}

TEST_CASE("corrupted energy fails at the bumped snapshot") {
  auto traj = sphere_exact();
  const std::size_t k = 7;
  traj.snapshots[k].diag.tv += 10.0 * (1e-6 + 10.0 * traj.dt);
  const auto r = check_energy(traj);
  CHECK_FALSE(r.pass);
  CHECK(r.at_t == traj.snapshots[k].t);
}

TEST_CASE("corrupted jump size fails monotonicity") {
  auto traj = line_exact();
  const std::size_t k = 10;
  const auto& prev = pc(traj.snapshots[k - 1]);
  const auto& c = pc(traj.snapshots[k]);
  // First jump grows 10x the tolerance above its previous size.
  const double grown = std::abs(prev.values()[1][0] - prev.values()[0][0]) + 1e-5;
  traj.snapshots[k].curve = with_value(c, 0, vec({c.values()[1][0] - grown}));
  const auto r = check_monotone_variation(traj);
  CHECK_FALSE(r.pass);
  CHECK(r.at_t == traj.snapshots[k].t);
}

TEST_CASE("corrupted sample fails monotonicity") {
  auto traj = sphere_regularized();
  auto& snap = traj.snapshots[5];
  const auto& s = std::get<SampledCurve>(snap.curve);
  std::vector<double> coords(s.coords().begin(), s.coords().end());
  // Push node 60 away from node 61 along the face direction.
  const Vec dir = (s.at(60) - s.at(61)).normalized();
  Vec moved = s.at(60) + 1e-4 * dir;
  moved = traj.manifold.project(moved);
  for (int j = 0; j < 3; ++j) coords[180 + j] = moved[j];
  snap.curve = SampledCurve(traj.manifold, s.grid_n(), coords);
  CHECK_FALSE(check_monotone_variation(traj).pass);
}

TEST_CASE("time reversal breaks monotonicity") {
  auto traj = sphere_exact(0.1);
  std::reverse(traj.snapshots.begin(), traj.snapshots.end());
  const double t_end = traj.snapshots.front().t;
  for (auto& s : traj.snapshots) s.t = t_end - s.t;
  CHECK_FALSE(check_monotone_variation(traj).pass);
  CHECK_FALSE(check_energy(traj).pass);
}

TEST_CASE("incompatible snapshots") {
  auto traj = sphere_regularized();
  const auto s = Manifold::sphere(3);
  traj.snapshots[3].curve = mollify(PiecewiseConstantCurve::constant(s, vec({0, 0, 1})), 101, 0.1);
  CHECK(code_of([&] { check_monotone_variation(traj); }) == ErrorCode::IncompatibleSnapshots);

  // A jump appearing where there was none.
  auto ex = line_exact();
  const auto r1 = Manifold::euclidean(1);
  ex.snapshots[4].curve = PiecewiseConstantCurve(r1, {0.3, 0.45, 0.6}, {vec({0}), vec({1}), vec({1.1}), vec({-0.5})});
  CHECK(code_of([&] { check_monotone_variation(ex); }) == ErrorCode::IncompatibleSnapshots);
}

TEST_CASE("variational inequality on the line") {
  const auto traj = line_exact();
  const auto r1 = Manifold::euclidean(1);
  const auto& first = pc(traj.snapshots.front());
  const auto& last = pc(traj.snapshots.back());
  CHECK(check_variational_inequality(traj, first).pass);
  CHECK(check_variational_inequality(traj, last).pass);
  CHECK(check_variational_inequality(traj, PiecewiseConstantCurve::constant(r1, vec({3}))).pass);
  CHECK(check_variational_inequality(traj, PiecewiseConstantCurve(r1, {0.5}, {vec({2}), vec({-2})})).pass);
}

TEST_CASE("corrupted trajectory fails the variational inequality") {
  // v = u0. Raising the middle plateau of the first recorded state by eta
  // adds 2 eta to TV(u): 10x the tolerance for eta = 5e-4.
  auto traj = line_exact();
  const auto v = pc(traj.snapshots.front());
  traj.snapshots[1].curve = with_value(v, 1, vec({1.0 + 5e-4}));
  const auto r = check_variational_inequality(traj, v);
  CHECK_FALSE(r.pass);
  CHECK(r.at_t == traj.snapshots[1].t);
}

TEST_CASE("variational inequality guards") {
  const auto ex = sphere_exact();
  CHECK(code_of([&] { check_variational_inequality(ex, pc(ex.snapshots.front())); }) == ErrorCode::NotNPC);
  const auto line = line_exact();
  CHECK(code_of([&] { check_variational_inequality(line, pc(ex.snapshots.front())); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("corrupted velocity fails the sphere identities") {
  auto traj = sphere_exact();
  auto& snap = traj.snapshots[4];
  const Vec u = pc(snap).values()[1];
  const Vec t = traj.manifold.tangent_projection(u, vec({0.3, -0.2, 0.9})).normalized();
  snap.velocity[1] += 10.0 * 1e-8 * t;
  const auto r = check_sphere_equivalence(traj);
  CHECK_FALSE(r.pass);
  CHECK(r.at_t == snap.t);
}

TEST_CASE("corrupted face flux fails the sphere identities") {
  auto traj = sphere_regularized();
  auto& snap = traj.snapshots[6];
  const auto& s = std::get<SampledCurve>(snap.curve);
  // A normal component on one face breaks z . u* = 0.
  const Vec n = 0.5 * (s.at(80) + s.at(81));
  snap.z.face_values[81] += 10.0 * (1e-5 / traj.epsilon) * n / n.norm();
  CHECK_FALSE(check_sphere_equivalence(traj).pass);
}

TEST_CASE("sphere identities refuse other manifolds") {
  CHECK(code_of([] { check_sphere_equivalence(line_exact()); }) == ErrorCode::WrongManifold);
}

TEST_CASE("corrupted z field") {
  SUBCASE("jump value") {
    auto traj = sphere_exact();
    traj.snapshots[3].z.pieces[0].z_end += vec({0, 0, 1e-8});
    const auto r = check_z_field(traj);
    CHECK_FALSE(r[2].pass);
  }
  SUBCASE("boundary value") {
    auto traj = sphere_exact();
    traj.snapshots[3].z.pieces[0].z_begin = vec({0, 1e-12, 0});
    CHECK_FALSE(check_z_field(traj)[1].pass);
  }
  SUBCASE("bound") {
    auto traj = sphere_regularized();
    auto& z = traj.snapshots[2].z.face_values[100];
    z *= (1.0 + 1e-7) / z.norm();
    CHECK_FALSE(check_z_field(traj)[0].pass);
  }
}

TEST_CASE("corrupted p-energy") {
  // Snapshot k replaced by snapshot k - 1 plus a kink in a flat stretch.
  auto traj = sphere_regularized();
  const std::size_t k = 8;
  const auto& s = std::get<SampledCurve>(traj.snapshots[k - 1].curve);
  std::vector<double> coords(s.coords().begin(), s.coords().end());
  const int node = 190;
  Vec p = s.at(node);
  p = traj.manifold.exp(p, traj.manifold.tangent_projection(p, vec({0.3, 0.3, 0.3})).normalized() * 1e-3);
  for (int j = 0; j < 3; ++j) coords[node * 3 + j] = p[j];
  traj.snapshots[k].curve = SampledCurve(traj.manifold, s.grid_n(), coords);
  const auto r = check_p_energy(traj, 2.0);
  CHECK_FALSE(r.pass);
  CHECK(r.at_t == traj.snapshots[k].t);
  CHECK(code_of([] { check_p_energy(sphere_exact(), 2.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("stopping detection") {
  const auto r1 = Manifold::euclidean(1);
  const PiecewiseConstantCurve u0(r1, {0.5}, {vec({0}), vec({2})});
  const auto stop = detect_stopping(run_exact_pc(u0, 1.0, 1e-9));
  REQUIRE(stop.has_value());
  CHECK(stop->t_star == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(stop->value[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_FALSE(detect_stopping(run_exact_pc(u0, 0.4, 1e-9)).has_value());
}

TEST_CASE("checks are deterministic") {
  const auto traj = sphere_regularized();
  CHECK(check_energy(traj).csv_row() == check_energy(traj).csv_row());
  CHECK(check_monotone_variation(traj).csv_row() == check_monotone_variation(traj).csv_row());
}

TEST_CASE("cross-solver comparison") {
  const auto s = Manifold::sphere(3);
  const std::vector<double> eps = {1e-1, 1e-2};
  const std::vector<int> grids = {51, 201};
  CrossSolverOptions opt;
  opt.t_max = 0.3;

  const auto flat = cross_solver_compare(PiecewiseConstantCurve::constant(s, vec({0, 1, 0})), eps, grids, opt);
  CHECK(flat.entries.size() == 4);
  for (const auto& e : flat.entries) {
    CHECK(e.sup_error == 0.0);
    CHECK(e.final_error == 0.0);
  }

  const auto r1 = Manifold::euclidean(1);
  const PiecewiseConstantCurve jump(r1, {0.5}, {vec({0}), vec({1})});
  const std::vector<double> eps3 = {1e-1, 1e-2, 1e-3};
  const std::vector<int> grids3 = {101, 401, 1601};
  opt.t_max = 0.5;
  const auto table = cross_solver_compare(jump, eps3, grids3, opt);
  CHECK(table.refinement_monotone(eps3, grids3));
  CHECK(table.at(1e-3, 1601).sup_error < table.at(1e-1, 101).sup_error);
  CHECK(code_of([&] { table.at(0.5, 3); }) == ErrorCode::InvalidArgument);
}

}  // TEST_SUITE
