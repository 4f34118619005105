// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. `mtvf_acceptance 3 8` runs only the listed criteria.

#include "mtvf/app.hpp"
#include "mtvf/flow.hpp"
#include "mtvf/kernels.hpp"
#include "mtvf/lab.hpp"
#include "mtvf/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <string>
#include <vector>

using namespace mtvf;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

const PiecewiseConstantCurve& pc(const Snapshot& s) { return std::get<PiecewiseConstantCurve>(s.curve); }

struct Outcome {
  bool pass;
  std::string detail;
};

// ---------------------------------------------------------------- shared suite
//
// 20 seeded random rad staircases per manifold, each run through the exact
// step-curve solver and through the regularized solver on the mollified
// datum, both up to t_max = 4 TV(u0).

constexpr int kSuiteSize = 20;
constexpr double kSuiteEps = 1e-8;
constexpr int kSuiteGrid = 401;
constexpr double kSuiteRamp = 0.02;

struct SuiteRun {
  Manifold manifold = Manifold::euclidean(1);
  std::uint64_t seed = 0;
  PiecewiseConstantCurve datum = PiecewiseConstantCurve::constant(Manifold::euclidean(1), vec({0}));
  double t_max = 0.0;
  FlowTrajectory exact;
  FlowTrajectory regularized;
};

const std::vector<SuiteRun>& suite() {
  static const std::vector<SuiteRun> runs = [] {
    const std::vector<Manifold> manifolds = {Manifold::euclidean(2), Manifold::sphere(3), Manifold::circle(),
                                             Manifold::cylinder()};
    std::vector<SuiteRun> out;
    kernels::map_indexed<SuiteRun>(
        manifolds.size() * kSuiteSize,
        [&](std::size_t k) {
          SuiteRun r;
          r.manifold = manifolds[k / kSuiteSize];
          r.seed = 1000 + k % kSuiteSize;
          r.datum = app::generate_staircase(r.manifold, 2 + static_cast<int>(k % 4), r.seed);
          r.t_max = 4.0 * tv_measure_pc(r.datum).total;
          ExactPcOptions opt;
          opt.t_max = r.t_max;
          opt.snapshot_dt = 0.01;
          r.exact = run_exact_pc(r.datum, opt);
          FlowConfig cfg;
          cfg.manifold = r.manifold;
          cfg.epsilon = kSuiteEps;
          cfg.grid_n = kSuiteGrid;
          cfg.t_max = r.t_max;
          cfg.snapshot_every = 5;
          r.regularized = run_regularized(mollify(r.datum, kSuiteGrid, kSuiteRamp), cfg);
          return r;
        },
        out, true);
    return out;
  }();
  return runs;
}

std::string label(const SuiteRun& r) { return r.manifold.id() + " seed " + std::to_string(r.seed); }

char buf[512];

// ---------------------------------------------------------------- criteria

Outcome single_jump_extinction() {
  const auto r1 = Manifold::euclidean(1);
  double worst_exact = 0.0, worst_rel = 0.0;
  for (double x0 : {0.25, 0.5, 0.75}) {
    const double expected = 2.0 * 1.0 * x0 * (1.0 - x0);  // s0 = 1: values -1, +1
    const PiecewiseConstantCurve u0(r1, {x0}, {vec({-1}), vec({1})});
    const auto ex = detect_stopping(run_exact_pc(u0, 2.0, 1e-9));
    if (!ex) return {false, "exact run never stopped"};
    worst_exact = std::max(worst_exact, std::abs(ex->t_star - expected));

    FlowConfig cfg;
    cfg.manifold = r1;
    cfg.epsilon = 1e-3;
    cfg.grid_n = 1601;
    cfg.t_max = 2.0;
    cfg.snapshot_every = 1;
    const auto reg = detect_stopping(run_regularized(mollify(u0, 1601, 0.01), cfg));
    if (!reg) return {false, "regularized run never stopped"};
    worst_rel = std::max(worst_rel, std::abs(reg->t_star - expected) / expected);
  }
  std::snprintf(buf, sizeof buf, "exact |T*-2s0x0(1-x0)| = %.2e (tol 1e-8), regularized rel. error %.2f%% (tol 5%%)",
                worst_exact, 100 * worst_rel);
  return {worst_exact <= 1e-8 && worst_rel <= 0.05, buf};
}

Outcome jump_immobility() {
  // Every recorded breakpoint is one of the initial ones, bit for bit.
  std::size_t checked = 0;
  auto run_one = [&](const PiecewiseConstantCurve& u0, double t_max) {
    ExactPcOptions opt;
    opt.t_max = t_max;
    opt.snapshot_dt = 0.005;
    const auto traj = run_exact_pc(u0, opt);
    const std::set<double> initial(u0.breakpoints().begin(), u0.breakpoints().end());
    for (const auto& s : traj.snapshots)
      for (double b : pc(s).breakpoints()) {
        ++checked;
        if (!initial.contains(b)) return false;
      }
    return true;
  };
  const auto r1 = Manifold::euclidean(1);
  for (double x0 : {0.25, 0.5, 0.75})
    if (!run_one(PiecewiseConstantCurve(r1, {x0}, {vec({-1}), vec({1})}), 1.0)) return {false, "line jump moved"};
  const auto s = Manifold::sphere(3);
  if (!run_one(PiecewiseConstantCurve(s, {0.37}, {vec({1, 0, 0}), vec({0, 1, 0})}), 1.0))
    return {false, "sphere jump moved"};
  for (const auto& r : suite())
    if (!run_one(r.datum, r.t_max)) return {false, "jump moved in " + label(r)};
  return {true, std::to_string(checked) + " recorded breakpoints all equal an initial one exactly"};
}

Outcome energy_inequality() {
  double worst = -std::numeric_limits<double>::infinity();
  std::string where;
  int failures = 0;
  for (const auto& r : suite())
    for (const auto* t : {&r.exact, &r.regularized}) {
      const auto rep = check_energy(*t);
      if (!rep.pass) ++failures;
      if (rep.worst_violation - rep.tolerance > worst) {
        worst = rep.worst_violation - rep.tolerance;
        where = label(r) + " " + t->solver;
      }
    }
  std::snprintf(buf, sizeof buf, "%zu runs, %d failures, worst violation - tol = %.2e (%s)", 2 * suite().size(),
                failures, worst, where.c_str());
  return {failures == 0, buf};
}

Outcome pointwise_monotonicity() {
  double worst = 0.0;
  int failures = 0;
  std::string where = "-";
  for (const auto& r : suite())
    for (const auto* t : {&r.exact, &r.regularized}) {
      const auto rep = check_monotone_variation(*t);
      if (!rep.pass) ++failures;
      if (rep.worst_violation > worst) {
        worst = rep.worst_violation;
        where = label(r) + " " + t->solver;
      }
    }
  std::snprintf(buf, sizeof buf, "%zu runs, %d failures, worst increase %.2e (tol 1e-6, %s)", 2 * suite().size(),
                failures, worst, where.c_str());
  return {failures == 0, buf};
}

Outcome z_field_structure() {
  double worst[3] = {0, 0, 0};
  int runs = 0, failures = 0;
  for (const auto& r : suite()) {
    if (!r.manifold.is_spherical()) continue;
    ++runs;
    const auto reps = check_z_field(r.exact);
    for (int k = 0; k < 3; ++k) {
      worst[k] = std::max(worst[k], reps[k].worst_violation);
      if (!reps[k].pass) ++failures;
    }
  }
  std::snprintf(buf, sizeof buf,
                "%d exact sphere/circle runs: |z| - 1 <= %.1e (tol 1e-8), boundary %.1e (exact 0), jump tangents %.1e "
                "(tol 1e-9)",
                runs, worst[0], worst[1], worst[2]);
  return {failures == 0 && runs > 0, buf};
}

Outcome sphere_equivalence() {
  SphereResiduals worst;
  int runs = 0;
  for (const auto& r : suite()) {
    if (!r.manifold.is_spherical()) continue;
    ++runs;
    const auto res = sphere_equivalence_residuals(r.exact);
    worst.tangency = std::max(worst.tangency, res.tangency);
    worst.wedge = std::max(worst.wedge, res.wedge);
    worst.duality = std::max(worst.duality, res.duality);
  }
  std::snprintf(buf, sizeof buf, "%d exact runs: z.u %.1e, wedge %.1e, u_x.z* - |u*||u_x| %.1e (tol 1e-8)", runs,
                worst.tangency, worst.wedge, worst.duality);
  return {runs > 0 && std::max({worst.tangency, worst.wedge, worst.duality}) <= 1e-8, buf};
}

Outcome variational_inequality() {
  const auto r2 = Manifold::euclidean(2);
  std::vector<PiecewiseConstantCurve> tests;
  for (int k = 0; k < 10; ++k) tests.push_back(app::generate_staircase(r2, 1 + k % 5, 5000 + k));
  int checks = 0, failures = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& r : suite()) {
    if (!(r.manifold == r2)) continue;
    for (const auto* t : {&r.exact, &r.regularized})
      for (const auto& v : tests) {
        const auto rep = check_variational_inequality(*t, v);
        ++checks;
        if (!rep.pass) ++failures;
        worst = std::max(worst, rep.worst_violation - rep.tolerance);
      }
  }
  std::snprintf(buf, sizeof buf, "%d (trajectory, v) pairs on euclidean:2, %d failures, worst violation - tol = %.2e",
                checks, failures, worst);
  return {checks == 400 && failures == 0, buf};
}

Outcome cross_solver() {
  const auto s = Manifold::sphere(3);
  const Vec e1 = vec({1, 0, 0});
  const Vec a1 = s.exp(e1, vec({0, 0.6, 0}));
  const Vec a2 = s.exp(a1, 0.5 * s.tangent_projection(a1, vec({0, 0, 1})).normalized());
  const PiecewiseConstantCurve u0(s, {0.3, 0.7}, {e1, a1, a2});
  const std::vector<double> eps = {1e-1, 1e-2, 1e-3};
  const std::vector<int> grids = {101, 401, 1601};
  CrossSolverOptions opt;
  opt.t_max = 1.5;
  const auto table = cross_solver_compare(u0, eps, grids, opt);
  std::string diag;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    const auto& e = table.at(eps[k], grids[k]);
    std::snprintf(buf, sizeof buf, "%s(%g,%d) sup %.2e", k ? ", " : "", e.epsilon, e.grid_n, e.sup_error);
    diag += buf;
  }
  const double final_error = table.at(eps.back(), grids.back()).final_error;
  const bool mono = table.refinement_monotone(eps, grids);
  std::snprintf(buf, sizeof buf, "; monotone %s, final error %.2e (tol 1e-3)", mono ? "yes" : "no", final_error);
  return {mono && final_error <= 1e-3, diag + buf};
}

constexpr int kPinnedFirstPositiveGap = 19;

Outcome semiconvexity_gap() {
  const int n0 = lab::first_positive_gap(100);
  bool positive_tail = true;
  for (int n = n0; n <= 100; ++n) positive_tail = positive_tail && lab::semiconvexity_gap(n) > 0.0;
  bool asymptotic = true;
  for (int n = n0; n <= 100; ++n) {
    const double x = 1.0 / (8.0 * n * (n + 1));
    asymptotic = asymptotic && std::asin(std::tan(x)) > x + x * x * x / 3;
  }
  const double g1 = lab::semiconvexity_gap(1);
  std::snprintf(buf, sizeof buf, "gap(1) = %.3e, first positive n0 = %d (pinned %d), gap(100) = %.3e", g1, n0,
                kPinnedFirstPositiveGap, lab::semiconvexity_gap(100));
  return {g1 < 0.0 && n0 == kPinnedFirstPositiveGap && positive_tail && asymptotic, buf};
}

Outcome hessian_comparison() {
  const auto sweep = lab::hessian_sweep(Manifold::sphere(3), 1000, 0.999 * std::numbers::pi / 2, 7);
  std::snprintf(buf, sizeof buf, "%d configurations: min(estimate - h_N(r)) = %.2e (tol -1e-4), tangential gap %.2e",
                sweep.configurations, sweep.worst_margin, sweep.worst_tangential);
  return {sweep.configurations == 1000 && sweep.worst_margin >= -1e-4 && sweep.worst_tangential <= 1e-4, buf};
}

Outcome finite_time_stopping() {
  int stopped = 0, total = 0;
  double latest = 0.0;
  std::string missing;
  for (const auto& r : suite())
    for (const auto* t : {&r.exact, &r.regularized}) {
      ++total;
      const auto st = detect_stopping(*t);
      if (st && st->t_star < r.t_max) {
        ++stopped;
        latest = std::max(latest, st->t_star / r.t_max);
      } else if (missing.empty()) {
        missing = " first miss: " + label(r) + " " + t->solver;
      }
    }
  // Scalar staircases settle at their mean.
  double worst_mean = 0.0;
  Rng rng(31);
  for (int k = 0; k < 50; ++k) {
    const int m = 2 + k % 6;
    std::vector<double> bps, vals;
    for (int i = 1; i < m; ++i) bps.push_back((i + 0.8 * (rng.uniform() - 0.5)) / m);
    for (int i = 0; i < m; ++i) vals.push_back(rng.uniform(-1.0, 1.0));
    const auto sigma = ScalarStaircase::make(bps, vals);
    const auto traj = run_scalar_tv(sigma, 4.0 * sigma.total_variation() + 1e-12);
    if (!traj.stopped.back()) return {false, "scalar staircase " + std::to_string(k) + " never stopped"};
    worst_mean = std::max(worst_mean, std::abs(traj.states.back().values[0] - sigma.mean()));
  }
  std::snprintf(buf, sizeof buf, "%d/%d suite runs constant before 4 TV (latest at %.0f%% of t_max)%s; 50 scalar runs stop at the mean within %.1e (tol 1e-8)",
                stopped, total, 100 * latest, missing.c_str(), worst_mean);
  return {stopped == total && worst_mean <= 1e-8, buf};
}

constexpr double kPinnedStabilityRatio = 1.1613400421949973;

Outcome geodesic_stability() {
  const auto sweep = lab::stability_sweep(Manifold::sphere(3), 1.0, 10000, 2024);
  std::snprintf(buf, sizeof buf, "max ratio over 10^4 quadruples = %.17g (pinned %.17g)", sweep.max_ratio,
                kPinnedStabilityRatio);
  return {std::isfinite(sweep.max_ratio) && sweep.max_ratio == kPinnedStabilityRatio, buf};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "single-jump extinction", 30, single_jump_extinction},
      {2, "jump immobility", 30, jump_immobility},
      {3, "energy inequality", 120, energy_inequality},
      {4, "pointwise monotonicity", 120, pointwise_monotonicity},
      {5, "z-field structure", 120, z_field_structure},
      {6, "sphere equivalence", 120, sphere_equivalence},
      {7, "NPC variational inequality", 120, variational_inequality},
      {8, "cross-solver consistency", 300, cross_solver},
      {9, "semiconvexity gap", 1, semiconvexity_gap},
      {10, "Hessian comparison", 60, hessian_comparison},
      {11, "finite-time stopping", 120, finite_time_stopping},
      {12, "geodesic endpoint stability", 120, geodesic_stability},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  // The shared suite counts against the criteria that use it (3-7, 11).
  double suite_s = 0.0;
  if (only.empty() || std::any_of(only.begin(), only.end(), [](int c) { return (c >= 2 && c <= 7) || c == 11; })) {
    const auto t0 = std::chrono::steady_clock::now();
    suite();
    suite_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("suite: %zu runs per solver built in %.1f s (eps %g, n %d)\n", suite().size(), suite_s, kSuiteEps,
                kSuiteGrid);
  }

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.contains(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool uses_suite = (c.id >= 3 && c.id <= 7) || c.id == 11;
    if (uses_suite) secs += suite_s;
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("[%s] criterion %2d %-28s %s (%.2f s, budget %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.budget_s, in_time ? "" : ", OVER BUDGET");
    std::fflush(stdout);
  }
  std::printf("%s: %d criteria failed\n", failed ? "FAILED" : "ALL PASSED", failed);
  return failed ? 1 : 0;
}
