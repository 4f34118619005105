#include "mtvf/verify.hpp"

#include "mtvf/errors.hpp"
#include "mtvf/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>

namespace mtvf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kDyadicDepth = 6;

// Keeps the largest violation together with where it happened.
struct Worst {
  double value = -std::numeric_limits<double>::infinity();
  double t = 0.0;
  double x = kNaN;
  std::string where;

  void offer(double v, double at_t, double at_x, std::string what = {}) {
    if (v > value) {
      value = v;
      t = at_t;
      x = at_x;
      where = std::move(what);
    }
  }
};

CheckReport finish(std::string name, const Worst& w, double tol) {
  CheckReport r;
  r.check_name = std::move(name);
  r.worst_violation = std::isfinite(w.value) ? w.value : 0.0;
  r.at_t = w.t;
  r.at_x = w.x;
  r.tolerance = tol;
  r.pass = r.worst_violation <= tol;
  r.detail = w.where;
  return r;
}

const SampledCurve* as_sampled(const Snapshot& s) { return std::get_if<SampledCurve>(&s.curve); }
const PiecewiseConstantCurve* as_pc(const Snapshot& s) { return std::get_if<PiecewiseConstantCurve>(&s.curve); }

// Largest component of a ^ b.
double wedge_norm(const Vec& a, const Vec& b, const Vec& c, const Vec& d) {
  double w = 0.0;
  for (int i = 0; i < a.size(); ++i)
    for (int j = i + 1; j < a.size(); ++j)
      w = std::max(w, std::abs((a[i] * b[j] - a[j] * b[i]) - (c[i] * d[j] - c[j] * d[i])));
  return w;
}

Vec zero_like(const Vec& v) { return Vec::Zero(v.size()); }

// Values of a curve: plateaus or nodes.
std::vector<Vec> points_of(const Curve& c) {
  if (const auto* pc = std::get_if<PiecewiseConstantCurve>(&c)) return {pc->values().begin(), pc->values().end()};
  const auto& s = std::get<SampledCurve>(c);
  std::vector<Vec> out;
  out.reserve(s.grid_n());
  for (int i = 0; i < s.grid_n(); ++i) out.push_back(s.at(i));
  return out;
}

// Variation carried by each dyadic interval, all levels concatenated.
std::vector<double> dyadic_measure(const std::vector<std::pair<double, double>>& atoms) {
  std::vector<double> bins((std::size_t{1} << (kDyadicDepth + 1)) - 1, 0.0);
  for (const auto& [x, mass] : atoms) {
    std::size_t offset = 0;
    for (int k = 0; k <= kDyadicDepth; ++k) {
      const std::size_t count = std::size_t{1} << k;
      const auto j = std::min(count - 1, static_cast<std::size_t>(std::max(0.0, x) * static_cast<double>(count)));
      bins[offset + j] += mass;
      offset += count;
    }
  }
  return bins;
}

std::string dyadic_name(std::size_t bin) {
  int k = 0;
  std::size_t offset = 0;
  while (bin >= offset + (std::size_t{1} << k)) offset += std::size_t{1} << k++;
  const std::size_t j = bin - offset;
  return "dyadic [" + std::to_string(j) + "/2^" + std::to_string(k) + ", " + std::to_string(j + 1) + "/2^" +
         std::to_string(k) + ")";
}

}  // namespace

std::string CheckReport::line() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-22s %s  worst=%.3e tol=%.3e at t=%.6g x=%.6g", check_name.c_str(),
                pass ? "PASS" : "FAIL", worst_violation, tolerance, at_t, at_x);
  std::string out = buf;
  if (!detail.empty()) out += "  (" + detail + ")";
  return out;
}

std::string CheckReport::csv_header() { return "check,pass,worst,at_t,at_x,tol"; }

std::string CheckReport::csv_row() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%d,%.17g,%.17g,%.17g,%.17g", check_name.c_str(), pass ? 1 : 0, worst_violation,
                at_t, at_x, tolerance);
  return buf;
}

CheckReport check_energy(const FlowTrajectory& traj) {
  if (traj.snapshots.size() < 2) throw Error(ErrorCode::InvalidArgument, "energy check needs at least two snapshots");
  // E_k = TV_k + dissipation up to t_k; the inequality for all pairs s < t
  // is E_t <= min_{s<t} E_s.
  Worst w;
  double cumulative = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    const auto& s = traj.snapshots[k];
    if (k > 0) cumulative += s.diag.dissipation;
    const double e = s.diag.tv + cumulative;
    if (k > 0) w.offer(e - best, s.t, kNaN);
    best = std::min(best, e);
  }
  return finish("energy", w, 1e-6 + 10.0 * traj.dt);
}

CheckReport check_monotone_variation(const FlowTrajectory& traj) {
  constexpr double tol = 1e-6;
  Worst w;
  if (traj.snapshots.empty()) return finish("monotone_variation", w, tol);
  const Manifold& m = traj.manifold;
  const auto& first = traj.snapshots.front();

  std::vector<double> best_atom;
  std::vector<double> best_bin;
  std::vector<double> locations;  // jump locations or face centres
  std::string kind = "jump";

  auto absorb = [&](double t, const std::vector<double>& sizes) {
    std::vector<std::pair<double, double>> atoms;
    for (std::size_t a = 0; a < sizes.size(); ++a) atoms.emplace_back(locations[a], sizes[a]);
    const auto bins = dyadic_measure(atoms);
    if (best_atom.empty()) {
      best_atom = sizes;
      best_bin = bins;
      return;
    }
    for (std::size_t a = 0; a < sizes.size(); ++a) {
      w.offer(sizes[a] - best_atom[a], t, locations[a], kind + " " + std::to_string(a));
      best_atom[a] = std::min(best_atom[a], sizes[a]);
    }
    for (std::size_t b = 0; b < bins.size(); ++b) {
      w.offer(bins[b] - best_bin[b], t, kNaN, dyadic_name(b));
      best_bin[b] = std::min(best_bin[b], bins[b]);
    }
  };

  if (const auto* s0 = as_sampled(first)) {
    const int n = s0->grid_n();
    kind = "face";
    for (int f = 0; f + 1 < n; ++f) locations.push_back((f + 0.5) * s0->spacing());
    for (const auto& snap : traj.snapshots) {
      const auto* s = as_sampled(snap);
      if (!s || s->grid_n() != n)
        throw Error(ErrorCode::IncompatibleSnapshots, "snapshots do not share one grid (t = " + std::to_string(snap.t) + ")");
      std::vector<double> sizes(n - 1);
      for (int f = 0; f + 1 < n; ++f) sizes[f] = m.dist(s->at(f), s->at(f + 1));
      absorb(snap.t, sizes);
    }
  } else {
    const auto& pc0 = std::get<PiecewiseConstantCurve>(first.curve);
    locations.assign(pc0.breakpoints().begin(), pc0.breakpoints().end());
    for (const auto& snap : traj.snapshots) {
      const auto* pc = as_pc(snap);
      if (!pc) throw Error(ErrorCode::IncompatibleSnapshots, "mixed step and sampled snapshots");
      std::vector<double> sizes(locations.size(), 0.0);
      const auto bps = pc->breakpoints();
      const auto vals = pc->values();
      for (std::size_t j = 0; j < bps.size(); ++j) {
        const auto it = std::find(locations.begin(), locations.end(), bps[j]);
        if (it == locations.end())
          throw Error(ErrorCode::IncompatibleSnapshots, "jump at x = " + std::to_string(bps[j]) + " appears at t = " +
                                                            std::to_string(snap.t));
        sizes[static_cast<std::size_t>(it - locations.begin())] = m.dist(vals[j], vals[j + 1]);
      }
      absorb(snap.t, sizes);
    }
  }
  return finish("monotone_variation", w, tol);
}

CheckReport check_variational_inequality(const FlowTrajectory& traj, const PiecewiseConstantCurve& v) {
  if (traj.manifold.kind() != ManifoldKind::Euclidean)
    throw Error(ErrorCode::NotNPC, "the variational inequality is only asserted on euclidean targets, got " +
                                       traj.manifold.id());
  if (!(v.manifold() == traj.manifold)) throw Error(ErrorCode::InvalidArgument, "test curve lives on another manifold");
  // Time stepping costs O(dt); the regularized flow only satisfies the
  // inequality for F_eps, and F_eps(v) <= TV(v) + eps.
  const double tol = 1e-4 + 10.0 * traj.dt + traj.epsilon;

  const double tv_v = tv_measure_pc(v).total;
  auto half_dist2 = [&](const Curve& c) {
    const double d = std::visit([&](const auto& u) { return l2_distance(u, v); }, c);
    return 0.5 * d * d;
  };
  Worst w;
  if (traj.snapshots.size() < 2) return finish("variational_inequality", w, tol);
  double prev_d = half_dist2(traj.snapshots.front().curve);
  for (std::size_t k = 1; k < traj.snapshots.size(); ++k) {
    const auto& s = traj.snapshots[k];
    const double d = half_dist2(s.curve);
    const double span = s.t - traj.snapshots[k - 1].t;
    // Integrating over (s, t] and using that TV(u) is nonincreasing gives
    // (D(t) - D(s)) / (t - s) + TV(u(t)) <= TV(v).
    if (span > 0.0) w.offer((d - prev_d) / span + total_variation(s.curve) - tv_v, s.t, kNaN);
    prev_d = d;
  }
  return finish("variational_inequality", w, tol);
}

SphereResiduals sphere_equivalence_residuals(const FlowTrajectory& traj) {
  const Manifold& m = traj.manifold;
  if (!m.is_spherical()) throw Error(ErrorCode::WrongManifold, "sphere identities need a sphere, got " + m.id());
  SphereResiduals r;
  double worst = -1.0;
  auto note = [&](double& slot, double value, double t, double x) {
    slot = std::max(slot, value);
    if (value > worst) {
      worst = value;
      r.at_t = t;
      r.at_x = x;
    }
  };

  for (const auto& snap : traj.snapshots) {
    const double t = snap.t;
    if (const auto* pc = as_pc(snap)) {
      const auto vals = pc->values();
      const auto& pieces = snap.z.pieces;
      if (pieces.size() != vals.size() || snap.velocity.size() != vals.size())
        throw Error(ErrorCode::IncompatibleSnapshots, "z pieces or velocities do not match the plateaus");
      for (std::size_t i = 0; i < vals.size(); ++i) {
        const auto& pz = pieces[i];
        const double mid = 0.5 * (pz.x_begin + pz.x_end);
        note(r.tangency, std::max(std::abs(pz.z_begin.dot(vals[i])), std::abs(pz.z_end.dot(vals[i]))), t, mid);
        // Inside a plateau (z ^ u)_x = z_x ^ u.
        const Vec zx = (pz.z_end - pz.z_begin) / (pz.x_end - pz.x_begin);
        note(r.wedge, wedge_norm(snap.velocity[i], vals[i], zx, vals[i]), t, mid);
        if (i + 1 < vals.size()) {
          const Vec& lo = vals[i];
          const Vec& hi = vals[i + 1];
          const Vec& z_lo = pz.z_end;
          const Vec& z_hi = pieces[i + 1].z_begin;
          const double x = pz.x_end;
          // No atom of (z ^ u)_x at a jump.
          note(r.wedge, wedge_norm(z_lo, lo, z_hi, hi), t, x);
          const Vec jump = hi - lo;
          const Vec z_star = 0.5 * (z_lo + z_hi);
          const Vec u_star = 0.5 * (lo + hi);
          note(r.duality, std::abs(jump.dot(z_star) - u_star.norm() * jump.norm()), t, x);
        }
      }
    } else {
      const auto& s = std::get<SampledCurve>(snap.curve);
      const int n = s.grid_n();
      const double h = s.spacing();
      const auto& faces = snap.z.face_values;
      if (faces.size() != static_cast<std::size_t>(n + 1) || snap.velocity.size() != static_cast<std::size_t>(n))
        throw Error(ErrorCode::IncompatibleSnapshots, "face fluxes or velocities do not match the grid");
      std::vector<Vec> u_star(n - 1);
      for (int f = 0; f + 1 < n; ++f) {
        const Vec a = s.at(f);
        const Vec b = s.at(f + 1);
        const Vec& z = faces[f + 1];
        const double x = (f + 0.5) * h;
        u_star[f] = 0.5 * (a + b);
        note(r.tangency, std::abs(z.dot(u_star[f])), t, x);
        const Vec ux = (b - a) / h;
        note(r.duality, std::abs(ux.dot(z) - u_star[f].norm() * ux.norm()), t, x);
      }
      // The wedge flux uses the geodesic midpoint u* / |u*|: with it the
      // face terms match the intrinsic velocity exactly, while the bare
      // ambient average is short by the factor cos(d / 2).
      std::vector<Vec> mid(n - 1);
      for (int f = 0; f + 1 < n; ++f) {
        const double len = u_star[f].norm();
        mid[f] = len > 0.0 ? Vec(u_star[f] / len) : u_star[f];
      }
      for (int i = 0; i < n; ++i) {
        const Vec ui = s.at(i);
        // Cell balance of the flux z ^ mid, zero on the boundary faces.
        Vec right_z = zero_like(ui), right_u = zero_like(ui), left_z = zero_like(ui), left_u = zero_like(ui);
        if (i + 1 < n) right_z = faces[i + 1], right_u = mid[i];
        if (i > 0) left_z = faces[i], left_u = mid[i - 1];
        const double mass = s.control_volume(i);
        double res = 0.0;
        const Vec& vel = snap.velocity[i];
        for (int a = 0; a < ui.size(); ++a)
          for (int b = a + 1; b < ui.size(); ++b) {
            const double lhs = vel[a] * ui[b] - vel[b] * ui[a];
            const double flux_r = right_z[a] * right_u[b] - right_z[b] * right_u[a];
            const double flux_l = left_z[a] * left_u[b] - left_z[b] * left_u[a];
            res = std::max(res, std::abs(lhs - (flux_r - flux_l) / mass));
          }
        note(r.wedge, res, t, s.node(i));
      }
    }
  }
  return r;
}

CheckReport check_sphere_equivalence(const FlowTrajectory& traj) {
  const auto r = sphere_equivalence_residuals(traj);
  const bool exact = !traj.snapshots.empty() && as_pc(traj.snapshots.front());
  const double tol = exact ? 1e-8 : 1e-5 / traj.epsilon;
  Worst w;
  w.offer(r.tangency, r.at_t, r.at_x, "z.u");
  w.offer(r.wedge, r.at_t, r.at_x, "wedge");
  w.offer(r.duality, r.at_t, r.at_x, "u_x.z* = |u*||u_x|");
  // at_t / at_x belong to the overall worst residual.
  w.t = r.at_t;
  w.x = r.at_x;
  return finish("sphere_equivalence", w, tol);
}

std::vector<CheckReport> check_z_field(const FlowTrajectory& traj) {
  Worst bound, boundary, jumps;
  const Manifold& m = traj.manifold;
  for (const auto& snap : traj.snapshots) {
    const double t = snap.t;
    if (const auto* pc = as_pc(snap)) {
      const auto& pieces = snap.z.pieces;
      if (pieces.empty()) throw Error(ErrorCode::IncompatibleSnapshots, "step snapshot without z pieces");
      for (const auto& p : pieces) {
        bound.offer(p.z_begin.norm() - 1.0, t, p.x_begin);
        bound.offer(p.z_end.norm() - 1.0, t, p.x_end);
      }
      boundary.offer(pieces.front().z_begin.lpNorm<Eigen::Infinity>(), t, 0.0);
      boundary.offer(pieces.back().z_end.lpNorm<Eigen::Infinity>(), t, 1.0);
      const auto vals = pc->values();
      for (std::size_t j = 0; j + 1 < vals.size(); ++j) {
        const auto pair = m.unit_tangent_pair(vals[j], vals[j + 1]);
        const double x = pc->breakpoints()[j];
        jumps.offer((pieces[j].z_end - pair.at_start).lpNorm<Eigen::Infinity>(), t, x, "z^-");
        jumps.offer((pieces[j + 1].z_begin - pair.at_end).lpNorm<Eigen::Infinity>(), t, x, "z^+");
      }
    } else {
      const auto& faces = snap.z.face_values;
      if (faces.empty()) throw Error(ErrorCode::IncompatibleSnapshots, "sampled snapshot without face fluxes");
      for (std::size_t f = 0; f < faces.size(); ++f) bound.offer(faces[f].norm() - 1.0, t, snap.z.face_x[f]);
      boundary.offer(faces.front().lpNorm<Eigen::Infinity>(), t, 0.0);
      boundary.offer(faces.back().lpNorm<Eigen::Infinity>(), t, 1.0);
    }
  }
  return {finish("z_bound", bound, 1e-8), finish("z_boundary_zero", boundary, 0.0), finish("z_jump_tangents", jumps, 1e-9)};
}

CheckReport check_p_energy(const FlowTrajectory& traj, double p) {
  if (!(traj.epsilon > 0.0) || !(traj.dt > 0.0))
    throw Error(ErrorCode::InvalidArgument, "p-energy is defined for regularized trajectories only");
  Worst w;
  double prev = 0.0;
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    const auto* s = as_sampled(traj.snapshots[k]);
    if (!s) throw Error(ErrorCode::IncompatibleSnapshots, "p-energy needs sampled snapshots");
    const double e = regularized_p_energy(*s, traj.epsilon, p);
    if (k > 0) {
      const double steps = std::max(1.0, std::round((traj.snapshots[k].t - traj.snapshots[k - 1].t) / traj.dt));
      w.offer((e - prev) / steps, traj.snapshots[k].t, kNaN);
    }
    prev = e;
  }
  return finish("p_energy_" + std::to_string(static_cast<int>(p)), w, 1e-7);
}

std::optional<StoppingTime> detect_stopping(const FlowTrajectory& traj) {
  constexpr double tol = 1e-10;
  const auto& snaps = traj.snapshots;
  // Scan backwards for the longest settled tail.
  std::optional<StoppingTime> found;
  for (std::size_t k = snaps.size(); k-- > 0;) {
    if (!(total_variation(snaps[k].curve) < tol)) break;
    const auto ref = points_of(snaps[k].curve);
    bool settled = true;
    for (std::size_t j = k + 1; j < snaps.size() && settled; ++j)
      for (const auto& p : points_of(snaps[j].curve))
        if ((p - ref.front()).lpNorm<Eigen::Infinity>() > tol) {
          settled = false;
          break;
        }
    if (!settled) break;
    found = StoppingTime{snaps[k].t, ref.front(), k};
  }
  return found;
}

const CrossSolverEntry& CrossSolverTable::at(double epsilon, int grid_n) const {
  for (const auto& e : entries)
    if (e.epsilon == epsilon && e.grid_n == grid_n) return e;
  throw Error(ErrorCode::InvalidArgument, "no table entry for this (epsilon, grid)");
}

bool CrossSolverTable::refinement_monotone(std::span<const double> eps_list, std::span<const int> grid_list,
                                           double slack) const {
  const std::size_t levels = std::min(eps_list.size(), grid_list.size());
  for (std::size_t k = 1; k < levels; ++k)
    if (at(eps_list[k], grid_list[k]).sup_error > (1.0 + slack) * at(eps_list[k - 1], grid_list[k - 1]).sup_error)
      return false;
  return true;
}

CrossSolverTable cross_solver_compare(const PiecewiseConstantCurve& u0, std::span<const double> eps_list,
                                      std::span<const int> grid_list, const CrossSolverOptions& opt) {
  if (!is_rad(u0).rad) throw Error(ErrorCode::RadViolation, "cross-solver comparison needs rad data");
  CrossSolverTable table;
  for (double eps : eps_list)
    for (int n : grid_list) table.entries.push_back({eps, n, 0.0, 0.0, 0.0});

  auto run_entry = [&](CrossSolverEntry& e) {
    FlowConfig cfg;
    cfg.manifold = u0.manifold();
    cfg.epsilon = e.epsilon;
    cfg.grid_n = e.grid_n;
    cfg.t_max = opt.t_max;
    cfg.snapshot_every = opt.snapshot_every;
    cfg.scheme = opt.scheme;
    const auto reg = run_regularized(mollify(u0, e.grid_n, opt.ramp_cells / (e.grid_n - 1)), cfg);

    ExactPcOptions eo;
    eo.t_max = opt.t_max;
    eo.output_times = reg.times();
    const auto exact = run_exact_pc(u0, eo);
    std::map<double, const PiecewiseConstantCurve*> by_time;
    for (const auto& s : exact.snapshots) by_time[s.t] = &std::get<PiecewiseConstantCurve>(s.curve);
    const auto& last = std::get<PiecewiseConstantCurve>(exact.snapshots.back().curve);

    for (const auto& s : reg.snapshots) {
      const auto it = by_time.find(s.t);
      // After extinction the exact solution is its final constant.
      const PiecewiseConstantCurve& ref = it != by_time.end() ? *it->second : last;
      const double err = l2_distance(std::get<SampledCurve>(s.curve), ref);
      if (err > e.sup_error) {
        e.sup_error = err;
        e.at_t = s.t;
      }
    }
    e.final_error = l2_distance(std::get<SampledCurve>(reg.snapshots.back().curve), last);
  };

  const auto count = static_cast<long long>(table.entries.size());
  if (opt.parallel) {
    // Independent runs, one per entry; failures are rethrown after the loop.
    std::vector<std::exception_ptr> errors(table.entries.size());
#pragma omp parallel for schedule(dynamic) num_threads(kernels::max_threads())
    for (long long k = 0; k < count; ++k) {
      try {
        run_entry(table.entries[static_cast<std::size_t>(k)]);
      } catch (...) {
        errors[static_cast<std::size_t>(k)] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    for (auto& e : table.entries) run_entry(e);
  }
  return table;
}

}  // namespace mtvf
