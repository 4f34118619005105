#include "mtvf/errors.hpp"
#include "mtvf/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace mtvf {

namespace {

constexpr double kEventTimeTol = 1e-12;
constexpr double kMinStep = 1e-14;
constexpr double kStepFraction = 0.1;  // a pair may close by at most this share of its distance per step

std::vector<double> output_targets(double t_max, double snapshot_dt, std::vector<double> extra) {
  std::vector<double> out;
  if (snapshot_dt > 0.0) {
    for (long k = 1;; ++k) {
      const double t = static_cast<double>(k) * snapshot_dt;
      if (t >= t_max) break;
      out.push_back(t);
    }
  }
  for (double t : extra)
    if (t > 0.0 && t < t_max) out.push_back(t);
  out.push_back(t_max);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Plateau ODE on a fixed jump set.
class PlateauSystem {
public:
  PlateauSystem(Manifold m, std::vector<double> breakpoints, std::vector<Vec> values)
      : m_(m), bps_(std::move(breakpoints)), a_(std::move(values)) {}

  std::size_t size() const { return a_.size(); }
  const std::vector<Vec>& values() const { return a_; }
  double length(std::size_t i) const {
    const double lo = i == 0 ? 0.0 : bps_[i - 1];
    const double hi = i + 1 == a_.size() ? 1.0 : bps_[i];
    return hi - lo;
  }

  // Velocities at a (projected) state; returns the dissipation rate.
  double rhs(const std::vector<Vec>& a, std::vector<Vec>& vel) const {
    const double bound = 2.0 * m_.rad();
    vel.assign(a.size(), m_.zero());
    for (std::size_t i = 0; i + 1 < a.size(); ++i) {
      const double d = m_.dist(a[i], a[i + 1]);
      if (!(d < bound))
        throw Error(ErrorCode::RadViolation, "jump " + std::to_string(i) + " reached 2 rad_N during the flow");
      const auto t = m_.unit_tangent_pair(a[i], a[i + 1]);
      vel[i] += t.at_start;
      vel[i + 1] -= t.at_end;
    }
    double rate = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      vel[i] /= length(i);
      rate += length(i) * vel[i].squaredNorm();
    }
    return rate;
  }

  double min_gap(const std::vector<Vec>& a) const {
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < a.size(); ++i) g = std::min(g, m_.dist(a[i], a[i + 1]));
    return g;
  }

  // True if no pair is within tol and no chord flipped relative to a_.
  bool admissible(const std::vector<Vec>& b, double tol) const {
    for (std::size_t i = 0; i + 1 < b.size(); ++i) {
      if (m_.dist(b[i], b[i + 1]) <= tol) return false;
      if ((a_[i + 1] - a_[i]).dot(b[i + 1] - b[i]) <= 0.0) return false;
    }
    return true;
  }

  struct Trial {
    std::vector<Vec> state;
    double dissipation;
  };

  // One RK4 step of the extension f(P(x)); stages are projected only for
  // evaluation. Empty if any stage comes within tol of a collision.
  std::optional<Trial> rk4(const std::vector<Vec>& k1, double r1, double h, double tol) const {
    const std::size_t n = a_.size();
    std::vector<Vec> x(n), p(n), k2, k3, k4;
    auto stage = [&](const std::vector<Vec>& k, double c, std::vector<Vec>& out) -> std::optional<double> {
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = a_[i] + c * k[i];
        p[i] = m_.project(x[i]);
      }
      if (!admissible(p, tol)) return std::nullopt;
      return rhs(p, out);
    };
    const auto r2 = stage(k1, 0.5 * h, k2);
    if (!r2) return std::nullopt;
    const auto r3 = stage(k2, 0.5 * h, k3);
    if (!r3) return std::nullopt;
    const auto r4 = stage(k3, h, k4);
    if (!r4) return std::nullopt;
    Trial t{std::vector<Vec>(n), h / 6.0 * (r1 + 2.0 * *r2 + 2.0 * *r3 + *r4)};
    for (std::size_t i = 0; i < n; ++i) t.state[i] = m_.project(a_[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    if (!admissible(t.state, tol)) return std::nullopt;
    return t;
  }

  void set(std::vector<Vec> a) { a_ = std::move(a); }

  // Merges every pair with distance <= tol into its geodesic midpoint.
  void merge(double tol) {
    std::vector<double> bps;
    std::vector<Vec> vals{a_[0]};
    for (std::size_t i = 0; i + 1 < a_.size(); ++i) {
      if (m_.dist(vals.back(), a_[i + 1]) <= tol) {
        vals.back() = m_.geodesic_point(vals.back(), a_[i + 1], 0.5);
      } else {
        bps.push_back(bps_[i]);
        vals.push_back(a_[i + 1]);
      }
    }
    bps_ = std::move(bps);
    a_ = std::move(vals);
  }

  PiecewiseConstantCurve curve() const { return PiecewiseConstantCurve(m_, bps_, a_); }

private:
  Manifold m_;
  std::vector<double> bps_;
  std::vector<Vec> a_;
};

Snapshot pc_snapshot(double t, const PiecewiseConstantCurve& c, double dissipation, bool stopped) {
  const auto tv = tv_measure_pc(c);
  double max_jump = 0.0;
  for (const auto& j : tv.jumps) max_jump = std::max(max_jump, j.size);
  return Snapshot{t, c, reconstruct_z_pc(c), pc_velocity(c), {tv.total, dissipation, max_jump, stopped}};
}

}  // namespace

FlowTrajectory run_exact_pc(const PiecewiseConstantCurve& u0, double t_max, double merge_tol) {
  ExactPcOptions opt;
  opt.t_max = t_max;
  opt.merge_tol = merge_tol;
  return run_exact_pc(u0, opt);
}

FlowTrajectory run_exact_pc(const PiecewiseConstantCurve& u0, const ExactPcOptions& opt) {
  if (!(opt.t_max >= 0.0)) throw Error(ErrorCode::InvalidArgument, "t_max must be non-negative");
  if (!(opt.merge_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "merge_tol must be positive");
  if (!(opt.max_step > 0.0)) throw Error(ErrorCode::InvalidArgument, "max_step must be positive");
  const Manifold& m = u0.manifold();
  const auto rad = is_rad(u0);
  if (!rad.rad)
    throw Error(ErrorCode::RadViolation, "jump " + std::to_string(rad.worst_index) + " of size " +
                                             std::to_string(rad.worst_distance) + " violates the rad condition");

  FlowTrajectory traj;
  traj.manifold = m;
  traj.solver = "exact-pc";

  PlateauSystem sys(m, {u0.breakpoints().begin(), u0.breakpoints().end()}, {u0.values().begin(), u0.values().end()});
  traj.snapshots.push_back(pc_snapshot(0.0, u0, 0.0, sys.size() == 1));
  if (sys.size() == 1) return traj;
  sys.merge(opt.merge_tol);

  const auto targets = output_targets(opt.t_max, opt.snapshot_dt, opt.output_times);
  std::size_t next_target = 0;
  double t = 0.0;
  double pending = 0.0;
  std::vector<Vec> k1;

  while (sys.size() > 1 && t < opt.t_max) {
    const double r1 = sys.rhs(sys.values(), k1);
    double speed = 0.0;
    for (std::size_t i = 0; i + 1 < sys.size(); ++i) speed = std::max(speed, k1[i].norm() + k1[i + 1].norm());
    const double gap = sys.min_gap(sys.values());
    const double to_target = targets[next_target] - t;
    double h = std::min({opt.max_step, kStepFraction * gap / speed, to_target});
    const bool hits_target = h == to_target;
    if (h < kMinStep && !hits_target)
      throw Error(ErrorCode::StepUnderflow, "step size collapsed to " + std::to_string(h) + " at t = " + std::to_string(t));

    auto trial = sys.rk4(k1, r1, h, opt.merge_tol);
    bool event = false;
    if (!trial) {
      // A pair collides inside the step: bisect for the last admissible time.
      double lo = 0.0;
      double hi = h;
      std::optional<PlateauSystem::Trial> best;
      while (hi - lo > kEventTimeTol) {
        const double mid = 0.5 * (lo + hi);
        auto attempt = sys.rk4(k1, r1, mid, opt.merge_tol);
        if (attempt) {
          lo = mid;
          best = std::move(attempt);
        } else {
          hi = mid;
        }
      }
      h = lo;
      event = true;
      if (best) trial = std::move(best);
    }

    if (trial) {
      sys.set(std::move(trial->state));
      pending += trial->dissipation;
    }
    t = (hits_target && !event) ? targets[next_target] : t + h;

    if (event) {
      const double close = std::max(2.0 * opt.merge_tol, sys.min_gap(sys.values()) + 4.0 * kEventTimeTol * speed);
      sys.merge(close);
    }
    const bool stopped = sys.size() == 1;
    const bool at_target = next_target < targets.size() && t >= targets[next_target];
    if (event || stopped || at_target) {
      auto snap = pc_snapshot(t, sys.curve(), pending, stopped);
      if (t > traj.snapshots.back().t) {
        traj.snapshots.push_back(std::move(snap));
        pending = 0.0;
      } else if (traj.snapshots.size() > 1) {
        // Merge located at the time of the previous record: refresh it.
        snap.diag.dissipation += traj.snapshots.back().diag.dissipation;
        traj.snapshots.back() = std::move(snap);
        pending = 0.0;
      }
    }
    while (next_target < targets.size() && t >= targets[next_target]) ++next_target;
    if (next_target >= targets.size()) break;
  }
  return traj;
}

}  // namespace mtvf
