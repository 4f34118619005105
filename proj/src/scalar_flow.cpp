#include "mtvf/errors.hpp"
#include "mtvf/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mtvf {

namespace {

double sign(double x) { return (x > 0.0) - (x < 0.0); }

// Plateau speeds (zeta_right - zeta_left) / length.
std::vector<double> staircase_velocity(const ScalarStaircase& s) {
  const std::size_t n = s.values.size();
  std::vector<double> v(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double right = i + 1 < n ? sign(s.values[i + 1] - s.values[i]) : 0.0;
    const double left = i > 0 ? sign(s.values[i] - s.values[i - 1]) : 0.0;
    v[i] = (right - left) / s.length(i);
  }
  return v;
}

// Length-weighted averaging of the plateaus whose separating jumps are
// flagged; conserves the integral exactly up to rounding.
ScalarStaircase merge_flagged(const ScalarStaircase& s, const std::vector<bool>& closing) {
  ScalarStaircase out;
  double mass = s.length(0) * s.values[0];
  double len = s.length(0);
  for (std::size_t j = 0; j < s.breakpoints.size(); ++j) {
    if (!closing[j]) {
      out.values.push_back(mass / len);
      out.breakpoints.push_back(s.breakpoints[j]);
      mass = 0.0;
      len = 0.0;
    }
    mass += s.length(j + 1) * s.values[j + 1];
    len += s.length(j + 1);
  }
  out.values.push_back(mass / len);
  return out;
}

std::vector<double> targets_for(double t_max, const ScalarOptions& opt) {
  std::vector<double> out;
  if (opt.snapshot_dt > 0.0)
    for (long k = 1; static_cast<double>(k) * opt.snapshot_dt < t_max; ++k) out.push_back(static_cast<double>(k) * opt.snapshot_dt);
  for (double t : opt.output_times)
    if (t > 0.0 && t < t_max) out.push_back(t);
  out.push_back(t_max);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

ScalarTrajectory run_scalar_tv(const ScalarStaircase& sigma0, double t_max, const ScalarOptions& opt) {
  if (!(t_max >= 0.0)) throw Error(ErrorCode::InvalidArgument, "t_max must be non-negative");
  ScalarStaircase s = ScalarStaircase::make(sigma0.breakpoints, sigma0.values);
  ScalarTrajectory out;
  auto record = [&](double t, double diss, bool stopped) {
    out.times.push_back(t);
    out.states.push_back(s);
    out.velocities.push_back(stopped ? std::vector<double>(s.values.size(), 0.0) : staircase_velocity(s));
    out.dissipation.push_back(diss);
    out.stopped.push_back(stopped);
  };
  record(0.0, 0.0, s.values.size() == 1);
  if (s.values.size() == 1) return out;

  const auto targets = targets_for(t_max, opt);
  std::size_t next = 0;
  double t = 0.0;
  double pending = 0.0;
  while (s.values.size() > 1 && next < targets.size()) {
    const auto v = staircase_velocity(s);
    // Earliest jump closure.
    double tau = std::numeric_limits<double>::infinity();
    std::vector<double> closure(s.breakpoints.size(), tau);
    for (std::size_t j = 0; j < s.breakpoints.size(); ++j) {
      const double gap = s.values[j + 1] - s.values[j];
      const double rate = v[j + 1] - v[j];
      if (gap * rate < 0.0) closure[j] = -gap / rate;
      tau = std::min(tau, closure[j]);
    }
    const double to_target = targets[next] - t;
    const bool event = tau <= to_target;
    const double step = event ? tau : to_target;

    double rate = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) rate += s.length(i) * v[i] * v[i];
    pending += rate * step;
    for (std::size_t i = 0; i < v.size(); ++i) s.values[i] += v[i] * step;
    t = event ? t + step : targets[next];

    if (event) {
      std::vector<bool> closing(s.breakpoints.size());
      for (std::size_t j = 0; j < closing.size(); ++j) closing[j] = closure[j] <= tau * (1.0 + 1e-12) + 1e-15;
      s = merge_flagged(s, closing);
    }
    const bool stopped = s.values.size() == 1;
    const bool at_target = t >= targets[next];
    if (event || at_target || stopped) {
      if (!out.times.empty() && t <= out.times.back()) {
        out.states.back() = s;
        out.velocities.back() = stopped ? std::vector<double>(s.values.size(), 0.0) : staircase_velocity(s);
        out.dissipation.back() += pending;
        out.stopped.back() = stopped;
      } else {
        record(t, pending, stopped);
      }
      pending = 0.0;
    }
    while (next < targets.size() && t >= targets[next]) ++next;
  }
  return out;
}

FlowTrajectory flow_on_geodesic(const Manifold& m, const Vec& p, const Vec& q, const ScalarStaircase& sigma0,
                                double t_max, const ScalarOptions& opt) {
  for (double s : sigma0.values)
    if (s < 0.0 || s > 1.0) throw Error(ErrorCode::InvalidArgument, "sigma must take values in [0, 1]");
  const double length = m.dist(p, q);
  if (length >= m.injectivity_radius())
    throw Error(ErrorCode::BeyondInjectivityRadius, "geodesic endpoints beyond inj_N");

  // The geodesic has speed `length` on [0, 1]; the flow lives in arc length.
  ScalarStaircase arc = sigma0;
  for (double& s : arc.values) s *= length;
  const auto scalar = run_scalar_tv(length > 0.0 ? arc : ScalarStaircase::make({}, {0.0}), t_max, opt);

  FlowTrajectory traj;
  traj.manifold = m;
  traj.solver = "geodesic";
  for (std::size_t k = 0; k < scalar.times.size(); ++k) {
    const auto& st = scalar.states[k];
    ScalarStaircase sigma = st;
    if (length > 0.0)
      for (double& s : sigma.values) s = std::clamp(s / length, 0.0, 1.0);
    else
      sigma = ScalarStaircase::make({}, {sigma0.values.empty() ? 0.0 : sigma0.values[0]});
    const auto curve = compose_with_geodesic(m, p, q, sigma);

    std::vector<Vec> vel;
    vel.reserve(curve.plateau_count());
    const auto vals = curve.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double speed = length > 0.0 && i < scalar.velocities[k].size() ? scalar.velocities[k][i] : 0.0;
      Vec dir = m.zero();
      if (speed != 0.0) {
        if (m.dist(vals[i], q) > 0.0) dir = m.unit_tangent_pair(vals[i], q).at_start;
        else dir = -m.unit_tangent_pair(vals[i], p).at_start;
      }
      vel.push_back(speed * dir);
    }
    const auto tv = tv_measure_pc(curve);
    double max_jump = 0.0;
    for (const auto& j : tv.jumps) max_jump = std::max(max_jump, j.size);
    traj.snapshots.push_back(Snapshot{scalar.times[k], curve, reconstruct_z_pc(curve), std::move(vel),
                                      {tv.total, scalar.dissipation[k], max_jump, scalar.stopped[k]}});
  }
  return traj;
}

}  // namespace mtvf
