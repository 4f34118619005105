#include "mtvf/errors.hpp"
#include "mtvf/flow.hpp"
#include "mtvf/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mtvf {

namespace {

constexpr double kTvGrowthTol = 1e-7;
constexpr int kMaxImplicitIterations = 60;
constexpr double kImplicitTol = 1e-13;
double auto_dt(Scheme scheme, double cfl, double h, double eps) {
  return scheme == Scheme::Explicit ? cfl * h * h * eps : cfl * h;
}

struct FaceData {
  std::vector<double> dist, v, c, z;
  explicit FaceData(const kernels::Grid& g)
      : dist(g.n - 1), v(g.n - 1), c(g.n - 1), z(static_cast<std::size_t>(g.n - 1) * g.dim) {}
  void compute(const Manifold& m, const kernels::Grid& g, std::span<const double> u, double eps, bool par) {
    if (par) kernels::omp::face_geometry(m, g, u, eps, dist, v, c, z);
    else kernels::serial::face_geometry(m, g, u, eps, dist, v, c, z);
  }
  double length() const {
    double s = 0.0;
    for (double d : dist) s += d;
    return s;
  }
  double longest() const { return dist.empty() ? 0.0 : *std::max_element(dist.begin(), dist.end()); }
};

ZField faces_to_field(const kernels::Grid& g, const FaceData& fd) {
  ZField out;
  out.kind = ZField::Kind::Faces;
  out.face_x.reserve(g.n + 1);
  out.face_values.reserve(g.n + 1);
  out.face_x.push_back(0.0);
  out.face_values.push_back(Vec::Zero(g.dim));
  for (int f = 0; f < g.n - 1; ++f) {
    out.face_x.push_back((f + 0.5) * g.h);
    Vec zf(g.dim);
    for (int k = 0; k < g.dim; ++k) zf[k] = fd.z[static_cast<std::size_t>(f) * g.dim + k];
    out.face_values.push_back(zf);
  }
  out.face_x.push_back(1.0);
  out.face_values.push_back(Vec::Zero(g.dim));
  return out;
}

std::vector<Vec> rows_of(const kernels::Grid& g, const std::vector<double>& flat) {
  std::vector<Vec> out;
  out.reserve(g.n);
  for (int i = 0; i < g.n; ++i) {
    Vec r(g.dim);
    for (int k = 0; k < g.dim; ++k) r[k] = flat[static_cast<std::size_t>(i) * g.dim + k];
    out.push_back(r);
  }
  return out;
}

Snapshot make_snapshot(const Manifold& m, const kernels::Grid& g, double t, const std::vector<double>& u,
                       const FaceData& fd, double dissipation, bool stopped) {
  std::vector<double> vel(u.size());
  kernels::serial::velocity(m, g, u, fd.c, vel);
  Snapshot s{t, SampledCurve(m, g.n, u), faces_to_field(g, fd), rows_of(g, vel), {}};
  s.diag = {fd.length(), dissipation, fd.longest(), stopped};
  return s;
}

}  // namespace

double FlowConfig::resolved_dt() const {
  if (dt) return *dt;
  if (grid_n < 2) throw Error(ErrorCode::InvalidArgument, "grid_n must be at least 2");
  return auto_dt(scheme, cfl_factor, 1.0 / (grid_n - 1), epsilon);
}

ZField regularized_flux(const SampledCurve& u, double epsilon) {
  const kernels::Grid g{u.grid_n(), u.dim(), u.spacing()};
  FaceData fd(g);
  fd.compute(u.manifold(), g, u.coords(), epsilon, false);
  return faces_to_field(g, fd);
}

std::vector<Vec> regularized_velocity(const SampledCurve& u, double epsilon) {
  const kernels::Grid g{u.grid_n(), u.dim(), u.spacing()};
  FaceData fd(g);
  fd.compute(u.manifold(), g, u.coords(), epsilon, false);
  std::vector<double> vel(static_cast<std::size_t>(g.n) * g.dim);
  kernels::serial::velocity(u.manifold(), g, u.coords(), fd.c, vel);
  return rows_of(g, vel);
}

double regularized_p_energy(const SampledCurve& u, double epsilon, double p) {
  const kernels::Grid g{u.grid_n(), u.dim(), u.spacing()};
  FaceData fd(g);
  fd.compute(u.manifold(), g, u.coords(), epsilon, false);
  double e = 0.0;
  for (double v : fd.v) e += std::pow(v, p) * g.h;
  return e;
}

FlowTrajectory run_regularized(const SampledCurve& u0, const FlowConfig& cfg) {
  if (!(u0.manifold() == cfg.manifold))
    throw Error(ErrorCode::InvalidArgument, "initial curve is not on " + cfg.manifold.id());
  if (!(cfg.epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (!(cfg.t_max >= 0.0)) throw Error(ErrorCode::InvalidArgument, "t_max must be non-negative");
  if (cfg.snapshot_every < 1) throw Error(ErrorCode::InvalidArgument, "snapshot_every must be at least 1");
  if (!cfg.dt && !(cfg.cfl_factor > 0.0 && cfg.cfl_factor <= 0.5))
    throw Error(ErrorCode::InvalidArgument, "cfl_factor must lie in (0, 0.5]");

  const Manifold& m = cfg.manifold;
  const kernels::Grid g{u0.grid_n(), u0.dim(), u0.spacing()};
  const double dt = cfg.dt ? *cfg.dt : auto_dt(cfg.scheme, cfg.cfl_factor, g.h, cfg.epsilon);
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");

  FlowTrajectory traj;
  traj.manifold = m;
  traj.solver = cfg.scheme == Scheme::Explicit ? "regularized-explicit" : "regularized-semi-implicit";
  traj.dt = dt;
  traj.epsilon = cfg.epsilon;

  const std::size_t nodes = static_cast<std::size_t>(g.n) * g.dim;
  const bool flat = m.kind() == ManifoldKind::Euclidean;
  std::vector<double> u(u0.coords().begin(), u0.coords().end());
  std::vector<double> prev(nodes), vel(nodes), rhs(nodes), w(g.n - 1);
  std::vector<double> transport(static_cast<std::size_t>(g.n - 1) * g.dim * g.dim);
  std::vector<double> mass(g.n), mass_dt(g.n);
  for (int i = 0; i < g.n; ++i) mass[i] = u0.control_volume(i);
  FaceData fd(g);
  const bool par = cfg.parallel;

  fd.compute(m, g, u, cfg.epsilon, par);
  double tv = fd.length();
  bool stopped = tv < cfg.stop_tv;
  traj.snapshots.push_back(make_snapshot(m, g, 0.0, u, fd, 0.0, stopped));

  double pending = 0.0;  // dissipation since the last snapshot
  double t = 0.0;
  long step = 0;
  while (!stopped && t < cfg.t_max) {
    const double h_t = std::min(dt, cfg.t_max - t);
    ++step;
    prev = u;

    if (cfg.scheme == Scheme::Explicit) {
      if (par) {
        kernels::omp::velocity(m, g, u, fd.c, vel);
        kernels::omp::euler_update(m, g, u, vel, h_t);
      } else {
        kernels::serial::velocity(m, g, u, fd.c, vel);
        kernels::serial::euler_update(m, g, u, vel, h_t);
      }
    } else if (flat) {
      for (int f = 0; f < g.n - 1; ++f) w[f] = h_t * fd.c[f];
      for (std::size_t i = 0; i < nodes; ++i) u[i] *= mass[i / g.dim];
      kernels::solve_mass_laplacian(mass, w, u, g.dim);
    } else {
      // Newton-type iteration for the implicit step with frozen weights;
      // its fixed points solve m_i log_{u_i}(u^n_i) / dt + sum_j c log_{u_i}(u_j) = 0.
      for (int i = 0; i < g.n; ++i) mass_dt[i] = mass[i] / h_t;
      bool converged = false;
      double last_update = 0.0;
      for (int it = 0; it < kMaxImplicitIterations && !converged; ++it) {
        if (par) kernels::omp::linearize(m, g, u, prev, fd.c, h_t, rhs, transport);
        else kernels::serial::linearize(m, g, u, prev, fd.c, h_t, rhs, transport);
        kernels::solve_block_laplacian(mass_dt, fd.c, transport, rhs, g.dim);
        double largest = 0.0;
        for (double x : rhs) largest = std::max(largest, std::abs(x));
        if (par) kernels::omp::exp_update(m, g, u, rhs);
        else kernels::serial::exp_update(m, g, u, rhs);
        // Stop once the update is at rounding level or no longer shrinks.
        converged = largest <= kImplicitTol || (it > 0 && largest > 0.5 * last_update);
        last_update = largest;
      }
      if (!converged)
        throw Error(ErrorCode::CflViolation, "implicit step did not converge at t = " + std::to_string(t) + "; reduce dt");
    }

    // Geodesic displacement per node: integral of |u_t|^2 over the step.
    double incr = 0.0;
    for (int i = 0; i < g.n; ++i) {
      const auto a = std::span<const double>(prev).subspan(static_cast<std::size_t>(i) * g.dim, g.dim);
      const auto b = std::span<const double>(u).subspan(static_cast<std::size_t>(i) * g.dim, g.dim);
      const double d = m.dist(Eigen::Map<const Eigen::VectorXd>(a.data(), g.dim), Eigen::Map<const Eigen::VectorXd>(b.data(), g.dim));
      incr += mass[i] * d * d;
    }
    pending += incr / h_t;

    fd.compute(m, g, u, cfg.epsilon, par);
    const double tv_new = fd.length();
    if (tv_new > tv + kTvGrowthTol)
      throw Error(ErrorCode::CflViolation, "total variation grew by " + std::to_string(tv_new - tv) + " at t = " +
                                                std::to_string(t + h_t) + "; reduce dt");
    tv = tv_new;
    t = (h_t < dt) ? cfg.t_max : step * dt;
    stopped = tv < cfg.stop_tv;
    if (stopped || t >= cfg.t_max || step % cfg.snapshot_every == 0) {
      traj.snapshots.push_back(make_snapshot(m, g, t, u, fd, pending, stopped));
      pending = 0.0;
    }
  }
  return traj;
}

}  // namespace mtvf
