#pragma once

#include "mtvf/curve.hpp"
#include "mtvf/manifold.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mtvf {

/// Time discretisation of the regularized flow.
///
/// Explicit: forward Euler on the intrinsic flux balance, stable for
/// dt <= 0.5 h^2 eps.
/// SemiImplicit: lagged-diffusivity step. The face weights 1/sqrt(eps^2 +
/// |Du|^2) are frozen at the old state and the linear implicit step is
/// solved exactly (on curved targets by a Newton iteration along exp).
/// Unconditionally stable, dt of order h is fine.
enum class Scheme { SemiImplicit, Explicit };

struct FlowConfig {
  Manifold manifold = Manifold::euclidean(1);
  double epsilon = 1e-3;
  int grid_n = 401;
  std::optional<double> dt;  // empty means "auto"
  double cfl_factor = 0.5;
  double t_max = 1.0;
  double merge_tol = 1e-9;
  int snapshot_every = 10;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::SemiImplicit;
  /// Regularized runs end once the chord TV drops below this value.
  double stop_tv = 1e-12;
  bool parallel = false;

  /// Explicit: cfl * h^2 * eps. Otherwise cfl * h.
  double resolved_dt() const;
};

/// Flux field z. Regularized runs store one value per face of the staggered
/// grid (including the two boundary faces, which are exactly zero). Exact
/// step-curve runs store the piecewise linear field, one piece per plateau.
struct ZPiece {
  double x_begin;
  double x_end;
  Vec z_begin;
  Vec z_end;
};

struct ZField {
  enum class Kind { Faces, PiecewiseLinear };
  Kind kind = Kind::Faces;
  std::vector<double> face_x;
  std::vector<Vec> face_values;
  std::vector<ZPiece> pieces;

  double max_norm() const;
};

using Curve = std::variant<PiecewiseConstantCurve, SampledCurve>;

struct StepDiagnostics {
  double tv = 0.0;
  /// Integral of |u_t|^2 over I and over (previous snapshot, this one].
  double dissipation = 0.0;
  double max_jump = 0.0;
  bool stopped = false;
};

struct Snapshot {
  double t = 0.0;
  Curve curve;
  ZField z;
  /// u_t per plateau (step curves) or per node (sampled curves).
  std::vector<Vec> velocity;
  StepDiagnostics diag;
};

struct FlowTrajectory {
  Manifold manifold = Manifold::euclidean(1);
  std::string solver;
  /// Internal time step; 0 for event-exact solvers.
  double dt = 0.0;
  double epsilon = 0.0;
  std::vector<Snapshot> snapshots;

  bool is_piecewise_constant() const;
  std::vector<double> times() const;
};

double total_variation(const Curve& c);

// ---------------------------------------------------------------- regularized

/// u_t = pi_u z_x with z = u_x / sqrt(eps^2 + |u_x|^2) and zero flux at
/// both ends of I, on the node-centred grid of u0. Throws CflViolation when
/// the chord TV grows by more than 1e-7 in one step.
FlowTrajectory run_regularized(const SampledCurve& u0, const FlowConfig& cfg);

/// Face fluxes of a sampled curve, boundary faces included.
ZField regularized_flux(const SampledCurve& u, double epsilon);

/// Semi-discrete right-hand side pi_u (z_{i+1/2} - z_{i-1/2}) / m_i.
std::vector<Vec> regularized_velocity(const SampledCurve& u, double epsilon);

/// Sum over faces of (eps^2 + |Du|^2)^{p/2} h.
double regularized_p_energy(const SampledCurve& u, double epsilon, double p);

// ---------------------------------------------------------------- exact step curves

struct ExactPcOptions {
  double t_max = 1.0;
  double merge_tol = 1e-9;
  /// Snapshot cadence; 0 records only the start, merge events and the end.
  double snapshot_dt = 0.0;
  /// Extra snapshot times (need not be sorted).
  std::vector<double> output_times;
  double max_step = 2e-3;
};

/// Plateau ODE a_i' = (T_i^next + T_i^prev) / l_i integrated with RK4 on the
/// manifold. Colliding plateaus are merged at the located event time.
FlowTrajectory run_exact_pc(const PiecewiseConstantCurve& u0, const ExactPcOptions& opt);
FlowTrajectory run_exact_pc(const PiecewiseConstantCurve& u0, double t_max, double merge_tol);

/// Plateau velocities of the step-curve flow at the given state.
std::vector<Vec> pc_velocity(const PiecewiseConstantCurve& u);

/// Piecewise linear z of a step curve: zero at both ends of I, equal to the
/// unit tangents of the jump geodesic on either side of every jump.
ZField reconstruct_z_pc(const PiecewiseConstantCurve& u);

// ---------------------------------------------------------------- scalar flow

struct ScalarTrajectory {
  std::vector<double> times;
  std::vector<ScalarStaircase> states;
  std::vector<std::vector<double>> velocities;
  std::vector<double> dissipation;  // increments, as in StepDiagnostics
  std::vector<bool> stopped;
};

struct ScalarOptions {
  double snapshot_dt = 0.0;
  std::vector<double> output_times;
};

/// Exact event-driven total variation flow of a scalar staircase with
/// Neumann conditions.
ScalarTrajectory run_scalar_tv(const ScalarStaircase& sigma0, double t_max, const ScalarOptions& opt = {});

/// u = gamma o sigma with gamma the geodesic from p to q and sigma the
/// scalar flow started from sigma0 (values in [0, 1]).
FlowTrajectory flow_on_geodesic(const Manifold& m, const Vec& p, const Vec& q, const ScalarStaircase& sigma0,
                                double t_max, const ScalarOptions& opt = {});

}  // namespace mtvf
