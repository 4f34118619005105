#pragma once

#include "mtvf/flow.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mtvf {

/// Outcome of one audit. pass is exactly worst_violation <= tolerance;
/// at_x is NaN when the check has no spatial location.
struct CheckReport {
  std::string check_name;
  bool pass = true;
  double worst_violation = 0.0;
  double at_t = 0.0;
  double at_x = 0.0;
  double tolerance = 0.0;
  std::string detail;

  /// One human-readable line.
  std::string line() const;
  /// check,pass,worst,at_t,at_x,tol
  std::string csv_row() const;
  static std::string csv_header();
};

/// TV(u(t)) + sum of dissipation over (s, t] <= TV(u(s)) + tol for every
/// pair of snapshots s < t, tol = 1e-6 + 10 dt.
CheckReport check_energy(const FlowTrajectory& traj);

/// Face distances (sampled) or jump sizes keyed by location (step curves)
/// never exceed their running minimum by more than 1e-6. The same holds for
/// the variation measure of every dyadic interval [j 2^-k, (j+1) 2^-k),
/// k = 0..6. Throws IncompatibleSnapshots when the grid changes or a new
/// jump location appears.
CheckReport check_monotone_variation(const FlowTrajectory& traj);

/// Forward-difference form of 1/2 d/dt int |u - v|^2 + TV(u) <= TV(v)
/// between consecutive snapshots, with tolerance 1e-4 + 10 dt + eps (both
/// zero for the exact solvers). Throws NotNPC unless the manifold is
/// euclidean.
CheckReport check_variational_inequality(const FlowTrajectory& traj, const PiecewiseConstantCurve& v);

/// The three sphere identities, each as a max-norm residual.
struct SphereResiduals {
  double tangency = 0.0;  // |z . u| (u* on faces)
  double wedge = 0.0;     // u_t ^ u - (z ^ u)_x, all 2-form components (u at faces: geodesic midpoint)
  double duality = 0.0;   // u_x . z* - |u*| |u_x|
  double at_t = 0.0;
  double at_x = 0.0;
};

/// Residuals over all snapshots (WrongManifold unless sphere or circle).
SphereResiduals sphere_equivalence_residuals(const FlowTrajectory& traj);
/// Worst of the three residuals against 1e-8 (step curves) or 1e-5 / eps.
CheckReport check_sphere_equivalence(const FlowTrajectory& traj);

/// z-field structure: |z| <= 1 + 1e-8, exact zeros at both ends of I, and
/// z^- / z^+ at each jump equal to the unit tangent pair to 1e-9 (step
/// curves only). Returns the three reports in that order.
std::vector<CheckReport> check_z_field(const FlowTrajectory& traj);

/// sum_f (eps^2 + |Du_f|^2)^{p/2} h nonincreasing within 1e-7 per time step
/// (regularized trajectories only).
CheckReport check_p_energy(const FlowTrajectory& traj, double p);

struct StoppingTime {
  double t_star;
  Vec value;
  std::size_t snapshot;
};

/// First snapshot from which TV < 1e-10 and all later snapshots stay within
/// 1e-10 of it; nullopt when the trajectory never settles.
std::optional<StoppingTime> detect_stopping(const FlowTrajectory& traj);

struct CrossSolverEntry {
  double epsilon;
  int grid_n;
  /// sup over regularized snapshot times of the L2(I) distance.
  double sup_error;
  /// L2 distance of the last states (both stopped if t_max allows).
  double final_error;
  double at_t;
};

struct CrossSolverOptions {
  double t_max = 1.0;
  /// Mollifier ramp width in grid cells.
  double ramp_cells = 2.0;
  int snapshot_every = 4;
  Scheme scheme = Scheme::SemiImplicit;
  /// Run the table entries concurrently.
  bool parallel = true;
};

struct CrossSolverTable {
  std::vector<CrossSolverEntry> entries;  // epsilon-major

  const CrossSolverEntry& at(double epsilon, int grid_n) const;
  /// Errors along the diagonal (eps_k, n_k) never grow by more than the
  /// given slack factor.
  bool refinement_monotone(std::span<const double> eps_list, std::span<const int> grid_list, double slack = 0.2) const;
};

/// Regularized runs of mollify(u0) for every (eps, n) against the exact
/// step-curve run of u0.
CrossSolverTable cross_solver_compare(const PiecewiseConstantCurve& u0, std::span<const double> eps_list,
                                      std::span<const int> grid_list, const CrossSolverOptions& opt);

}  // namespace mtvf
