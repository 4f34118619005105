#pragma once

#include "mtvf/errors.hpp"
#include "mtvf/io.hpp"
#include "mtvf/lab.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

// Command implementations behind the mtvf executable. Each cmd_* returns
// the process exit code: 0 success, 2 configuration or input error, 3
// geometry or solver error, 4 failed verification.
namespace mtvf::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitGeometry = 3;
inline constexpr int kExitVerification = 4;

int exit_code_for(ErrorCode code);

// ---------------------------------------------------------------- synthetic data

/// Random rad step curve: breakpoints jittered around i / plateaus, each
/// value reached from the previous one by a geodesic step of length in
/// [0.2, 1.2] (capped at 0.9 * 2 rad_N). Deterministic in the seed.
PiecewiseConstantCurve generate_staircase(const Manifold& m, int plateaus, std::uint64_t seed);

/// Smooth field x -> exp_p(x V + 0.3 sin(2 pi x) W) on the grid, with V, W
/// orthonormal tangents at a fixed base point.
SampledCurve smooth_field(const Manifold& m, int grid_n);

/// smooth_field with every sample pushed by exp along a tangent Gaussian
/// of standard deviation `noise`.
SampledCurve generate_noisy_field(const Manifold& m, int grid_n, double noise, std::uint64_t seed);

// ---------------------------------------------------------------- denoising

struct DenoiseResult {
  SampledCurve output;
  FlowTrajectory trajectory;
  double tv_in;
  double tv_out;
};

/// Regularized flow of a sampled curve up to t_stop. Without t_stop the
/// run ends once the total variation has dropped by the fraction tv_drop
/// (capped at t = 4 TV + 1).
DenoiseResult denoise(const SampledCurve& input, double epsilon, std::optional<double> t_stop, double tv_drop = 0.5,
                      bool parallel = true);

// ---------------------------------------------------------------- commands

struct FlowArgs {
  std::string config_path;
  std::string input_path;
  std::string out_dir;
  /// Flags given on the command line override the config file keys.
  std::map<std::string, std::string> overrides;
};
int cmd_flow(const FlowArgs& args, std::ostream& out, std::ostream& err);

struct DenoiseArgs {
  std::string input_path;
  std::string manifold;
  double epsilon = 1e-2;
  std::optional<double> t_stop;  // empty: auto
  double tv_drop = 0.5;
  std::string out_dir;
};
int cmd_denoise(const DenoiseArgs& args, std::ostream& out, std::ostream& err);

/// Known names: energy, monotone, vi, sphere, z_field, p_energy, stopping.
inline const std::vector<std::string> kCheckNames = {"energy", "monotone", "vi", "sphere", "z_field", "p_energy", "stopping"};

struct VerifyArgs {
  std::string trajectory_path;
  std::vector<std::string> checks = {"energy", "monotone"};
  /// Comparison curve for the vi check.
  std::string vi_curve_path;
  double p = 2.0;
  /// Optional CSV report `check,pass,worst,at_t,at_x,tol`.
  std::string report_path;
};
int cmd_verify(const VerifyArgs& args, std::ostream& out, std::ostream& err);

struct LabArgs {
  std::string subcommand;  // semiconvexity, hessian, stability, square
  int n_max = 100;
  std::optional<double> r;
  int dirs = 64;
  int samples = 1000;
  double radius = 1.0;
  int bins = 20;
  std::uint64_t seed = 1;
  std::string out_path;  // empty: stdout
};
int cmd_lab(const LabArgs& args, std::ostream& out, std::ostream& err);

struct GenerateArgs {
  std::string kind;  // staircase, noisy_field, two_jump_square
  std::string manifold = "sphere:3";
  int plateaus = 3;
  int grid_n = 201;
  double noise = 0.1;
  double a = 0.5;
  double eps = 0.1;
  std::uint64_t seed = 1;
  /// Curve file; for two_jump_square a directory receiving u.csv and v.csv.
  std::string out_path;
};
int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err);

}  // namespace mtvf::app
