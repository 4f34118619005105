#pragma once

#include "mtvf/flow.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Text formats and run persistence. Numbers are written with 17 significant
// digits, so a write/read round trip is bit-exact.
namespace mtvf::io {

namespace fs = std::filesystem;

std::string format_double(double x);
/// Whole-token parse; ParseError naming `what` otherwise.
double parse_double(std::string_view token, std::string_view what);
long long parse_integer(std::string_view token, std::string_view what);

std::string read_file(const fs::path& path);
/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const fs::path& path, std::string_view content);

// ---------------------------------------------------------------- curves
//
//   # kind=pc manifold=sphere:3            # kind=sampled manifold=circle
//   x_right_end,c0,c1,c2                   x,c0,c1
//   0.5,1,0,0                              0,1,0
//   1,0,1,0                                ...
//
// Step curves list one row per plateau with its right end; the last row
// ends at 1. The column count must match the ambient dimension.

std::string curve_to_csv(const Curve& c);
Curve curve_from_csv(std::string_view text);
void write_curve(const fs::path& path, const Curve& c);
Curve read_curve(const fs::path& path);

// ---------------------------------------------------------------- trajectories
//
// trajectory.csv: `t,x,c0..` with one row per plateau (x = right end) or node,
// preceded by `# kind=... manifold=... solver=... dt=... epsilon=...`.
// diagnostics.csv: `t,tv,dissipation,max_jump,stopped`, one row per snapshot.
// On reading, z and u_t are recomputed from the curves, which reproduces what
// the solvers store.

std::string trajectory_to_csv(const FlowTrajectory& traj);
std::string diagnostics_to_csv(const FlowTrajectory& traj);
FlowTrajectory trajectory_from_csv(std::string_view trajectory_text, std::string_view diagnostics_text);

inline constexpr std::string_view kTrajectoryFile = "trajectory.csv";
inline constexpr std::string_view kDiagnosticsFile = "diagnostics.csv";
inline constexpr std::string_view kManifestFile = "manifest.json";

/// Writes both files into dir (created if missing) and returns their paths.
std::vector<fs::path> write_trajectory(const fs::path& dir, const FlowTrajectory& traj);
/// Accepts a run directory or the trajectory file; the diagnostics sidecar
/// is looked up next to it.
FlowTrajectory read_trajectory(const fs::path& path);

// ---------------------------------------------------------------- configuration

enum class Solver { Regularized, ExactPc };

/// FlowConfig plus the run-level keys. Text form is `key = value` per line,
/// `#` starts a comment:
///   solver, manifold, epsilon, grid_n, dt (number or auto), cfl_factor,
///   t_max, merge_tol, snapshot_every, seed, scheme (semi_implicit |
///   explicit), stop_tv, parallel, ramp_width, snapshot_dt
struct RunConfig {
  Solver solver = Solver::Regularized;
  FlowConfig flow;
  /// Mollifier ramp applied when a step curve feeds the regularized solver.
  double ramp_width = 0.01;
  /// Snapshot cadence of the exact solver (0: events only).
  double snapshot_dt = 0.0;
};

/// ParseError on unknown keys, malformed values or a regularized run
/// without epsilon; InvalidArgument when a value is out of range. Entries
/// of `overrides` replace the file's value for the same key.
RunConfig parse_config(std::string_view text, const std::map<std::string, std::string>& overrides = {});
std::string config_to_text(const RunConfig& cfg);

// ---------------------------------------------------------------- manifests

std::string sha256_hex(std::string_view data);

struct FileDigest {
  std::string path;
  std::string sha256;
};

struct RunManifest {
  std::string tool_version;
  std::string command;
  std::uint64_t seed = 0;
  std::string config;  // canonical key = value text, or the CLI parameters
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
};

FileDigest digest_file(const fs::path& path);
std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(std::string_view text);

inline constexpr std::string_view kToolVersion = "mtvf 1.0.0";

}  // namespace mtvf::io
