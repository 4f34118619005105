#include "mtvf/app.hpp"

#include "mtvf/errors.hpp"
#include "mtvf/rng.hpp"
#include "mtvf/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace mtvf::app {

namespace {

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

Manifold manifold_arg(const std::string& id) {
  try {
    return Manifold::parse(id);
  } catch (const Error&) {
    throw Error(ErrorCode::InvalidArgument, "unknown manifold '" + id + "'");
  }
}

/// Base point used by the synthetic fields.
Vec base_point(const Manifold& m) {
  Vec p = m.zero();
  if (m.kind() != ManifoldKind::Euclidean) p[0] = 1.0;
  return p;
}

/// Orthonormal tangent frame at p from the projected coordinate axes.
std::vector<Vec> tangent_frame(const Manifold& m, const Vec& p) {
  std::vector<Vec> frame;
  for (int k = 0; k < m.ambient_dim(); ++k) {
    Vec e = m.zero();
    e[k] = 1.0;
    Vec t = m.tangent_projection(p, e);
    for (const auto& f : frame) t -= t.dot(f) * f;
    if (t.norm() > 1e-8) frame.push_back(t.normalized());
  }
  return frame;
}

void emit(const std::string& table, const std::string& path, std::ostream& out) {
  if (path.empty()) out << table;
  else io::write_file_atomic(path, table);
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (family_of(code)) {
    case ErrorFamily::Config: return kExitConfig;
    case ErrorFamily::Geometry: return kExitGeometry;
    case ErrorFamily::Verification: return kExitVerification;
  }
  return kExitGeometry;
}

// ---------------------------------------------------------------- synthetic data

PiecewiseConstantCurve generate_staircase(const Manifold& m, int plateaus, std::uint64_t seed) {
  if (plateaus < 1) throw Error(ErrorCode::InvalidArgument, "plateaus must be at least 1");
  Rng rng(seed);
  std::vector<double> bps;
  for (int i = 1; i < plateaus; ++i) bps.push_back((i + 0.6 * (rng.uniform() - 0.5)) / plateaus);
  const double cap = 0.9 * 2.0 * m.rad();
  std::vector<Vec> values{lab::random_point(m, rng)};
  for (int i = 1; i < plateaus; ++i) {
    const double len = std::min(rng.uniform(0.2, 1.2), cap);
    values.push_back(m.exp(values.back(), len * lab::random_unit_tangent(m, values.back(), rng)));
  }
  return PiecewiseConstantCurve(m, std::move(bps), std::move(values));
}

SampledCurve smooth_field(const Manifold& m, int grid_n) {
  if (grid_n < 2) throw Error(ErrorCode::InvalidArgument, "grid must have at least 2 nodes");
  const Vec p = base_point(m);
  const auto frame = tangent_frame(m, p);
  const Vec v = frame[0];
  const Vec w = frame.size() > 1 ? frame[1] : m.zero();
  std::vector<Vec> values;
  for (int i = 0; i < grid_n; ++i) {
    const double x = static_cast<double>(i) / (grid_n - 1);
    values.push_back(m.exp(p, x * v + 0.3 * std::sin(2.0 * std::numbers::pi * x) * w));
  }
  return SampledCurve(m, values);
}

SampledCurve generate_noisy_field(const Manifold& m, int grid_n, double noise, std::uint64_t seed) {
  if (!(noise >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise must be non-negative");
  const auto base = smooth_field(m, grid_n);
  std::vector<Vec> values;
  for (int i = 0; i < grid_n; ++i) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
    const Vec u = base.at(i);
    Vec g(m.ambient_dim());
    for (int k = 0; k < g.size(); ++k) g[k] = rng.normal();
    values.push_back(m.exp(u, noise * m.tangent_projection(u, g)));
  }
  return SampledCurve(m, values);
}

// ---------------------------------------------------------------- denoising

DenoiseResult denoise(const SampledCurve& input, double epsilon, std::optional<double> t_stop, double tv_drop,
                      bool parallel) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  if (t_stop && !(*t_stop >= 0.0)) throw Error(ErrorCode::InvalidArgument, "t_stop must be non-negative");
  if (!(tv_drop > 0.0 && tv_drop <= 1.0)) throw Error(ErrorCode::InvalidArgument, "tv_drop must lie in (0, 1]");
  const double tv_in = tv_measure_sampled(input).total;
  FlowConfig cfg;
  cfg.manifold = input.manifold();
  cfg.epsilon = epsilon;
  cfg.grid_n = input.grid_n();
  cfg.parallel = parallel;
  if (t_stop) {
    cfg.t_max = *t_stop;
  } else {
    cfg.t_max = 4.0 * tv_in + 1.0;
    cfg.stop_tv = std::max(cfg.stop_tv, (1.0 - tv_drop) * tv_in);
  }
  auto traj = run_regularized(input, cfg);
  auto output = std::get<SampledCurve>(traj.snapshots.back().curve);
  const double tv_out = tv_measure_sampled(output).total;
  return {std::move(output), std::move(traj), tv_in, tv_out};
}

// ---------------------------------------------------------------- commands

int cmd_flow(const FlowArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const std::string config_text = io::read_file(args.config_path);
    const auto cfg = io::parse_config(config_text, args.overrides);
    const Curve input = io::read_curve(args.input_path);
    const Manifold input_m = std::visit([](const auto& c) { return c.manifold(); }, input);
    if (!(input_m == cfg.flow.manifold))
      throw Error(ErrorCode::InvalidArgument,
                  "input curve lives on " + input_m.id() + " but the config says manifold = " + cfg.flow.manifold.id());

    FlowTrajectory traj;
    if (cfg.solver == io::Solver::ExactPc) {
      const auto* pc = std::get_if<PiecewiseConstantCurve>(&input);
      if (!pc) throw Error(ErrorCode::InvalidArgument, "solver = exact_pc needs a step curve (kind=pc) input");
      ExactPcOptions opt;
      opt.t_max = cfg.flow.t_max;
      opt.merge_tol = cfg.flow.merge_tol;
      opt.snapshot_dt = cfg.snapshot_dt;
      traj = run_exact_pc(*pc, opt);
    } else if (const auto* pc = std::get_if<PiecewiseConstantCurve>(&input)) {
      const auto rad = is_rad(*pc);
      if (!rad.rad)
        throw Error(ErrorCode::RadViolation, "jump " + std::to_string(rad.worst_index) + " of size " +
                                                 io::format_double(rad.worst_distance) +
                                                 " violates the rad condition (every jump must stay below 2 rad_N = " +
                                                 io::format_double(2.0 * pc->manifold().rad()) + ")");
      traj = run_regularized(mollify(*pc, cfg.flow.grid_n, cfg.ramp_width), cfg.flow);
    } else {
      const auto& s = std::get<SampledCurve>(input);
      const auto rad = is_rad(s);
      if (!rad.rad)
        throw Error(ErrorCode::RadViolation, "face " + std::to_string(rad.worst_index) + " violates the rad condition");
      traj = run_regularized(s, cfg.flow);
    }

    const io::fs::path dir(args.out_dir);
    io::RunManifest man;
    man.tool_version = std::string(io::kToolVersion);
    man.command = "flow";
    man.seed = cfg.flow.seed;
    man.config = io::config_to_text(cfg);
    man.inputs = {io::digest_file(args.config_path), io::digest_file(args.input_path)};
    for (const auto& p : io::write_trajectory(dir, traj)) man.outputs.push_back(io::digest_file(p));
    io::write_file_atomic(dir / io::kManifestFile, io::manifest_to_json(man));

    const auto& last = traj.snapshots.back();
    out << "solver " << traj.solver << ", " << traj.snapshots.size() << " snapshots, t = " << last.t
        << ", TV " << traj.snapshots.front().diag.tv << " -> " << last.diag.tv << (last.diag.stopped ? " (stopped)" : "")
        << "\nwrote " << (dir / io::kTrajectoryFile).string() << "\n";
    return kExitOk;
  });
}

int cmd_denoise(const DenoiseArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Manifold m = manifold_arg(args.manifold);
    const Curve input = io::read_curve(args.input_path);
    const auto* s = std::get_if<SampledCurve>(&input);
    if (!s) throw Error(ErrorCode::InvalidArgument, "denoise needs a sampled curve (kind=sampled) input");
    if (!(s->manifold() == m))
      throw Error(ErrorCode::InvalidArgument, "input curve lives on " + s->manifold().id() + ", not " + m.id());
    auto res = denoise(*s, args.epsilon, args.t_stop, args.tv_drop);

    const io::fs::path dir(args.out_dir);
    const io::fs::path curve_path = dir / "denoised.csv";
    io::write_curve(curve_path, res.output);
    io::RunManifest man;
    man.tool_version = std::string(io::kToolVersion);
    man.command = "denoise";
    std::ostringstream params;
    params << "manifold = " << m.id() << "\neps = " << io::format_double(args.epsilon) << "\nt_stop = "
           << (args.t_stop ? io::format_double(*args.t_stop) : "auto") << "\ntv_drop = " << io::format_double(args.tv_drop)
           << "\n";
    man.config = params.str();
    man.inputs = {io::digest_file(args.input_path)};
    man.outputs = {io::digest_file(curve_path)};
    for (const auto& p : io::write_trajectory(dir, res.trajectory)) man.outputs.push_back(io::digest_file(p));
    io::write_file_atomic(dir / io::kManifestFile, io::manifest_to_json(man));
    out << "TV " << res.tv_in << " -> " << res.tv_out << " at t = " << res.trajectory.snapshots.back().t << "\nwrote "
        << curve_path.string() << "\n";
    return kExitOk;
  });
}

int cmd_verify(const VerifyArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (args.checks.empty()) throw Error(ErrorCode::InvalidArgument, "no checks requested");
    for (const auto& c : args.checks)
      if (std::find(kCheckNames.begin(), kCheckNames.end(), c) == kCheckNames.end())
        throw Error(ErrorCode::InvalidArgument, "unknown check '" + c + "'");
    const auto traj = io::read_trajectory(args.trajectory_path);

    std::vector<CheckReport> reports;
    for (const auto& c : args.checks) {
      if (c == "energy") {
        reports.push_back(check_energy(traj));
      } else if (c == "monotone") {
        reports.push_back(check_monotone_variation(traj));
      } else if (c == "vi") {
        if (args.vi_curve_path.empty()) throw Error(ErrorCode::InvalidArgument, "the vi check needs a comparison curve");
        const Curve v = io::read_curve(args.vi_curve_path);
        const auto* pc = std::get_if<PiecewiseConstantCurve>(&v);
        if (!pc) throw Error(ErrorCode::InvalidArgument, "the vi comparison curve must be a step curve");
        reports.push_back(check_variational_inequality(traj, *pc));
      } else if (c == "sphere") {
        reports.push_back(check_sphere_equivalence(traj));
      } else if (c == "z_field") {
        for (auto& r : check_z_field(traj)) reports.push_back(std::move(r));
      } else if (c == "p_energy") {
        reports.push_back(check_p_energy(traj, args.p));
      } else if (c == "stopping") {
        const auto st = detect_stopping(traj);
        CheckReport r;
        r.check_name = "stopping";
        r.tolerance = 1e-10;
        r.worst_violation = traj.snapshots.back().diag.tv;
        r.at_t = st ? st->t_star : traj.snapshots.back().t;
        r.at_x = std::numeric_limits<double>::quiet_NaN();
        r.pass = st.has_value();
        r.detail = st ? "constant from t = " + io::format_double(st->t_star) : "never settles";
        reports.push_back(std::move(r));
      }
    }
    bool ok = true;
    std::string csv = CheckReport::csv_header() + "\n";
    for (const auto& r : reports) {
      out << r.line() << "\n";
      csv += r.csv_row() + "\n";
      ok = ok && r.pass;
    }
    if (!args.report_path.empty()) io::write_file_atomic(args.report_path, csv);
    return ok ? kExitOk : kExitVerification;
  });
}

int cmd_lab(const LabArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto s2 = Manifold::sphere(3);
    std::string table;
    bool ok = true;
    if (args.subcommand == "semiconvexity") {
      if (args.n_max < 1) throw Error(ErrorCode::InvalidArgument, "n-max must be at least 1");
      const int first = lab::first_positive_gap(args.n_max);
      table = "n,gap,marker\n";
      for (int n = 1; n <= args.n_max; ++n)
        table += std::to_string(n) + "," + io::format_double(lab::semiconvexity_gap(n)) + "," +
                 (n == first ? "first_positive" : "") + "\n";
    } else if (args.subcommand == "hessian") {
      if (args.dirs < 1) throw Error(ErrorCode::InvalidArgument, "dirs must be at least 1");
      std::vector<double> radii;
      if (args.r) radii = {*args.r};
      else
        for (int k = 1; k <= 15; ++k) radii.push_back(0.1 * k);
      Vec p0 = s2.zero(), e2 = s2.zero();
      p0[0] = 1.0;
      e2[1] = 1.0;
      table = "r,bound,min_estimate,radial,tangential\n";
      for (double r : radii) {
        if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "r must be positive");
        const auto est = lab::hessian_comparison_check(s2, p0, s2.exp(p0, r * e2), args.dirs, args.seed);
        ok = ok && est.min_estimate >= est.bound - 1e-4;
        table += io::format_double(r) + "," + io::format_double(est.bound) + "," + io::format_double(est.min_estimate) +
                 "," + io::format_double(est.radial) + "," + io::format_double(est.tangential) + "\n";
      }
    } else if (args.subcommand == "stability") {
      if (args.samples < 1 || args.bins < 1) throw Error(ErrorCode::InvalidArgument, "samples and bins must be positive");
      const auto sweep = lab::stability_sweep(s2, args.radius, args.samples, args.seed);
      constexpr double kRange = 2.0;
      const auto hist = lab::histogram(sweep.ratios, kRange, args.bins);
      table = "# max_ratio=" + io::format_double(sweep.max_ratio) + "\nbin_lo,bin_hi,count\n";
      for (int b = 0; b < args.bins; ++b)
        table += io::format_double(kRange * b / args.bins) + "," + io::format_double(kRange * (b + 1) / args.bins) + "," +
                 std::to_string(hist[b]) + "\n";
      ok = std::isfinite(sweep.max_ratio);
    } else if (args.subcommand == "square") {
      table = "a,midpoint_separation,measured,excess\n";
      for (int k = 1; k <= 15; ++k) {
        const double a = 0.1 * k;
        const auto sq = lab::square_vertices(a);
        const double measured = s2.dist(s2.geodesic_point(sq.p0, sq.p1, 0.5), s2.geodesic_point(sq.q0, sq.q1, 0.5));
        const double sep = lab::midpoint_separation(a);
        table += io::format_double(a) + "," + io::format_double(sep) + "," + io::format_double(measured) + "," +
                 io::format_double(sep - a) + "\n";
      }
    } else {
      throw Error(ErrorCode::InvalidArgument,
                  "unknown lab subcommand '" + args.subcommand + "' (semiconvexity, hessian, stability, square)");
    }
    emit(table, args.out_path, out);
    return ok ? kExitOk : kExitVerification;
  });
}

int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (args.out_path.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
    if (args.kind == "staircase") {
      const auto c = generate_staircase(manifold_arg(args.manifold), args.plateaus, args.seed);
      io::write_curve(args.out_path, c);
      out << "staircase with " << c.plateau_count() << " plateaus, TV " << tv_measure_pc(c).total << "\n";
    } else if (args.kind == "noisy_field") {
      if (args.grid_n < 2) throw Error(ErrorCode::InvalidArgument, "grid must have at least 2 nodes");
      const auto c = generate_noisy_field(manifold_arg(args.manifold), args.grid_n, args.noise, args.seed);
      io::write_curve(args.out_path, c);
      out << "noisy field on " << c.grid_n() << " nodes, TV " << tv_measure_sampled(c).total << "\n";
    } else if (args.kind == "two_jump_square") {
      if (!(args.a > 0.0 && args.a <= 0.5 * std::numbers::pi))
        throw Error(ErrorCode::InvalidArgument, "a must lie in (0, pi/2]");
      if (!(args.eps > 0.0 && args.eps < 0.5)) throw Error(ErrorCode::InvalidArgument, "eps must lie in (0, 1/2)");
      const auto pair = lab::semiconvexity_pair(args.a, args.eps);
      const io::fs::path dir(args.out_path);
      io::write_curve(dir / "u.csv", pair.u);
      io::write_curve(dir / "v.csv", pair.v);
      out << "wrote " << (dir / "u.csv").string() << " and " << (dir / "v.csv").string() << "\n";
    } else {
      throw Error(ErrorCode::InvalidArgument,
                  "unknown kind '" + args.kind + "' (staircase, noisy_field, two_jump_square)");
    }
    return kExitOk;
  });
}

}  // namespace mtvf::app
