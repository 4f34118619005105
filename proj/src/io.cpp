#include "mtvf/io.hpp"

#include "mtvf/errors.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace mtvf::io {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto line : split(text, '\n'))
    if (!line.empty()) out.push_back(line);
  return out;
}

/// `# key=value key=value` header line.
std::map<std::string, std::string, std::less<>> parse_tags(std::string_view line) {
  if (line.empty() || line.front() != '#') throw Error(ErrorCode::ParseError, "missing '# kind=...' header line");
  std::map<std::string, std::string, std::less<>> tags;
  for (auto tok : split(trim(line.substr(1)), ' ')) {
    if (tok.empty()) continue;
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::ParseError, "malformed header tag '" + std::string(tok) + "'");
    tags.emplace(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)));
  }
  return tags;
}

const std::string& tag(const std::map<std::string, std::string, std::less<>>& tags, std::string_view key) {
  const auto it = tags.find(key);
  if (it == tags.end()) throw Error(ErrorCode::ParseError, "header lacks '" + std::string(key) + "='");
  return it->second;
}

std::string header_row(std::string_view first, int dim) {
  std::string s(first);
  for (int k = 0; k < dim; ++k) s += ",c" + std::to_string(k);
  return s;
}

void expect_header(std::string_view line, std::string_view first, int dim) {
  if (line != header_row(first, dim))
    throw Error(ErrorCode::ParseError, "expected header '" + header_row(first, dim) + "', got '" + std::string(line) + "'");
}

void append_row(std::string& out, std::initializer_list<double> lead, const Vec& v) {
  bool first = true;
  for (double x : lead) {
    if (!first) out += ',';
    out += format_double(x);
    first = false;
  }
  for (int k = 0; k < v.size(); ++k) out += ',' + format_double(v[k]);
  out += '\n';
}

/// Splits a data row into `lead` scalars and a point of the given dimension.
std::pair<std::vector<double>, Vec> parse_row(std::string_view line, std::size_t lead, int dim, std::size_t line_no) {
  const auto cells = split(line, ',');
  if (cells.size() != lead + static_cast<std::size_t>(dim))
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                           std::to_string(lead + dim) + " columns, found " + std::to_string(cells.size()));
  std::vector<double> head(lead);
  for (std::size_t k = 0; k < lead; ++k) head[k] = parse_double(cells[k], "line " + std::to_string(line_no));
  Vec v(dim);
  for (int k = 0; k < dim; ++k) v[k] = parse_double(cells[lead + k], "line " + std::to_string(line_no));
  return {head, v};
}

Manifold parse_manifold(const std::string& id) {
  try {
    return Manifold::parse(id);
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, "bad manifold '" + id + "'");
  }
}

/// Rows of one step curve (right ends) into a curve.
PiecewiseConstantCurve pc_from_rows(const Manifold& m, const std::vector<double>& ends, std::vector<Vec> values) {
  if (ends.empty()) throw Error(ErrorCode::ParseError, "step curve without plateaus");
  if (ends.back() != 1.0) throw Error(ErrorCode::ParseError, "last plateau must end at x = 1");
  std::vector<double> bps(ends.begin(), ends.end() - 1);
  return PiecewiseConstantCurve(m, std::move(bps), std::move(values));
}

SampledCurve sampled_from_rows(const Manifold& m, const std::vector<double>& xs, const std::vector<Vec>& values) {
  const int n = static_cast<int>(xs.size());
  if (n < 2) throw Error(ErrorCode::ParseError, "sampled curve needs at least two nodes");
  SampledCurve c(m, values);
  for (int i = 0; i < n; ++i)
    if (std::abs(xs[i] - c.node(i)) > 1e-12)
      throw Error(ErrorCode::ParseError, "node " + std::to_string(i) + " is not on the uniform grid");
  return c;
}

}  // namespace

std::string format_double(double x) {
  std::array<char, 32> buf;
  const auto n = std::snprintf(buf.data(), buf.size(), "%.17g", x);
  return std::string(buf.data(), static_cast<std::size_t>(n));
}

double parse_double(std::string_view token, std::string_view what) {
  token = trim(token);
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), x);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty())
    throw Error(ErrorCode::ParseError, std::string(what) + ": '" + std::string(token) + "' is not a number");
  return x;
}

long long parse_integer(std::string_view token, std::string_view what) {
  token = trim(token);
  long long x = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), x);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty())
    throw Error(ErrorCode::ParseError, std::string(what) + ": '" + std::string(token) + "' is not an integer");
  return x;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out.flush()) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot rename into " + path.string() + ": " + ec.message());
}

// ---------------------------------------------------------------- curves

std::string curve_to_csv(const Curve& c) {
  std::string out;
  if (const auto* pc = std::get_if<PiecewiseConstantCurve>(&c)) {
    const int dim = pc->manifold().ambient_dim();
    out = "# kind=pc manifold=" + pc->manifold().id() + "\n" + header_row("x_right_end", dim) + "\n";
    for (std::size_t i = 0; i < pc->plateau_count(); ++i) append_row(out, {pc->plateau_end(i)}, pc->values()[i]);
  } else {
    const auto& s = std::get<SampledCurve>(c);
    out = "# kind=sampled manifold=" + s.manifold().id() + "\n" + header_row("x", s.dim()) + "\n";
    for (int i = 0; i < s.grid_n(); ++i) append_row(out, {s.node(i)}, s.at(i));
  }
  return out;
}

Curve curve_from_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.size() < 2) throw Error(ErrorCode::ParseError, "curve file is empty");
  const auto tags = parse_tags(lines[0]);
  const Manifold m = parse_manifold(tag(tags, "manifold"));
  const std::string& kind = tag(tags, "kind");
  const int dim = m.ambient_dim();
  if (kind != "pc" && kind != "sampled") throw Error(ErrorCode::ParseError, "unknown curve kind '" + kind + "'");
  expect_header(lines[1], kind == "pc" ? "x_right_end" : "x", dim);
  std::vector<double> xs;
  std::vector<Vec> values;
  for (std::size_t l = 2; l < lines.size(); ++l) {
    auto [head, v] = parse_row(lines[l], 1, dim, l + 1);
    xs.push_back(head[0]);
    values.push_back(std::move(v));
  }
  if (kind == "pc") return pc_from_rows(m, xs, std::move(values));
  return sampled_from_rows(m, xs, values);
}

void write_curve(const fs::path& path, const Curve& c) { write_file_atomic(path, curve_to_csv(c)); }
Curve read_curve(const fs::path& path) { return curve_from_csv(read_file(path)); }

// ---------------------------------------------------------------- trajectories

std::string trajectory_to_csv(const FlowTrajectory& traj) {
  const int dim = traj.manifold.ambient_dim();
  std::string out = "# kind=" + std::string(traj.is_piecewise_constant() ? "pc" : "sampled") +
                    " manifold=" + traj.manifold.id() + " solver=" + traj.solver + " dt=" + format_double(traj.dt) +
                    " epsilon=" + format_double(traj.epsilon) + "\n" + header_row("t,x", dim) + "\n";
  for (const auto& s : traj.snapshots) {
    if (const auto* pc = std::get_if<PiecewiseConstantCurve>(&s.curve)) {
      for (std::size_t i = 0; i < pc->plateau_count(); ++i) append_row(out, {s.t, pc->plateau_end(i)}, pc->values()[i]);
    } else {
      const auto& c = std::get<SampledCurve>(s.curve);
      for (int i = 0; i < c.grid_n(); ++i) append_row(out, {s.t, c.node(i)}, c.at(i));
    }
  }
  return out;
}

std::string diagnostics_to_csv(const FlowTrajectory& traj) {
  std::string out = "t,tv,dissipation,max_jump,stopped\n";
  for (const auto& s : traj.snapshots)
    out += format_double(s.t) + ',' + format_double(s.diag.tv) + ',' + format_double(s.diag.dissipation) + ',' +
           format_double(s.diag.max_jump) + ',' + (s.diag.stopped ? "1" : "0") + '\n';
  return out;
}

FlowTrajectory trajectory_from_csv(std::string_view trajectory_text, std::string_view diagnostics_text) {
  const auto lines = lines_of(trajectory_text);
  if (lines.size() < 3) throw Error(ErrorCode::ParseError, "trajectory file is empty");
  const auto tags = parse_tags(lines[0]);
  FlowTrajectory traj;
  traj.manifold = parse_manifold(tag(tags, "manifold"));
  traj.solver = tag(tags, "solver");
  traj.dt = parse_double(tag(tags, "dt"), "dt");
  traj.epsilon = parse_double(tag(tags, "epsilon"), "epsilon");
  const std::string& kind = tag(tags, "kind");
  if (kind != "pc" && kind != "sampled") throw Error(ErrorCode::ParseError, "unknown trajectory kind '" + kind + "'");
  const bool pc = kind == "pc";
  if (!pc && !(traj.epsilon > 0.0)) throw Error(ErrorCode::ParseError, "sampled trajectory needs epsilon > 0");
  const int dim = traj.manifold.ambient_dim();
  expect_header(lines[1], "t,x", dim);

  std::vector<double> xs;
  std::vector<Vec> values;
  double t_cur = 0.0;
  auto flush = [&] {
    if (xs.empty()) return;
    if (pc) {
      auto c = pc_from_rows(traj.manifold, xs, values);
      traj.snapshots.push_back(Snapshot{t_cur, c, reconstruct_z_pc(c), pc_velocity(c), {}});
    } else {
      auto c = sampled_from_rows(traj.manifold, xs, values);
      traj.snapshots.push_back(
          Snapshot{t_cur, c, regularized_flux(c, traj.epsilon), regularized_velocity(c, traj.epsilon), {}});
    }
    xs.clear();
    values.clear();
  };
  for (std::size_t l = 2; l < lines.size(); ++l) {
    auto [head, v] = parse_row(lines[l], 2, dim, l + 1);
    // A new snapshot starts when t changes or x restarts.
    if (!xs.empty() && (head[0] != t_cur || head[1] <= xs.back())) flush();
    if (xs.empty()) {
      if (!traj.snapshots.empty() && !(head[0] > traj.snapshots.back().t))
        throw Error(ErrorCode::ParseError, "line " + std::to_string(l + 1) + ": snapshot times must increase");
      t_cur = head[0];
    }
    xs.push_back(head[1]);
    values.push_back(std::move(v));
  }
  flush();

  const auto diag = lines_of(diagnostics_text);
  if (diag.empty() || diag[0] != "t,tv,dissipation,max_jump,stopped")
    throw Error(ErrorCode::ParseError, "diagnostics header must be 't,tv,dissipation,max_jump,stopped'");
  if (diag.size() - 1 != traj.snapshots.size())
    throw Error(ErrorCode::ParseError, "diagnostics list " + std::to_string(diag.size() - 1) + " rows for " +
                                           std::to_string(traj.snapshots.size()) + " snapshots");
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    const auto cells = split(diag[k + 1], ',');
    const std::string where = "diagnostics line " + std::to_string(k + 2);
    if (cells.size() != 5) throw Error(ErrorCode::ParseError, where + ": expected 5 columns");
    if (parse_double(cells[0], where) != traj.snapshots[k].t)
      throw Error(ErrorCode::ParseError, where + ": time does not match the trajectory");
    auto& d = traj.snapshots[k].diag;
    d.tv = parse_double(cells[1], where);
    d.dissipation = parse_double(cells[2], where);
    d.max_jump = parse_double(cells[3], where);
    if (cells[4] != "0" && cells[4] != "1") throw Error(ErrorCode::ParseError, where + ": stopped must be 0 or 1");
    d.stopped = cells[4] == "1";
  }
  return traj;
}

std::vector<fs::path> write_trajectory(const fs::path& dir, const FlowTrajectory& traj) {
  const fs::path a = dir / kTrajectoryFile, b = dir / kDiagnosticsFile;
  write_file_atomic(a, trajectory_to_csv(traj));
  write_file_atomic(b, diagnostics_to_csv(traj));
  return {a, b};
}

FlowTrajectory read_trajectory(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / kTrajectoryFile : path;
  return trajectory_from_csv(read_file(file), read_file(file.parent_path() / kDiagnosticsFile));
}

// ---------------------------------------------------------------- configuration

namespace {

bool parse_bool(std::string_view v, std::string_view key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(ErrorCode::ParseError, std::string(key) + ": expected true or false");
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::map<std::string, std::string>& overrides) {
  RunConfig cfg;
  bool have_eps = false;
  std::map<std::string, std::string, std::less<>> seen;
  auto apply = [&](std::string_view key, std::string_view value, const std::string& where) {
    const std::string k(key);
    if (!seen.emplace(k, where).second) throw Error(ErrorCode::ParseError, "config key '" + k + "' given twice");
    auto& f = cfg.flow;
    if (key == "solver") {
      if (value == "regularized") cfg.solver = Solver::Regularized;
      else if (value == "exact_pc") cfg.solver = Solver::ExactPc;
      else throw Error(ErrorCode::ParseError, "solver: expected regularized or exact_pc");
    } else if (key == "manifold") {
      f.manifold = parse_manifold(std::string(value));
    } else if (key == "epsilon") {
      f.epsilon = parse_double(value, k);
      have_eps = true;
    } else if (key == "grid_n") {
      f.grid_n = static_cast<int>(parse_integer(value, k));
    } else if (key == "dt") {
      if (value == "auto") f.dt.reset();
      else f.dt = parse_double(value, k);
    } else if (key == "cfl_factor") {
      f.cfl_factor = parse_double(value, k);
    } else if (key == "t_max") {
      f.t_max = parse_double(value, k);
    } else if (key == "merge_tol") {
      f.merge_tol = parse_double(value, k);
    } else if (key == "snapshot_every") {
      f.snapshot_every = static_cast<int>(parse_integer(value, k));
    } else if (key == "seed") {
      f.seed = static_cast<std::uint64_t>(parse_integer(value, k));
    } else if (key == "scheme") {
      if (value == "semi_implicit") f.scheme = Scheme::SemiImplicit;
      else if (value == "explicit") f.scheme = Scheme::Explicit;
      else throw Error(ErrorCode::ParseError, "scheme: expected semi_implicit or explicit");
    } else if (key == "stop_tv") {
      f.stop_tv = parse_double(value, k);
    } else if (key == "parallel") {
      f.parallel = parse_bool(value, k);
    } else if (key == "ramp_width") {
      cfg.ramp_width = parse_double(value, k);
    } else if (key == "snapshot_dt") {
      cfg.snapshot_dt = parse_double(value, k);
    } else {
      throw Error(ErrorCode::ParseError, "unknown config key '" + k + "' (" + where + ")");
    }
  };
  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::ParseError, "config line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (overrides.count(std::string(key))) continue;
    apply(key, trim(line.substr(eq + 1)), "line " + std::to_string(line_no));
  }
  for (const auto& [k, v] : overrides) apply(k, v, "command line");
  const auto& f = cfg.flow;
  if (cfg.solver == Solver::Regularized) {
    if (!have_eps) throw Error(ErrorCode::ParseError, "epsilon is required when solver = regularized");
    if (!(f.epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
    if (f.grid_n < 2) throw Error(ErrorCode::InvalidArgument, "grid_n must be at least 2");
    if (f.dt && !(*f.dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive or auto");
    if (!(f.cfl_factor > 0.0 && f.cfl_factor <= 0.5)) throw Error(ErrorCode::InvalidArgument, "cfl_factor must lie in (0, 0.5]");
    if (!(cfg.ramp_width > 0.0)) throw Error(ErrorCode::InvalidArgument, "ramp_width must be positive");
  }
  if (!(f.t_max >= 0.0)) throw Error(ErrorCode::InvalidArgument, "t_max must be non-negative");
  if (!(f.merge_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "merge_tol must be positive");
  if (f.snapshot_every < 1) throw Error(ErrorCode::InvalidArgument, "snapshot_every must be at least 1");
  if (!(cfg.snapshot_dt >= 0.0)) throw Error(ErrorCode::InvalidArgument, "snapshot_dt must be non-negative");
  return cfg;
}

std::string config_to_text(const RunConfig& cfg) {
  const auto& f = cfg.flow;
  std::string s;
  auto put = [&](std::string_view k, const std::string& v) { s += std::string(k) + " = " + v + "\n"; };
  put("solver", cfg.solver == Solver::Regularized ? "regularized" : "exact_pc");
  put("manifold", f.manifold.id());
  put("epsilon", format_double(f.epsilon));
  put("grid_n", std::to_string(f.grid_n));
  put("dt", f.dt ? format_double(*f.dt) : "auto");
  put("cfl_factor", format_double(f.cfl_factor));
  put("t_max", format_double(f.t_max));
  put("merge_tol", format_double(f.merge_tol));
  put("snapshot_every", std::to_string(f.snapshot_every));
  put("seed", std::to_string(f.seed));
  put("scheme", f.scheme == Scheme::Explicit ? "explicit" : "semi_implicit");
  put("stop_tv", format_double(f.stop_tv));
  put("parallel", f.parallel ? "true" : "false");
  put("ramp_width", format_double(cfg.ramp_width));
  put("snapshot_dt", format_double(cfg.snapshot_dt));
  return s;
}

// ---------------------------------------------------------------- manifests

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::IoError, "SHA-256 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 15];
  }
  return out;
}

FileDigest digest_file(const fs::path& path) { return {path.string(), sha256_hex(read_file(path))}; }

std::string manifest_to_json(const RunManifest& m) {
  auto files = [](const std::vector<FileDigest>& v) {
    auto arr = nlohmann::json::array();
    for (const auto& f : v) arr.push_back({{"path", f.path}, {"sha256", f.sha256}});
    return arr;
  };
  const nlohmann::json j = {{"tool_version", m.tool_version}, {"command", m.command}, {"seed", m.seed},
                            {"config", m.config},             {"inputs", files(m.inputs)}, {"outputs", files(m.outputs)}};
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    RunManifest m;
    m.tool_version = j.at("tool_version").get<std::string>();
    m.command = j.at("command").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config = j.at("config").get<std::string>();
    for (const auto& f : j.at("inputs")) m.inputs.push_back({f.at("path"), f.at("sha256")});
    for (const auto& f : j.at("outputs")) m.outputs.push_back({f.at("path"), f.at("sha256")});
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("manifest: ") + e.what());
  }
}

}  // namespace mtvf::io
