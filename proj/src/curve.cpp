#include "mtvf/curve.hpp"

#include "mtvf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mtvf {

namespace {

// Plateau values closer than this are considered equal and merged.
constexpr double kSpuriousTol = 1e-14;

void check_breakpoints(std::span<const double> bps) {
  double prev = 0.0;
  for (double x : bps) {
    if (!(x > prev) || !(x < 1.0))
      throw Error(ErrorCode::InvalidArgument, "breakpoints must be strictly increasing inside (0, 1)");
    prev = x;
  }
}

}  // namespace

PiecewiseConstantCurve::PiecewiseConstantCurve(Manifold manifold, std::vector<double> breakpoints, std::vector<Vec> values)
    : manifold_(manifold) {
  if (values.size() != breakpoints.size() + 1)
    throw Error(ErrorCode::InvalidArgument, "a step curve needs exactly one more plateau than breakpoints");
  check_breakpoints(breakpoints);
  for (auto& v : values) {
    if (v.size() != manifold.ambient_dim())
      throw Error(ErrorCode::InvalidArgument, "plateau value has wrong dimension for " + manifold.id());
    if (manifold.constraint_residual(v) > 1e-9)
      throw Error(ErrorCode::InvalidArgument, "plateau value is not on " + manifold.id());
    v = manifold.project(v);
  }
  breakpoints_.reserve(breakpoints.size());
  values_.reserve(values.size());
  values_.push_back(values[0]);
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    if ((values[i + 1] - values_.back()).norm() <= kSpuriousTol) continue;
    breakpoints_.push_back(breakpoints[i]);
    values_.push_back(values[i + 1]);
  }
}

PiecewiseConstantCurve PiecewiseConstantCurve::constant(Manifold manifold, Vec value) {
  return PiecewiseConstantCurve(manifold, {}, {std::move(value)});
}

std::size_t PiecewiseConstantCurve::plateau_index(double x) const {
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
  return static_cast<std::size_t>(it - breakpoints_.begin());
}

SampledCurve::SampledCurve(Manifold manifold, int grid_n, std::vector<double> coords)
    : manifold_(manifold), grid_n_(grid_n), coords_(std::move(coords)) {
  if (grid_n < 2) throw Error(ErrorCode::InvalidArgument, "a sampled curve needs at least two nodes");
  if (coords_.size() != static_cast<std::size_t>(grid_n) * manifold.ambient_dim())
    throw Error(ErrorCode::InvalidArgument, "sample array does not match grid_n * N");
  for (int i = 0; i < grid_n; ++i) {
    if (manifold.constraint_residual(at(i)) > 1e-9)
      throw Error(ErrorCode::InvalidArgument, "sample " + std::to_string(i) + " is not on " + manifold.id());
  }
}

SampledCurve::SampledCurve(Manifold manifold, std::span<const Vec> values)
    : SampledCurve(manifold, static_cast<int>(values.size()), [&] {
        std::vector<double> flat;
        flat.reserve(values.size() * manifold.ambient_dim());
        for (const auto& v : values) {
          if (v.size() != manifold.ambient_dim())
            throw Error(ErrorCode::InvalidArgument, "sample has wrong dimension for " + manifold.id());
          flat.insert(flat.end(), v.data(), v.data() + v.size());
        }
        return flat;
      }()) {}

double SampledCurve::control_volume(int i) const {
  const double h = spacing();
  return (i == 0 || i == grid_n_ - 1) ? 0.5 * h : h;
}

Vec SampledCurve::at(int i) const {
  const int d = dim();
  Vec v(d);
  const double* src = coords_.data() + static_cast<std::size_t>(i) * d;
  for (int k = 0; k < d; ++k) v[k] = src[k];
  return v;
}

ScalarStaircase ScalarStaircase::make(std::vector<double> breakpoints, std::vector<double> values) {
  if (values.size() != breakpoints.size() + 1)
    throw Error(ErrorCode::InvalidArgument, "a staircase needs exactly one more plateau than breakpoints");
  check_breakpoints(breakpoints);
  ScalarStaircase s;
  s.values.push_back(values[0]);
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    if (values[i + 1] == s.values.back()) continue;
    s.breakpoints.push_back(breakpoints[i]);
    s.values.push_back(values[i + 1]);
  }
  return s;
}

double ScalarStaircase::length(std::size_t i) const {
  const double a = i == 0 ? 0.0 : breakpoints[i - 1];
  const double b = i + 1 == values.size() ? 1.0 : breakpoints[i];
  return b - a;
}

double ScalarStaircase::total_variation() const {
  double tv = 0.0;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) tv += std::abs(values[i + 1] - values[i]);
  return tv;
}

double ScalarStaircase::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) m += length(i) * values[i];
  return m;
}

TVBreakdown tv_measure_pc(const PiecewiseConstantCurve& c) {
  TVBreakdown tv;
  const auto& m = c.manifold();
  const auto vals = c.values();
  const auto bps = c.breakpoints();
  tv.jumps.reserve(bps.size());
  for (std::size_t i = 0; i < bps.size(); ++i) {
    const double d = m.dist(vals[i], vals[i + 1]);
    if (d >= m.injectivity_radius())
      throw Error(ErrorCode::BeyondInjectivityRadius, "jump at x = " + std::to_string(bps[i]) + " reaches inj_N");
    tv.jumps.push_back({bps[i], d});
    tv.total += d;
  }
  return tv;
}

TVBreakdown tv_measure_sampled(const SampledCurve& c) {
  TVBreakdown tv;
  Vec prev = c.at(0);
  for (int i = 1; i < c.grid_n(); ++i) {
    Vec cur = c.at(i);
    tv.diffuse += (cur - prev).norm();
    prev = std::move(cur);
  }
  tv.total = tv.diffuse;
  return tv;
}

namespace {

void update_worst(RadReport& r, std::size_t index, double d, double bound) {
  if (d > r.worst_distance) {
    r.worst_distance = d;
    r.worst_index = index;
  }
  if (!(d < bound)) r.rad = false;
}

}  // namespace

RadReport is_rad(const PiecewiseConstantCurve& c) {
  RadReport r;
  const auto& m = c.manifold();
  const double bound = 2.0 * m.rad();
  const auto vals = c.values();
  for (std::size_t i = 0; i + 1 < vals.size(); ++i) update_worst(r, i, m.dist(vals[i], vals[i + 1]), bound);
  return r;
}

RadReport is_rad(const SampledCurve& c) {
  RadReport r;
  const auto& m = c.manifold();
  const double bound = 2.0 * m.rad();
  for (int i = 0; i + 1 < c.grid_n(); ++i)
    update_worst(r, static_cast<std::size_t>(i), m.dist(c.at(i), c.at(i + 1)), bound);
  return r;
}

SampledCurve mollify(const PiecewiseConstantCurve& c, int grid_n, double ramp_width) {
  if (grid_n < 2) throw Error(ErrorCode::InvalidArgument, "grid_n must be at least 2");
  if (!(ramp_width >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ramp width must be non-negative");
  const auto& m = c.manifold();
  const auto bps = c.breakpoints();
  const auto vals = c.values();
  const double half = 0.5 * ramp_width;
  for (std::size_t j = 0; j < bps.size(); ++j) {
    const double left_room = j == 0 ? bps[j] : bps[j] - bps[j - 1];
    const double right_room = j + 1 == bps.size() ? 1.0 - bps[j] : bps[j + 1] - bps[j];
    const double left_need = j == 0 ? half : ramp_width;
    const double right_need = j + 1 == bps.size() ? half : ramp_width;
    if (left_need >= left_room || right_need >= right_room)
      throw Error(ErrorCode::RampTooWide, "ramps of width " + std::to_string(ramp_width) + " overlap or leave I");
    if (m.dist(vals[j], vals[j + 1]) >= m.injectivity_radius())
      throw Error(ErrorCode::BeyondInjectivityRadius, "cannot mollify a jump reaching inj_N");
  }

  const int d = m.ambient_dim();
  std::vector<double> flat(static_cast<std::size_t>(grid_n) * d);
  for (int i = 0; i < grid_n; ++i) {
    const double x = static_cast<double>(i) / (grid_n - 1);
    Vec v;
    // Nearest breakpoint decides whether x sits on a ramp.
    const auto it = std::lower_bound(bps.begin(), bps.end(), x);
    std::size_t j = static_cast<std::size_t>(it - bps.begin());
    bool on_ramp = false;
    for (std::size_t cand : {j == 0 ? j : j - 1, j}) {
      if (cand >= bps.size() || ramp_width == 0.0) continue;
      const double lo = bps[cand] - half;
      const double hi = bps[cand] + half;
      if (x >= lo && x <= hi) {
        v = m.geodesic_point(vals[cand], vals[cand + 1], (x - lo) / ramp_width);
        on_ramp = true;
        break;
      }
    }
    if (!on_ramp) v = c.value_at(x);
    std::copy(v.data(), v.data() + d, flat.begin() + static_cast<std::ptrdiff_t>(i) * d);
  }
  return SampledCurve(m, grid_n, std::move(flat));
}

PiecewiseConstantCurve compose_with_geodesic(const Manifold& m, const Vec& p, const Vec& q, const ScalarStaircase& sigma) {
  if (m.dist(p, q) >= m.injectivity_radius())
    throw Error(ErrorCode::BeyondInjectivityRadius, "geodesic endpoints beyond inj_N");
  std::vector<Vec> values;
  values.reserve(sigma.values.size());
  for (double s : sigma.values) {
    if (s < 0.0 || s > 1.0) throw Error(ErrorCode::InvalidArgument, "sigma must take values in [0, 1]");
    values.push_back(m.geodesic_point(p, q, s));
  }
  return PiecewiseConstantCurve(m, sigma.breakpoints, std::move(values));
}

double integrate_pair(const PiecewiseConstantCurve& u, const PiecewiseConstantCurve& v,
                      const std::function<double(const Vec&, const Vec&)>& f) {
  std::vector<double> cuts(u.breakpoints().begin(), u.breakpoints().end());
  cuts.insert(cuts.end(), v.breakpoints().begin(), v.breakpoints().end());
  cuts.push_back(0.0);
  cuts.push_back(1.0);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k];
    const double b = cuts[k + 1];
    const double mid = 0.5 * (a + b);
    acc += (b - a) * f(u.value_at(mid), v.value_at(mid));
  }
  return acc;
}

double l2_distance(const PiecewiseConstantCurve& u, const PiecewiseConstantCurve& v) {
  return std::sqrt(integrate_pair(u, v, [](const Vec& a, const Vec& b) { return (a - b).squaredNorm(); }));
}

double l2_distance(const SampledCurve& u, const PiecewiseConstantCurve& v) {
  if (u.dim() != v.manifold().ambient_dim()) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  const double h = u.spacing();
  const auto bps = v.breakpoints();
  double acc = 0.0;
  for (int i = 0; i < u.grid_n(); ++i) {
    const double lo = std::max(0.0, u.node(i) - 0.5 * h);
    const double hi = std::min(1.0, u.node(i) + 0.5 * h);
    const Vec ui = u.at(i);
    double a = lo;
    auto it = std::upper_bound(bps.begin(), bps.end(), lo);
    while (a < hi) {
      const double b = (it != bps.end() && *it < hi) ? *it : hi;
      acc += (b - a) * (ui - v.value_at(0.5 * (a + b))).squaredNorm();
      a = b;
      if (it != bps.end()) ++it;
    }
  }
  return std::sqrt(acc);
}

double l2_distance(const SampledCurve& u, const SampledCurve& v) {
  if (u.grid_n() != v.grid_n() || u.dim() != v.dim())
    throw Error(ErrorCode::InvalidArgument, "sampled curves live on different grids");
  double acc = 0.0;
  for (int i = 0; i < u.grid_n(); ++i) acc += u.control_volume(i) * (u.at(i) - v.at(i)).squaredNorm();
  return std::sqrt(acc);
}

}  // namespace mtvf
