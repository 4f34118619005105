#pragma once

#include "mtvf/manifold.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mtvf {

/// Curve on I = [0, 1] that is constant between a finite set of jump
/// locations. Plateau i occupies [x_{i-1}, x_i) with x_{-1} = 0, x_m = 1.
/// Consecutive plateaus with equal values are merged on construction, so
/// the jump set is always canonical.
class PiecewiseConstantCurve {
public:
  PiecewiseConstantCurve(Manifold manifold, std::vector<double> breakpoints, std::vector<Vec> values);

  static PiecewiseConstantCurve constant(Manifold manifold, Vec value);

  const Manifold& manifold() const { return manifold_; }
  std::span<const double> breakpoints() const { return breakpoints_; }
  std::span<const Vec> values() const { return values_; }

  std::size_t plateau_count() const { return values_.size(); }
  std::size_t jump_count() const { return breakpoints_.size(); }
  double plateau_begin(std::size_t i) const { return i == 0 ? 0.0 : breakpoints_[i - 1]; }
  double plateau_end(std::size_t i) const { return i + 1 == values_.size() ? 1.0 : breakpoints_[i]; }
  double plateau_length(std::size_t i) const { return plateau_end(i) - plateau_begin(i); }
  std::size_t plateau_index(double x) const;

  /// Right-continuous evaluation; x = 1 maps to the last plateau.
  const Vec& value_at(double x) const { return values_[plateau_index(x)]; }

private:
  Manifold manifold_;
  std::vector<double> breakpoints_;
  std::vector<Vec> values_;
};

/// Samples of a Lipschitz curve on the uniform grid x_i = i / (n - 1).
/// Each node owns the control volume [x_i - h/2, x_i + h/2] clipped to I.
class SampledCurve {
public:
  SampledCurve(Manifold manifold, int grid_n, std::vector<double> coords);
  SampledCurve(Manifold manifold, std::span<const Vec> values);

  const Manifold& manifold() const { return manifold_; }
  int grid_n() const { return grid_n_; }
  int dim() const { return manifold_.ambient_dim(); }
  double spacing() const { return 1.0 / (grid_n_ - 1); }
  double node(int i) const { return static_cast<double>(i) / (grid_n_ - 1); }
  double control_volume(int i) const;

  Vec at(int i) const;
  std::span<const double> row(int i) const { return {coords_.data() + static_cast<std::size_t>(i) * dim(), static_cast<std::size_t>(dim())}; }
  std::span<const double> coords() const { return coords_; }

private:
  Manifold manifold_;
  int grid_n_;
  std::vector<double> coords_;
};

/// Scalar step function on I with the same plateau conventions as
/// PiecewiseConstantCurve.
struct ScalarStaircase {
  std::vector<double> breakpoints;
  std::vector<double> values;

  /// Validates and merges equal neighbours.
  static ScalarStaircase make(std::vector<double> breakpoints, std::vector<double> values);

  double length(std::size_t i) const;
  double total_variation() const;
  double mean() const;
};

struct Jump {
  double location;
  double size;
};

struct TVBreakdown {
  double diffuse = 0.0;
  std::vector<Jump> jumps;
  double total = 0.0;
};

/// Geodesic total variation of a step curve: the sum of jump distances.
TVBreakdown tv_measure_pc(const PiecewiseConstantCurve& c);
/// Chord-sum total variation of a sampled curve (all diffuse).
TVBreakdown tv_measure_sampled(const SampledCurve& c);

struct RadReport {
  bool rad = true;
  std::size_t worst_index = 0;  // jump or face with the largest distance
  double worst_distance = 0.0;
};

RadReport is_rad(const PiecewiseConstantCurve& c);
RadReport is_rad(const SampledCurve& c);

/// Replaces each jump by a geodesic ramp of the given width centred on the
/// breakpoint and samples the result on grid_n nodes. Throws RampTooWide if
/// neighbouring ramps overlap or a ramp leaves I.
SampledCurve mollify(const PiecewiseConstantCurve& c, int grid_n, double ramp_width);

/// Plateau-wise composition gamma(sigma) where gamma(s) is the constant-speed
/// geodesic from p (s = 0) to q (s = 1).
PiecewiseConstantCurve compose_with_geodesic(const Manifold& m, const Vec& p, const Vec& q, const ScalarStaircase& sigma);

/// Integral over I of f(u(x), v(x)) for two step curves (exact).
double integrate_pair(const PiecewiseConstantCurve& u, const PiecewiseConstantCurve& v,
                      const std::function<double(const Vec&, const Vec&)>& f);

/// Ambient L^2(I) distance; a sampled curve is read as constant on each
/// control volume.
double l2_distance(const SampledCurve& u, const PiecewiseConstantCurve& v);
double l2_distance(const SampledCurve& u, const SampledCurve& v);
double l2_distance(const PiecewiseConstantCurve& u, const PiecewiseConstantCurve& v);

}  // namespace mtvf
