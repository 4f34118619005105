#pragma once

#include "mtvf/curve.hpp"
#include "mtvf/rng.hpp"
#include "mtvf/verify.hpp"

#include <cstdint>
#include <span>
#include <vector>

// Numeric experiments on the comparison geometry behind the flow: the
// semiconvexity counterexamples on S^2, Hessian and angle comparison, and
// the geodesic stability estimates.
namespace mtvf::lab {

/// Random point: standard normal coordinates, projected onto m.
Vec random_point(const Manifold& m, Rng& rng);
/// Random unit tangent vector at p.
Vec random_unit_tangent(const Manifold& m, const Vec& p, Rng& rng);

// ---------------------------------------------------------------- spherical trigonometry

/// hav(theta) = sin^2(theta / 2).
double hav(double theta);

/// Third side c of a spherical triangle from two sides and the enclosed
/// angle: hav c = hav(a - b) + sin a sin b hav gamma. DomainError unless
/// a, b in (0, pi) and gamma in [0, pi].
double haversine_side(double a, double b, double gamma);

/// Side lengths and angles of a triangle on the unit sphere.
struct SphericalTriangle {
  double a, b, c;              // sides opposite to the angles below
  double alpha, beta, gamma;

  /// DegenerateTriangle when a side vanishes, the triangle inequality is
  /// tight, or the perimeter reaches 2 pi.
  static SphericalTriangle from_sides(double a, double b, double c);
  /// Vertices on sphere(3); angles from unit tangent inner products.
  static SphericalTriangle from_vertices(const Vec& p, const Vec& q, const Vec& r);
};

/// Planar angles of the Euclidean triangle with the same side lengths.
struct PlanarAngles {
  double alpha, beta, gamma;
};
PlanarAngles planar_angles(double a, double b, double c);

/// Each spherical angle of pqr is at least the matching planar angle (to 1e-9).
CheckReport alexandrov_angle_check(const Vec& p, const Vec& q, const Vec& r);

// ---------------------------------------------------------------- semiconvexity counterexamples

/// Vertices of the square of side a on S^2 centred at e1: p0, q0 mirror
/// each other in the e1-e3 plane, p0, p1 in the e1-e2 plane.
struct SquareVertices {
  Vec p0, p1, q0, q1;
};
/// Built with manifold operations only: the circumradius is found by
/// bisection so that the sides come out as a.
SquareVertices square_vertices(double a);

/// Equatorial distance of the geodesic midpoints of p0p1 and q0q1:
/// 2 arcsin(tan(a / 2)). DomainError unless a in (0, pi / 2].
double midpoint_separation(double a);

/// u = p0 on [0, 1/2), q0 after; v = p0, p1, q1, q0 with the middle pieces
/// of width eps around 1/2.
struct SemiconvexityPair {
  PiecewiseConstantCurve u;
  PiecewiseConstantCurve v;
};
SemiconvexityPair semiconvexity_pair(double a, double eps);

/// x -> geodesic_point(u(x), v(x), t) on the common refinement of the jump sets.
PiecewiseConstantCurve geodesic_interpolation(const PiecewiseConstantCurve& u, const PiecewiseConstantCurve& v, double t);

/// Supremum of the eps in (0, 1/2] for which a + lambda eps a / 4 <
/// midpoint_separation(a), i.e. for which TV fails to be (-lambda)-convex
/// along the interpolation of semiconvexity_pair(a, eps). lambda <= 0 gives
/// the cap 1/2.
double lambda_convexity_violation(double lambda, double a);

/// 2 arcsin(tan(x)) - 1/(4n(n+1)) - 3/(2^{n+5} n (n+1)^2) with x = 1/(8n(n+1)).
double semiconvexity_gap(int n);

/// Smallest n in [1, n_max] after which the gap stays positive up to n_max;
/// 0 when the gap is not positive at n_max.
int first_positive_gap(int n_max = 100);

// ---------------------------------------------------------------- Hessian comparison

/// Second derivative of s -> 1/2 dist^2(exp_p(s X), p0) at s = 0 by central
/// differences at step s and s / 2, Richardson extrapolated.
double directional_hessian(const Manifold& m, const Vec& p0, const Vec& p, const Vec& x, double step = 1e-4);

struct HessianEstimate {
  double r;            // dist(p, p0)
  double bound;        // h_N(r)
  double min_estimate; // over the random directions
  double radial;       // X along log_p p0
  double tangential;   // X orthogonal to log_p p0 (equals the bound on spheres)
  std::vector<double> estimates;
};

/// n_dirs random unit directions plus the radial and tangential ones.
/// OutOfComparisonRange unless dist(p, p0) < 2 rad_N.
HessianEstimate hessian_comparison_check(const Manifold& m, const Vec& p0, const Vec& p, int n_dirs, std::uint64_t seed);

struct HessianSweep {
  int configurations = 0;
  double worst_margin = 0.0;      // min over all estimates of estimate - h_N(r)
  double worst_tangential = 0.0;  // max |tangential - h_N(r)|
  double min_estimate = 0.0;
};

/// Random (p0, p, X) on m with r uniform in (0, r_max), one direction each.
HessianSweep hessian_sweep(const Manifold& m, int configurations, double r_max, std::uint64_t seed);

// ---------------------------------------------------------------- geodesic stability

/// min over s of dist(x, geodesic_point(p, q, s)).
double distance_to_segment(const Manifold& m, const Vec& x, const Vec& p, const Vec& q);

/// One-sided Hausdorff distance sup_{x on [p1, q1]} dist(x, [p2, q2]) over
/// n_samples + 1 equally spaced points, divided by max(dist(p1, p2),
/// dist(q1, q2)); 0 for identical segments.
double geodesic_endpoint_stability(const Manifold& m, const Vec& p1, const Vec& q1, const Vec& p2, const Vec& q2,
                                   int n_samples = 64);

struct StabilitySweep {
  double max_ratio = 0.0;
  std::vector<double> ratios;
};

/// Quadruples drawn in the geodesic ball of the given radius around a
/// random centre. BeyondInjectivityRadius unless radius < rad_N. Sample k
/// uses its own RNG stream, so the result is independent of thread count.
StabilitySweep stability_sweep(const Manifold& m, double radius, int quadruples, std::uint64_t seed, int n_samples = 64);

/// Histogram of ratios on [0, max] with the given number of bins.
std::vector<int> histogram(std::span<const double> values, double max, int bins);

// ---------------------------------------------------------------- one-harmonic slice estimate

/// Empirical constant in sup dist(w, [w_first, w_last]) <= C int |f|,
/// pinned from the mollified single-jump runs in the tests.
inline constexpr double kOneHarmonicConstant = 0.5;

struct OneHarmonicMeasure {
  double sup_distance;
  double integral_f;
  double ratio;  // 0 when sup_distance is below 1e-9, the segment search resolution
};

/// Over the nodes first..last of w (last < 0 means the final node).
/// WindowTooLong when the variation of the window reaches 2 rad_N.
OneHarmonicMeasure one_harmonic_measure(const SampledCurve& w, std::span<const Vec> f, int first = 0, int last = -1);
CheckReport one_harmonic_residual_bound(const SampledCurve& w, std::span<const Vec> f, int first = 0, int last = -1,
                                        double constant = kOneHarmonicConstant);

}  // namespace mtvf::lab
