#include "mtvf/lab.hpp"

#include "mtvf/errors.hpp"
#include "mtvf/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mtvf::lab {

namespace {

constexpr double kPi = std::numbers::pi;

double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

Vec axis(int k) {
  Vec e = Vec::Zero(3);
  e[k] = 1.0;
  return e;
}

}  // namespace

Vec random_point(const Manifold& m, Rng& rng) {
  for (;;) {
    Vec v(m.ambient_dim());
    for (int k = 0; k < v.size(); ++k) v[k] = rng.normal();
    if (m.kind() == ManifoldKind::Euclidean) return v;
    if (v.head<2>().norm() > 1e-6) return m.project(v);
  }
}

Vec random_unit_tangent(const Manifold& m, const Vec& p, Rng& rng) {
  for (;;) {
    Vec v(m.ambient_dim());
    for (int k = 0; k < v.size(); ++k) v[k] = rng.normal();
    v = m.tangent_projection(p, v);
    const double n = v.norm();
    if (n > 1e-6) return v / n;
  }
}

// ---------------------------------------------------------------- spherical trigonometry

double hav(double theta) {
  const double s = std::sin(0.5 * theta);
  return s * s;
}

double haversine_side(double a, double b, double gamma) {
  if (!(a > 0.0 && a < kPi && b > 0.0 && b < kPi)) throw Error(ErrorCode::DomainError, "sides must lie in (0, pi)");
  if (!(gamma >= 0.0 && gamma <= kPi)) throw Error(ErrorCode::DomainError, "angle must lie in [0, pi]");
  const double h = std::clamp(hav(a - b) + std::sin(a) * std::sin(b) * hav(gamma), 0.0, 1.0);
  return 2.0 * std::asin(std::sqrt(h));
}

SphericalTriangle SphericalTriangle::from_sides(double a, double b, double c) {
  const double scale = a + b + c;
  const double slack = 1e-12 * std::max(1.0, scale);
  if (!(std::min({a, b, c}) > slack) || a + b - c <= slack || b + c - a <= slack || c + a - b <= slack)
    throw Error(ErrorCode::DegenerateTriangle, "sides violate the strict triangle inequality");
  if (!(scale < 2.0 * kPi)) throw Error(ErrorCode::DegenerateTriangle, "perimeter must stay below 2 pi");
  // hav(alpha) = (hav a - hav(b - c)) / (sin b sin c), cancellation-free.
  auto angle = [](double opposite, double s1, double s2) {
    const double h = (hav(opposite) - hav(s1 - s2)) / (std::sin(s1) * std::sin(s2));
    return 2.0 * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0)));
  };
  return {a, b, c, angle(a, b, c), angle(b, c, a), angle(c, a, b)};
}

SphericalTriangle SphericalTriangle::from_vertices(const Vec& p, const Vec& q, const Vec& r) {
  const auto s = Manifold::sphere(3);
  const double c = s.dist(p, q);  // opposite r
  const double a = s.dist(q, r);  // opposite p
  const double b = s.dist(r, p);  // opposite q
  auto tri = from_sides(a, b, c);  // validates
  auto angle_at = [&](const Vec& v, const Vec& x, const Vec& y) {
    const Vec tx = s.unit_tangent_pair(v, x).at_start;
    const Vec ty = s.unit_tangent_pair(v, y).at_start;
    return std::acos(clamp_unit(tx.dot(ty)));
  };
  tri.alpha = angle_at(p, q, r);
  tri.beta = angle_at(q, r, p);
  tri.gamma = angle_at(r, p, q);
  return tri;
}

PlanarAngles planar_angles(double a, double b, double c) {
  auto angle = [](double opposite, double s1, double s2) {
    return std::acos(clamp_unit((s1 * s1 + s2 * s2 - opposite * opposite) / (2.0 * s1 * s2)));
  };
  return {angle(a, b, c), angle(b, c, a), angle(c, a, b)};
}

CheckReport alexandrov_angle_check(const Vec& p, const Vec& q, const Vec& r) {
  const auto sph = SphericalTriangle::from_vertices(p, q, r);
  const auto flat = planar_angles(sph.a, sph.b, sph.c);
  CheckReport rep;
  rep.check_name = "alexandrov_angles";
  rep.tolerance = 1e-9;
  rep.at_t = 0.0;
  rep.at_x = std::numeric_limits<double>::quiet_NaN();
  const double gaps[3] = {flat.alpha - sph.alpha, flat.beta - sph.beta, flat.gamma - sph.gamma};
  const char* names[3] = {"alpha", "beta", "gamma"};
  const auto worst = std::max_element(gaps, gaps + 3) - gaps;
  rep.worst_violation = gaps[worst];
  rep.detail = names[worst];
  rep.pass = rep.worst_violation <= rep.tolerance;
  return rep;
}

// ---------------------------------------------------------------- semiconvexity counterexamples

SquareVertices square_vertices(double a) {
  if (!(a > 0.0 && a <= 0.5 * kPi)) throw Error(ErrorCode::DomainError, "square side must lie in (0, pi/2]");
  const auto s = Manifold::sphere(3);
  const Vec e1 = axis(0), e2 = axis(1), e3 = axis(2);
  const double diag = std::numbers::sqrt2 / 2.0;
  auto vertex = [&](double rho, double sy, double sz) { return s.exp(e1, rho * diag * (sy * e2 + sz * e3)); };
  // The side grows with the circumradius; it reaches pi/2 at rho = pi/2.
  double lo = 0.0, hi = 0.5 * kPi;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    (s.dist(vertex(mid, 1, 1), vertex(mid, -1, 1)) < a ? lo : hi) = mid;
  }
  const double rho = 0.5 * (lo + hi);
  return {vertex(rho, 1, 1), vertex(rho, 1, -1), vertex(rho, -1, 1), vertex(rho, -1, -1)};
}

double midpoint_separation(double a) {
  if (!(a > 0.0 && a <= 0.5 * kPi)) throw Error(ErrorCode::DomainError, "side must lie in (0, pi/2]");
  const double t = std::tan(0.5 * a);
  if (t > 1.0) throw Error(ErrorCode::DomainError, "tan(a/2) exceeds 1");
  return 2.0 * std::asin(t);
}

SemiconvexityPair semiconvexity_pair(double a, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw Error(ErrorCode::DomainError, "eps must lie in (0, 1/2)");
  const auto sq = square_vertices(a);
  const auto s = Manifold::sphere(3);
  return {PiecewiseConstantCurve(s, {0.5}, {sq.p0, sq.q0}),
          PiecewiseConstantCurve(s, {0.5 - eps, 0.5, 0.5 + eps}, {sq.p0, sq.p1, sq.q1, sq.q0})};
}

PiecewiseConstantCurve geodesic_interpolation(const PiecewiseConstantCurve& u, const PiecewiseConstantCurve& v,
                                              double t) {
  if (!(u.manifold() == v.manifold())) throw Error(ErrorCode::InvalidArgument, "curves live on different manifolds");
  std::vector<double> cuts(u.breakpoints().begin(), u.breakpoints().end());
  cuts.insert(cuts.end(), v.breakpoints().begin(), v.breakpoints().end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<Vec> values;
  for (std::size_t i = 0; i <= cuts.size(); ++i) {
    const double lo = i == 0 ? 0.0 : cuts[i - 1];
    const double hi = i == cuts.size() ? 1.0 : cuts[i];
    const double mid = 0.5 * (lo + hi);
    values.push_back(u.manifold().geodesic_point(u.value_at(mid), v.value_at(mid), t));
  }
  return PiecewiseConstantCurve(u.manifold(), cuts, values);
}

double lambda_convexity_violation(double lambda, double a) {
  if (!(a > 0.0 && a < 0.5 * kPi)) throw Error(ErrorCode::DomainError, "side must lie in (0, pi/2)");
  if (lambda <= 0.0) return 0.5;
  return std::min(0.5, 4.0 * (midpoint_separation(a) - a) / (lambda * a));
}

double semiconvexity_gap(int n) {
  if (n < 1) throw Error(ErrorCode::DomainError, "n must be at least 1");
  const double nn = n;
  const double x = 1.0 / (8.0 * nn * (nn + 1.0));
  const double penalty = std::ldexp(3.0, -(n + 5)) / (nn * (nn + 1.0) * (nn + 1.0));
  return 2.0 * std::asin(std::tan(x)) - 2.0 * x - penalty;
}

int first_positive_gap(int n_max) {
  int first = 0;
  for (int n = n_max; n >= 1 && semiconvexity_gap(n) > 0.0; --n) first = n;
  return first;
}

// ---------------------------------------------------------------- Hessian comparison

double directional_hessian(const Manifold& m, const Vec& p0, const Vec& p, const Vec& x, double step) {
  auto f = [&](double s) {
    const double d = m.dist(m.exp(p, s * x), p0);
    return 0.5 * d * d;
  };
  const double f0 = f(0.0);
  auto second = [&](double s) { return (f(s) - 2.0 * f0 + f(-s)) / (s * s); };
  return (4.0 * second(0.5 * step) - second(step)) / 3.0;
}

HessianEstimate hessian_comparison_check(const Manifold& m, const Vec& p0, const Vec& p, int n_dirs, std::uint64_t seed) {
  const double r = m.dist(p, p0);
  if (!(r < 2.0 * m.rad())) throw Error(ErrorCode::OutOfComparisonRange, "dist(p, p0) must stay below 2 rad_N");
  HessianEstimate out{r, m.comparison_factor(r), std::numeric_limits<double>::infinity(), 0.0, 0.0, {}};
  Rng rng(seed);
  for (int k = 0; k < n_dirs; ++k) {
    const double e = directional_hessian(m, p0, p, random_unit_tangent(m, p, rng));
    out.estimates.push_back(e);
    out.min_estimate = std::min(out.min_estimate, e);
  }
  Vec radial = r > 0.0 ? Vec(m.log(p, p0) / r) : random_unit_tangent(m, p, rng);
  Vec tangential = random_unit_tangent(m, p, rng);
  tangential -= tangential.dot(radial) * radial;
  if (tangential.norm() < 1e-8) tangential = radial;  // one-dimensional tangent space
  tangential.normalize();
  out.radial = directional_hessian(m, p0, p, radial);
  out.tangential = directional_hessian(m, p0, p, tangential);
  out.min_estimate = std::min({out.min_estimate, out.radial, out.tangential});
  return out;
}

HessianSweep hessian_sweep(const Manifold& m, int configurations, double r_max, std::uint64_t seed) {
  if (!(r_max > 0.0 && r_max <= 2.0 * m.rad()))
    throw Error(ErrorCode::OutOfComparisonRange, "r_max must lie in (0, 2 rad_N]");
  std::vector<double> margin(configurations), tangential(configurations), estimate(configurations);
  const auto count = static_cast<long long>(configurations);
#pragma omp parallel for schedule(static) num_threads(kernels::max_threads())
  for (long long k = 0; k < count; ++k) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(k));
    const Vec p0 = random_point(m, rng);
    const double r = r_max * (1.0 - rng.uniform());  // (0, r_max]
    const double radius = std::min(r, std::nextafter(2.0 * m.rad(), 0.0));
    const Vec p = m.exp(p0, radius * random_unit_tangent(m, p0, rng));
    const auto est = hessian_comparison_check(m, p0, p, 1, rng.next());
    const auto i = static_cast<std::size_t>(k);
    margin[i] = std::min({est.estimates[0], est.radial, est.tangential}) - est.bound;
    tangential[i] = std::abs(est.tangential - est.bound);
    estimate[i] = est.estimates[0];
  }
  HessianSweep out;
  out.configurations = configurations;
  if (configurations > 0) {
    out.worst_margin = *std::min_element(margin.begin(), margin.end());
    out.worst_tangential = *std::max_element(tangential.begin(), tangential.end());
    out.min_estimate = *std::min_element(estimate.begin(), estimate.end());
  }
  return out;
}

// ---------------------------------------------------------------- geodesic stability

constexpr double kSegmentResolution = 1e-9;

double distance_to_segment(const Manifold& m, const Vec& x, const Vec& p, const Vec& q) {
  if (m.dist(p, q) == 0.0) return m.dist(x, p);
  const Vec v = m.log(p, q);
  auto d = [&](double s) { return m.dist(x, m.exp(p, s * v)); };
  // Coarse scan, then golden section around the best sample; the distance
  // to a segment inside a convex ball is convex along it.
  constexpr int kCoarse = 32;
  int best = 0;
  double best_d = d(0.0);
  for (int k = 1; k <= kCoarse; ++k) {
    const double dk = d(static_cast<double>(k) / kCoarse);
    if (dk < best_d) best_d = dk, best = k;
  }
  double lo = std::max(0, best - 1) / static_cast<double>(kCoarse);
  double hi = std::min(kCoarse, best + 1) / static_cast<double>(kCoarse);
  constexpr double g = 0.6180339887498949;
  double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
  double fa = d(a), fb = d(b);
  while (hi - lo > 1e-10) {
    if (fa < fb) {
      hi = b, b = a, fb = fa;
      a = hi - g * (hi - lo), fa = d(a);
    } else {
      lo = a, a = b, fa = fb;
      b = lo + g * (hi - lo), fb = d(b);
    }
  }
  return std::min({best_d, fa, fb});
}

double geodesic_endpoint_stability(const Manifold& m, const Vec& p1, const Vec& q1, const Vec& p2, const Vec& q2,
                                   int n_samples) {
  if (n_samples < 1) throw Error(ErrorCode::InvalidArgument, "n_samples must be positive");
  const double denom = std::max(m.dist(p1, p2), m.dist(q1, q2));
  if (denom == 0.0) return 0.0;
  double sup = 0.0;
  for (int k = 0; k <= n_samples; ++k) {
    const Vec x = m.geodesic_point(p1, q1, static_cast<double>(k) / n_samples);
    sup = std::max(sup, distance_to_segment(m, x, p2, q2));
  }
  return sup / denom;
}

StabilitySweep stability_sweep(const Manifold& m, double radius, int quadruples, std::uint64_t seed, int n_samples) {
  if (!(radius > 0.0 && radius < m.rad()))
    throw Error(ErrorCode::BeyondInjectivityRadius, "ball radius must lie in (0, rad_N)");
  StabilitySweep out;
  out.ratios.assign(quadruples, 0.0);
  const auto count = static_cast<long long>(quadruples);
#pragma omp parallel for schedule(dynamic, 64) num_threads(kernels::max_threads())
  for (long long k = 0; k < count; ++k) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(k));
    const Vec centre = random_point(m, rng);
    Vec pts[4];
    for (auto& x : pts) x = m.exp(centre, radius * rng.uniform() * random_unit_tangent(m, centre, rng));
    out.ratios[static_cast<std::size_t>(k)] = geodesic_endpoint_stability(m, pts[0], pts[1], pts[2], pts[3], n_samples);
  }
  for (double r : out.ratios) out.max_ratio = std::max(out.max_ratio, r);
  return out;
}

std::vector<int> histogram(std::span<const double> values, double max, int bins) {
  if (bins < 1 || !(max > 0.0)) throw Error(ErrorCode::InvalidArgument, "histogram needs bins >= 1 and max > 0");
  std::vector<int> h(bins, 0);
  for (double v : values) {
    const auto b = static_cast<int>(std::clamp(v / max, 0.0, 1.0) * bins);
    ++h[std::min(b, bins - 1)];
  }
  return h;
}

// ---------------------------------------------------------------- one-harmonic slice estimate

OneHarmonicMeasure one_harmonic_measure(const SampledCurve& w, std::span<const Vec> f, int first, int last) {
  const Manifold& m = w.manifold();
  if (last < 0) last = w.grid_n() - 1;
  if (first < 0 || first > last || last >= w.grid_n()) throw Error(ErrorCode::InvalidArgument, "window outside the grid");
  if (f.size() != static_cast<std::size_t>(w.grid_n())) throw Error(ErrorCode::InvalidArgument, "f must have one value per node");
  double variation = 0.0;
  for (int i = first; i < last; ++i) variation += m.dist(w.at(i), w.at(i + 1));
  if (variation >= 2.0 * m.rad()) throw Error(ErrorCode::WindowTooLong, "window variation reaches 2 rad_N");
  const Vec a = w.at(first), b = w.at(last);
  OneHarmonicMeasure out{0.0, 0.0, 0.0};
  for (int i = first; i <= last; ++i) {
    out.sup_distance = std::max(out.sup_distance, distance_to_segment(m, w.at(i), a, b));
    out.integral_f += w.control_volume(i) * f[i].norm();
  }
  // Distances below the segment search resolution count as zero.
  if (out.sup_distance <= kSegmentResolution) out.ratio = 0.0;
  else if (out.integral_f > 0.0) out.ratio = out.sup_distance / out.integral_f;
  else out.ratio = std::numeric_limits<double>::infinity();
  return out;
}

CheckReport one_harmonic_residual_bound(const SampledCurve& w, std::span<const Vec> f, int first, int last,
                                        double constant) {
  const auto meas = one_harmonic_measure(w, f, first, last);
  CheckReport rep;
  rep.check_name = "one_harmonic";
  rep.worst_violation = meas.sup_distance - constant * meas.integral_f;
  rep.tolerance = kSegmentResolution;
  rep.at_t = 0.0;
  rep.at_x = std::numeric_limits<double>::quiet_NaN();
  rep.pass = rep.worst_violation <= rep.tolerance;
  rep.detail = "ratio " + std::to_string(meas.ratio);
  return rep;
}

}  // namespace mtvf::lab
