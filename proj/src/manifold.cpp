#include "mtvf/manifold.hpp"

#include "mtvf/errors.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

namespace mtvf {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
// Below this norm a vector on the unit sphere is treated as pointing at the
// antipode (log) or as the zero vector (exp).
constexpr double kTiny = 1e-15;

// sin(x) / x, stable at 0.
double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

// Unit-sphere primitives in whatever dimension the argument has.
double sphere_dist(const Vec& p, const Vec& q) {
  const double c = p.dot(q);
  const double s = (q - c * p).norm();
  return std::atan2(s, c);
}

Vec sphere_exp(const Vec& p, const Vec& v) {
  const double n = v.norm();
  Vec r = std::cos(n) * p + sinc(n) * v;
  return r / r.norm();
}

Vec sphere_log(const Vec& p, const Vec& q) {
  const double c = p.dot(q);
  Vec w = q - c * p;
  const double s = w.norm();
  if (s < kTiny) {
    if (c < 0.0) throw Error(ErrorCode::BeyondInjectivityRadius, "log of antipodal points");
    return Vec::Zero(p.size());
  }
  const double theta = std::atan2(s, c);
  return (theta / s) * w;
}

Vec sphere_project(const Vec& x) {
  const double n = x.norm();
  if (n < 1e-12) throw Error(ErrorCode::SingularProjection, "projection of the sphere centre");
  return x / n;
}

int parse_dim(std::string_view s) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorCode::ParseError, "bad manifold dimension '" + std::string(s) + "'");
  return value;
}

}  // namespace

Manifold Manifold::euclidean(int dim) {
  if (dim < 1 || dim > kMaxAmbientDim) throw Error(ErrorCode::InvalidArgument, "euclidean dimension out of range");
  return {ManifoldKind::Euclidean, dim};
}

Manifold Manifold::sphere(int dim) {
  if (dim < 2 || dim > kMaxAmbientDim) throw Error(ErrorCode::InvalidArgument, "sphere requires 2 <= N <= 16");
  return {ManifoldKind::Sphere, dim};
}

Manifold Manifold::circle() { return {ManifoldKind::Circle, 2}; }
Manifold Manifold::cylinder() { return {ManifoldKind::Cylinder, 3}; }

Manifold Manifold::parse(std::string_view id) {
  if (id == "circle") return circle();
  if (id == "cylinder") return cylinder();
  const auto colon = id.find(':');
  if (colon != std::string_view::npos) {
    const auto head = id.substr(0, colon);
    const auto tail = id.substr(colon + 1);
    if (head == "euclidean") return euclidean(parse_dim(tail));
    if (head == "sphere") return sphere(parse_dim(tail));
  }
  throw Error(ErrorCode::ParseError, "unknown manifold id '" + std::string(id) + "'");
}

std::string Manifold::id() const {
  switch (kind_) {
    case ManifoldKind::Euclidean: return "euclidean:" + std::to_string(dim_);
    case ManifoldKind::Sphere: return "sphere:" + std::to_string(dim_);
    case ManifoldKind::Circle: return "circle";
    case ManifoldKind::Cylinder: return "cylinder";
  }
  return {};
}

double Manifold::curvature_bound() const { return is_spherical() ? 1.0 : 0.0; }

double Manifold::injectivity_radius() const { return kind_ == ManifoldKind::Euclidean ? kInf : kPi; }

double Manifold::rad() const {
  const double inj = injectivity_radius();
  const double k = curvature_bound();
  if (k > 0.0) return 0.5 * std::min(inj, kPi / std::sqrt(k));
  return 0.5 * inj;
}

double Manifold::constraint_residual(const Vec& p) const {
  switch (kind_) {
    case ManifoldKind::Euclidean: return 0.0;
    case ManifoldKind::Sphere:
    case ManifoldKind::Circle: return std::abs(p.squaredNorm() - 1.0);
    case ManifoldKind::Cylinder: return std::abs(p.head<2>().squaredNorm() - 1.0);
  }
  return 0.0;
}

bool Manifold::contains(const Vec& p, double tol) const {
  return p.size() == dim_ && constraint_residual(p) <= tol;
}

Vec Manifold::project(const Vec& x) const {
  switch (kind_) {
    case ManifoldKind::Euclidean: return x;
    case ManifoldKind::Sphere:
    case ManifoldKind::Circle: return sphere_project(x);
    case ManifoldKind::Cylinder: {
      Vec r = x;
      const double n = x.head<2>().norm();
      if (n < 1e-12) throw Error(ErrorCode::SingularProjection, "projection of a point on the cylinder axis");
      r.head<2>() /= n;
      return r;
    }
  }
  return x;
}

Vec Manifold::tangent_projection(const Vec& p, const Vec& v) const {
  switch (kind_) {
    case ManifoldKind::Euclidean: return v;
    case ManifoldKind::Sphere:
    case ManifoldKind::Circle: return v - v.dot(p) * p;
    case ManifoldKind::Cylinder: {
      Vec r = v;
      const double radial = v.head<2>().dot(p.head<2>());
      r.head<2>() -= radial * p.head<2>();
      return r;
    }
  }
  return v;
}

double Manifold::dist(const Vec& p, const Vec& q) const {
  switch (kind_) {
    case ManifoldKind::Euclidean: return (q - p).norm();
    case ManifoldKind::Sphere:
    case ManifoldKind::Circle: return sphere_dist(p, q);
    case ManifoldKind::Cylinder: {
      const double a = sphere_dist(p.head<2>(), q.head<2>());
      const double h = q[2] - p[2];
      return std::hypot(a, h);
    }
  }
  return 0.0;
}

Vec Manifold::exp(const Vec& p, const Vec& v) const {
  switch (kind_) {
    case ManifoldKind::Euclidean: return p + v;
    case ManifoldKind::Sphere:
    case ManifoldKind::Circle: return sphere_exp(p, v);
    case ManifoldKind::Cylinder: {
      Vec r(3);
      r.head<2>() = sphere_exp(p.head<2>(), v.head<2>());
      r[2] = p[2] + v[2];
      return r;
    }
  }
  return p;
}

Vec Manifold::log(const Vec& p, const Vec& q) const {
  switch (kind_) {
    case ManifoldKind::Euclidean: return q - p;
    case ManifoldKind::Sphere:
    case ManifoldKind::Circle: return sphere_log(p, q);
    case ManifoldKind::Cylinder: {
      Vec r(3);
      r.head<2>() = sphere_log(p.head<2>(), q.head<2>());
      r[2] = q[2] - p[2];
      return r;
    }
  }
  return q - p;
}

Vec Manifold::geodesic_point(const Vec& p, const Vec& q, double s) const {
  if (s == 0.0) return p;
  if (s == 1.0) return q;
  if (kind_ == ManifoldKind::Euclidean) return (1.0 - s) * p + s * q;
  return exp(p, s * log(p, q));
}

UnitTangentPair Manifold::unit_tangent_pair(const Vec& p, const Vec& q) const {
  const Vec forward = log(p, q);
  const double d = forward.norm();
  if (d <= kTiny) throw Error(ErrorCode::DegenerateJump, "unit tangents of a zero-length segment");
  const Vec backward = log(q, p);
  return {forward / d, -backward / backward.norm()};
}

namespace {

// Rotation of R^k taking the unit vector a to the unit vector b and fixing
// the complement of span{a, b}.
Mat minimal_rotation(const Vec& a, const Vec& b) {
  const int k = static_cast<int>(a.size());
  const double c = a.dot(b);
  if (c <= -1.0 + 1e-15) throw Error(ErrorCode::BeyondInjectivityRadius, "transport between antipodal points");
  Mat kmat = b * a.transpose() - a * b.transpose();
  return Mat::Identity(k, k) + kmat + (kmat * kmat) / (1.0 + c);
}

}  // namespace

Mat Manifold::transport_matrix(const Vec& p, const Vec& q) const {
  switch (kind_) {
    case ManifoldKind::Euclidean: return Mat::Identity(dim_, dim_);
    case ManifoldKind::Sphere:
    case ManifoldKind::Circle: return minimal_rotation(p, q);
    case ManifoldKind::Cylinder: {
      Mat r = Mat::Identity(3, 3);
      r.topLeftCorner(2, 2) = minimal_rotation(p.head<2>(), q.head<2>());
      return r;
    }
  }
  return Mat::Identity(dim_, dim_);
}

Vec Manifold::second_fundamental_form(const Vec& p, const Vec& x, const Vec& y) const {
  switch (kind_) {
    case ManifoldKind::Euclidean: return Vec::Zero(dim_);
    case ManifoldKind::Sphere:
    case ManifoldKind::Circle: return x.dot(y) * p;
    case ManifoldKind::Cylinder: {
      Vec r = Vec::Zero(3);
      r.head<2>() = x.head<2>().dot(y.head<2>()) * p.head<2>();
      return r;
    }
  }
  return Vec::Zero(dim_);
}

double Manifold::comparison_factor(double sigma) const {
  if (!(sigma >= 0.0) || sigma >= 2.0 * rad())
    throw Error(ErrorCode::OutOfComparisonRange, "sigma outside [0, 2 rad_N)");
  const double k = curvature_bound();
  if (k <= 0.0) return 1.0;
  const double x = std::sqrt(k) * sigma;
  if (x < 1e-4) return 1.0 - x * x / 3.0;
  return x / std::tan(x);
}

}  // namespace mtvf
