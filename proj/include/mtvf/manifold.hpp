#pragma once

#include <Eigen/Core>

#include <string>
#include <string_view>

namespace mtvf {

inline constexpr int kMaxAmbientDim = 16;

/// Ambient coordinates. Inline storage, no heap traffic in the inner loops.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxAmbientDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxAmbientDim, kMaxAmbientDim>;

inline constexpr double kConstraintTol = 1e-12;

enum class ManifoldKind { Euclidean, Circle, Sphere, Cylinder };

/// Unit tangents of the minimizing segment from p to q, taken at both ends.
struct UnitTangentPair {
  Vec at_start;  // log_p(q) / dist(p, q)
  Vec at_end;    // -log_q(p) / dist(p, q)
};

/// One of the four closed-form target manifolds, embedded isometrically in
/// R^N. Points and tangent vectors are carried as ambient coordinates; all
/// operations are pure.
///
///   euclidean:N   R^N                       K = 0, inj = inf
///   sphere:N      unit sphere S^{N-1} in R^N K = 1, inj = pi
///   circle        unit circle in R^2         K = 1, inj = pi
///   cylinder      S^1 x R in R^3             K = 0, inj = pi
class Manifold {
public:
  static Manifold euclidean(int dim);
  static Manifold sphere(int dim);
  static Manifold circle();
  static Manifold cylinder();

  /// Parses "euclidean:<N>", "sphere:<N>", "circle" or "cylinder".
  static Manifold parse(std::string_view id);
  std::string id() const;

  ManifoldKind kind() const { return kind_; }
  int ambient_dim() const { return dim_; }
  bool is_spherical() const { return kind_ == ManifoldKind::Sphere || kind_ == ManifoldKind::Circle; }

  /// Supremum of the sectional curvatures (K_N).
  double curvature_bound() const;
  double injectivity_radius() const;
  /// Half of min{inj, pi / sqrt(K)} (K > 0) or half of inj (K <= 0).
  double rad() const;

  double constraint_residual(const Vec& p) const;
  bool contains(const Vec& p, double tol = kConstraintTol) const;

  /// Closest point on the manifold. Throws SingularProjection at the
  /// centre of the sphere or on the cylinder axis.
  Vec project(const Vec& x) const;
  Vec tangent_projection(const Vec& p, const Vec& v) const;

  double dist(const Vec& p, const Vec& q) const;
  Vec exp(const Vec& p, const Vec& v) const;
  /// Inverse of exp. Throws BeyondInjectivityRadius on the cut locus.
  Vec log(const Vec& p, const Vec& q) const;
  /// exp(p, s log(p, q)), exact at s = 0 and s = 1.
  Vec geodesic_point(const Vec& p, const Vec& q, double s) const;
  /// Throws DegenerateJump when p == q.
  UnitTangentPair unit_tangent_pair(const Vec& p, const Vec& q) const;

  /// Parallel transport along the minimizing geodesic from p to q, as an
  /// orthogonal map of R^N sending T_p to T_q and normals at p to normals
  /// at q (the minimal rotation p -> q on the curved factor).
  Mat transport_matrix(const Vec& p, const Vec& q) const;

  /// Normal-valued, sign fixed so that pi_u(z_x) = z_x + A_u(z, u_x) for
  /// tangent fields z along u. On the sphere A_p(X, Y) = p (X . Y).
  Vec second_fundamental_form(const Vec& p, const Vec& x, const Vec& y) const;

  /// h_N(sigma): 1 when K <= 0, sqrt(K) sigma cot(sqrt(K) sigma) otherwise.
  /// Defined on [0, 2 rad).
  double comparison_factor(double sigma) const;

  Vec zero() const { return Vec::Zero(dim_); }

  bool operator==(const Manifold& other) const = default;

private:
  Manifold(ManifoldKind kind, int dim) : kind_(kind), dim_(dim) {}

  ManifoldKind kind_;
  int dim_;
};

}  // namespace mtvf
