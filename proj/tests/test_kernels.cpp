#include "mtvf/curve.hpp"
#include "mtvf/kernels.hpp"
#include "mtvf/lab.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace mtvf;
namespace k = mtvf::kernels;

namespace {

std::vector<double> random_curve(const Manifold& m, int n, std::uint64_t seed) {
  Rng rng(seed);
  Vec p = lab::random_point(m, rng);
  std::vector<double> out;
  for (int i = 0; i < n; ++i) {
    const Vec t = lab::random_unit_tangent(m, p, rng);
    p = m.exp(p, 0.05 * t);
    out.insert(out.end(), p.data(), p.data() + p.size());
  }
  return out;
}

}  // namespace

TEST_SUITE("flow-solvers") {

TEST_CASE("serial and OpenMP kernels are bit-identical") {
  for (const auto& m : {Manifold::sphere(3), Manifold::euclidean(2), Manifold::circle(), Manifold::cylinder()}) {
    const int n = 517, d = m.ambient_dim();
    const k::Grid g{n, d, 1.0 / (n - 1)};
    const auto u = random_curve(m, n, 11);
    const auto un = random_curve(m, n, 12);
    const std::size_t nf = n - 1;

    std::vector<double> dist1(nf), v1(nf), c1(nf), z1(nf * d), dist2(nf), v2(nf), c2(nf), z2(nf * d);
    k::serial::face_geometry(m, g, u, 1e-3, dist1, v1, c1, z1);
    k::omp::face_geometry(m, g, u, 1e-3, dist2, v2, c2, z2);
    CHECK(dist1 == dist2);
    CHECK(c1 == c2);
    CHECK(z1 == z2);

    std::vector<double> vel1(n * d), vel2(n * d);
    k::serial::velocity(m, g, u, c1, vel1);
    k::omp::velocity(m, g, u, c1, vel2);
    CHECK(vel1 == vel2);

    std::vector<double> b1(n * d), b2(n * d), r1(nf * d * d), r2(nf * d * d);
    k::serial::linearize(m, g, u, un, c1, 1e-4, b1, r1);
    k::omp::linearize(m, g, u, un, c1, 1e-4, b2, r2);
    CHECK(b1 == b2);
    CHECK(r1 == r2);

    auto w1 = u, w2 = u;
    k::serial::euler_update(m, g, w1, vel1, 1e-6);
    k::omp::euler_update(m, g, w2, vel1, 1e-6);
    CHECK(w1 == w2);
    k::serial::exp_update(m, g, w1, vel1);
    k::omp::exp_update(m, g, w2, vel1);
    CHECK(w1 == w2);
    for (auto& x : w1) x *= 1.1;
    w2 = w1;
    k::serial::project_rows(m, g, w1);
    k::omp::project_rows(m, g, w2);
    CHECK(w1 == w2);
  }
}

TEST_CASE("face geometry values") {
  const auto s = Manifold::sphere(3);
  const std::vector<double> u = {1, 0, 0, 0, 1, 0};
  const k::Grid g{2, 3, 1.0};
  std::vector<double> dist(1), v(1), c(1), z(3);
  k::serial::face_geometry(s, g, u, 0.5, dist, v, c, z);
  const double d = std::acos(0.0);
  CHECK(dist[0] == doctest::Approx(d));
  CHECK(v[0] == doctest::Approx(std::sqrt(0.25 + d * d)));
  CHECK(c[0] == doctest::Approx(1.0 / v[0]));
  // Unit tangent at the midpoint (1, 1, 0) / sqrt 2 points along (-1, 1, 0).
  const double zn = d / v[0];
  CHECK(z[0] == doctest::Approx(-zn / std::sqrt(2.0)));
  CHECK(z[1] == doctest::Approx(zn / std::sqrt(2.0)));
  CHECK(z[2] == doctest::Approx(0.0));
}

TEST_CASE("velocity vanishes on constant curves and is tangent") {
  const auto s = Manifold::sphere(3);
  const int n = 40;
  const k::Grid g{n, 3, 1.0 / (n - 1)};
  std::vector<double> flat;
  for (int i = 0; i < n; ++i) flat.insert(flat.end(), {0.0, 0.6, 0.8});
  std::vector<double> dist(n - 1), v(n - 1), c(n - 1), z((n - 1) * 3), vel(n * 3);
  k::serial::face_geometry(s, g, flat, 1e-2, dist, v, c, z);
  k::serial::velocity(s, g, flat, c, vel);
  for (double x : vel) CHECK(x == 0.0);

  const auto u = random_curve(s, n, 5);
  k::serial::face_geometry(s, g, u, 1e-2, dist, v, c, z);
  k::serial::velocity(s, g, u, c, vel);
  for (int i = 0; i < n; ++i) {
    double dot = 0.0;
    for (int j = 0; j < 3; ++j) dot += u[i * 3 + j] * vel[i * 3 + j];
    CHECK(std::abs(dot) < 1e-10);
  }
}

TEST_CASE("linearized face forces are antisymmetric") {
  // With un = u the right-hand side is the pure force term; transporting
  // every row to a common frame and summing must give zero net force on the
  // line, where transport is the identity.
  const auto r2 = Manifold::euclidean(2);
  const int n = 25;
  const k::Grid g{n, 2, 1.0 / (n - 1)};
  const auto u = random_curve(r2, n, 3);
  std::vector<double> dist(n - 1), v(n - 1), c(n - 1), z((n - 1) * 2), b(n * 2), R((n - 1) * 4);
  k::serial::face_geometry(r2, g, u, 1e-2, dist, v, c, z);
  k::serial::linearize(r2, g, u, u, c, 1e-3, b, R);
  double sx = 0.0, sy = 0.0;
  for (int i = 0; i < n; ++i) {
    sx += b[i * 2];
    sy += b[i * 2 + 1];
  }
  CHECK(std::abs(sx) < 1e-10);
  CHECK(std::abs(sy) < 1e-10);
}

TEST_CASE("mass-Laplacian solve") {
  const std::vector<double> mass = {0.5, 1.0, 1.0, 0.5};
  const std::vector<double> x = {1.0, -2.0, 0.5, 4.0};
  const std::vector<double> w = {2.0, 50.0, 3.0};
  std::vector<double> rhs(4);
  for (int i = 0; i < 4; ++i) {
    rhs[i] = mass[i] * x[i];
    if (i > 0) rhs[i] += w[i - 1] * (x[i] - x[i - 1]);
    if (i < 3) rhs[i] += w[i] * (x[i] - x[i + 1]);
  }
  k::solve_mass_laplacian(mass, w, rhs, 1);
  for (int i = 0; i < 4; ++i) CHECK(rhs[i] == doctest::Approx(x[i]).epsilon(1e-13));

  // A face twelve orders stiffer than the mass: the Laplacian still moves
  // no mass and the two nodes it joins lock together.
  const std::vector<double> stiff = {2.0, 1e12, 3.0};
  std::vector<double> b = {1.0, -2.0, 0.5, 4.0};
  k::solve_mass_laplacian(mass, stiff, b, 1);
  double m_out = 0.0;
  for (int i = 0; i < 4; ++i) m_out += mass[i] * b[i];
  CHECK(m_out == doctest::Approx(1.0 - 2.0 + 0.5 + 4.0).epsilon(1e-12));
  CHECK(std::abs(b[1] - b[2]) < 1e-10);
  CHECK(std::isfinite(b[0]));
}

TEST_CASE("block solve reduces to the scalar solve with identity transport") {
  const int n = 30, d = 2;
  std::vector<double> mass(n), c(n - 1), R((n - 1) * d * d, 0.0), rhs(n * d);
  Rng rng(9);
  for (int i = 0; i < n; ++i) mass[i] = rng.uniform(0.1, 1.0);
  for (int f = 0; f < n - 1; ++f) {
    c[f] = rng.uniform(0.0, 100.0);
    R[f * 4] = R[f * 4 + 3] = 1.0;
  }
  for (auto& x : rhs) x = rng.normal();
  auto a = rhs, b = rhs;
  k::solve_mass_laplacian(mass, c, a, d);
  k::solve_block_laplacian(mass, c, R, b, d);
  for (int i = 0; i < n * d; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-10));
}

TEST_CASE("map_indexed is order independent") {
  std::vector<double> a, b;
  auto f = [](std::size_t k) { return std::sin(static_cast<double>(k)); };
  k::map_indexed<double>(1000, f, a, false);
  k::map_indexed<double>(1000, f, b, true);
  CHECK(a == b);
  CHECK(k::max_threads() >= 1);
}

}  // TEST_SUITE
