#include "mtvf/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include <Eigen/Cholesky>

namespace mtvf::kernels {

int max_threads() {
  int n = omp_get_max_threads();
  if (const char* env = std::getenv("MTVF_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1) n = std::min(n, cap);
    } catch (...) {
      // Malformed values are ignored.
    }
  }
  return std::max(n, 1);
}

namespace {

// Per-element bodies shared by both loop drivers.

inline Vec row(const double* base, int i, int dim) {
  Vec r(dim);
  for (int k = 0; k < dim; ++k) r[k] = base[static_cast<std::size_t>(i) * dim + k];
  return r;
}

inline void put(double* base, int i, const Vec& r) {
  for (int k = 0; k < r.size(); ++k) base[static_cast<std::size_t>(i) * r.size() + k] = r[k];
}

inline double node_mass(const Grid& g, int i) { return (i == 0 || i == g.n - 1) ? 0.5 * g.h : g.h; }

inline void face_at(const Manifold& m, const Grid& g, const double* u, double eps, double* dist, double* v, double* c,
                    double* z, int f) {
  const Vec a = row(u, f, g.dim);
  const Vec b = row(u, f + 1, g.dim);
  const double d = m.dist(a, b);
  const double slope = d / g.h;
  const double w = std::sqrt(eps * eps + slope * slope);
  dist[f] = d;
  v[f] = w;
  c[f] = 1.0 / (g.h * w);
  Vec zf = Vec::Zero(g.dim);
  if (d > 0.0) {
    const Vec mid = m.geodesic_point(a, b, 0.5);
    const Vec t = m.log(mid, b);
    const double tn = t.norm();
    if (tn > 0.0) zf = (slope / w / tn) * t;
  }
  put(z, f, zf);
}

inline void velocity_at(const Manifold& m, const Grid& g, const double* u, const double* c, double* out, int i) {
  const Vec ui = row(u, i, g.dim);
  Vec acc = Vec::Zero(g.dim);
  if (i < g.n - 1) acc += c[i] * m.log(ui, row(u, i + 1, g.dim));
  if (i > 0) acc += c[i - 1] * m.log(ui, row(u, i - 1, g.dim));
  put(out, i, acc / node_mass(g, i));
}

inline void euler_at(const Manifold& m, const Grid& g, double* u, const double* vel, double dt, int i) {
  Vec x = row(u, i, g.dim) + dt * row(vel, i, g.dim);
  put(u, i, m.project(x));
}

// Both neighbours of a face use the same log s_f = log_{u_f} u_{f+1}; the
// far side receives -R_f s_f, which is exact for the minimal rotation and
// makes the face forces cancel to rounding in the elimination.
inline void linearize_at(const Manifold& m, const Grid& g, const double* u, const double* un, const double* c,
                         double dt, double* b, double* transport, int i) {
  const Vec ui = row(u, i, g.dim);
  Vec acc = (node_mass(g, i) / dt) * m.log(ui, row(un, i, g.dim));
  if (i < g.n - 1) {
    const Vec next = row(u, i + 1, g.dim);
    acc += c[i] * m.log(ui, next);
    const Mat r = m.transport_matrix(ui, next);
    double* dst = transport + static_cast<std::size_t>(i) * g.dim * g.dim;
    for (int p = 0; p < g.dim; ++p)
      for (int q = 0; q < g.dim; ++q) dst[p * g.dim + q] = r(p, q);
  }
  if (i > 0) {
    const Vec before = row(u, i - 1, g.dim);
    const Vec s = m.log(before, ui);
    acc -= c[i - 1] * (m.transport_matrix(before, ui) * s);
  }
  put(b, i, acc);
}

inline void exp_at(const Manifold& m, const Grid& g, double* u, const double* xi, int i) {
  const Vec ui = row(u, i, g.dim);
  put(u, i, m.exp(ui, m.tangent_projection(ui, row(xi, i, g.dim))));
}

inline void project_at(const Manifold& m, const Grid& g, double* u, int i) {
  put(u, i, m.project(row(u, i, g.dim)));
}

}  // namespace

#define MTVF_KERNEL_SET                                                                                             \
  void face_geometry(const Manifold& m, const Grid& g, std::span<const double> u, double eps,                      \
                     std::span<double> dist, std::span<double> v, std::span<double> c, std::span<double> z) {      \
    MTVF_LOOP for (int f = 0; f < g.n - 1; ++f) face_at(m, g, u.data(), eps, dist.data(), v.data(), c.data(),      \
                                                        z.data(), f);                                             \
  }                                                                                                                 \
  void velocity(const Manifold& m, const Grid& g, std::span<const double> u, std::span<const double> c,            \
                std::span<double> out) {                                                                            \
    MTVF_LOOP for (int i = 0; i < g.n; ++i) velocity_at(m, g, u.data(), c.data(), out.data(), i);                 \
  }                                                                                                                 \
  void euler_update(const Manifold& m, const Grid& g, std::span<double> u, std::span<const double> vel,            \
                    double dt) {                                                                                    \
    MTVF_LOOP for (int i = 0; i < g.n; ++i) euler_at(m, g, u.data(), vel.data(), dt, i);                          \
  }                                                                                                                 \
  void linearize(const Manifold& m, const Grid& g, std::span<const double> u, std::span<const double> un,          \
                 std::span<const double> c, double dt, std::span<double> b, std::span<double> transport) {         \
    MTVF_LOOP for (int i = 0; i < g.n; ++i) linearize_at(m, g, u.data(), un.data(), c.data(), dt, b.data(),       \
                                                         transport.data(), i);                                     \
  }                                                                                                                 \
  void exp_update(const Manifold& m, const Grid& g, std::span<double> u, std::span<const double> xi) {            \
    MTVF_LOOP for (int i = 0; i < g.n; ++i) exp_at(m, g, u.data(), xi.data(), i);                                 \
  }                                                                                                                 \
  void project_rows(const Manifold& m, const Grid& g, std::span<double> u) {                                      \
    MTVF_LOOP for (int i = 0; i < g.n; ++i) project_at(m, g, u.data(), i);                                        \
  }

namespace serial {
#define MTVF_LOOP
MTVF_KERNEL_SET
#undef MTVF_LOOP
}  // namespace serial

namespace omp {
#define MTVF_LOOP _Pragma("omp parallel for schedule(static) num_threads(max_threads())")
MTVF_KERNEL_SET
#undef MTVF_LOOP
}  // namespace omp

#undef MTVF_KERNEL_SET

void solve_mass_laplacian(std::span<const double> mass, std::span<const double> w, std::span<double> rhs, int dim) {
  const std::size_t n = mass.size();
  std::vector<double> p(n);
  std::vector<double> gain(n, 0.0);  // gain[i] = w_{i-1} / (p_{i-1} + w_{i-1})
  p[0] = mass[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double a = w[i - 1];
    gain[i] = a / (p[i - 1] + a);
    p[i] = mass[i] + gain[i] * p[i - 1];
  }
  for (int k = 0; k < dim; ++k) {
    auto y = [&](std::size_t i) -> double& { return rhs[i * dim + k]; };
    for (std::size_t i = 1; i < n; ++i) y(i) += gain[i] * y(i - 1);
    y(n - 1) /= p[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) y(i) = (y(i) + w[i] * y(i + 1)) / (p[i] + w[i]);
  }
}

void solve_block_laplacian(std::span<const double> mass, std::span<const double> c, std::span<const double> transport,
                           std::span<double> rhs, int dim) {
  const std::size_t n = mass.size();
  auto rot = [&](std::size_t f) {
    Mat r(dim, dim);
    const double* src = transport.data() + f * dim * dim;
    for (int p = 0; p < dim; ++p)
      for (int q = 0; q < dim; ++q) r(p, q) = src[p * dim + q];
    return r;
  };
  auto y = [&](std::size_t i) { return Eigen::Map<Eigen::VectorXd>(rhs.data() + i * dim, dim); };
  const Mat eye = Mat::Identity(dim, dim);

  // pivots[i] excludes the coupling to the right neighbour.
  std::vector<Mat> pivots(n);
  pivots[0] = mass[0] * eye;
  for (std::size_t i = 1; i < n; ++i) {
    const double w = c[i - 1];
    const Mat r = rot(i - 1);
    const Eigen::LLT<Mat> full(pivots[i - 1] + w * eye);
    Mat gain = w * pivots[i - 1] * full.solve(eye);
    gain = 0.5 * (gain + gain.transpose()).eval();
    pivots[i] = mass[i] * eye + r * gain * r.transpose();
    const Vec carried = w * (r * full.solve(Vec(y(i - 1))));
    y(i) += carried;
  }
  y(n - 1) = Eigen::LLT<Mat>(pivots[n - 1]).solve(Vec(y(n - 1)));
  for (std::size_t i = n - 1; i-- > 0;) {
    const double w = c[i];
    const Vec pulled = y(i) + w * (rot(i).transpose() * Vec(y(i + 1)));
    y(i) = Eigen::LLT<Mat>(pivots[i] + w * eye).solve(pulled);
  }
}

}  // namespace mtvf::kernels
