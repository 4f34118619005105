#pragma once

#include "mtvf/manifold.hpp"

#include <cstddef>
#include <span>
#include <vector>

// Grid kernels of the regularized solver. Arrays are row-major, one row of
// `dim` ambient coordinates per node (n rows) or per interior face (n - 1
// rows). Each element-wise kernel has a serial reference version and an
// OpenMP version doing the same arithmetic per element, so results are
// bit-identical. Reductions and the tridiagonal sweeps stay serial.
namespace mtvf::kernels {

struct Grid {
  int n;
  int dim;
  double h;
};

/// Number of worker threads OpenMP kernels may use (MTVF_THREADS caps it).
int max_threads();

// Face quantities on the n - 1 interior faces:
//   dist[f]  geodesic distance between nodes f and f + 1
//   v[f]     sqrt(eps^2 + (dist / h)^2)
//   c[f]     1 / (h v), the diffusivity of the face
//   z[f]     (dist / h) / v times the unit tangent at the geodesic midpoint
//
// velocity:   out_i = (c_{i+1/2} log_{u_i} u_{i+1} + c_{i-1/2} log_{u_i} u_{i-1}) / m_i,
//             with no contribution from the boundary faces.
// linearize:  right-hand side of the implicit step at the iterate u,
//               b_i = (m_i / dt) log_{u_i} un_i + c_i s_i - c_{i-1} R_{i-1} s_{i-1},
//             with s_f = log_{u_f} u_{f+1}, and the transport matrices R_f taking
//             T_{u_f} to T_{u_{f+1}} (dim x dim, row-major). Using one log per
//             face makes the face forces antisymmetric.
namespace serial {
void face_geometry(const Manifold& m, const Grid& g, std::span<const double> u, double eps, std::span<double> dist,
                   std::span<double> v, std::span<double> c, std::span<double> z);
void velocity(const Manifold& m, const Grid& g, std::span<const double> u, std::span<const double> c,
              std::span<double> out);
void euler_update(const Manifold& m, const Grid& g, std::span<double> u, std::span<const double> vel, double dt);
void linearize(const Manifold& m, const Grid& g, std::span<const double> u, std::span<const double> un,
               std::span<const double> c, double dt, std::span<double> b, std::span<double> transport);
/// u_i <- exp_{u_i}(pi_{u_i} xi_i).
void exp_update(const Manifold& m, const Grid& g, std::span<double> u, std::span<const double> xi);
void project_rows(const Manifold& m, const Grid& g, std::span<double> u);
}  // namespace serial

namespace omp {
void face_geometry(const Manifold& m, const Grid& g, std::span<const double> u, double eps, std::span<double> dist,
                   std::span<double> v, std::span<double> c, std::span<double> z);
void velocity(const Manifold& m, const Grid& g, std::span<const double> u, std::span<const double> c,
              std::span<double> out);
void euler_update(const Manifold& m, const Grid& g, std::span<double> u, std::span<const double> vel, double dt);
void linearize(const Manifold& m, const Grid& g, std::span<const double> u, std::span<const double> un,
               std::span<const double> c, double dt, std::span<double> b, std::span<double> transport);
void exp_update(const Manifold& m, const Grid& g, std::span<double> u, std::span<const double> xi);
void project_rows(const Manifold& m, const Grid& g, std::span<double> u);
}  // namespace omp

/// Solves (M + L_w) x = rhs with M = diag(mass) > 0 and L_w the path
/// Laplacian with face weights w >= 0, for `dim` right-hand sides stored
/// row-major in rhs (overwritten). Gaussian elimination written in the
/// series-conductance form p_i = m_i + w p_{i-1} / (p_{i-1} + w): no
/// subtraction ever happens, so the mass term survives even when the
/// weights exceed it by many orders of magnitude.
void solve_mass_laplacian(std::span<const double> mass, std::span<const double> w, std::span<double> rhs, int dim);

/// Block version for the linearized implicit step:
///   (mass_i + c_{i-1/2} + c_{i+1/2}) x_i - c_{i+1/2} R_i^T x_{i+1} - c_{i-1/2} R_{i-1} x_{i-1} = rhs_i
/// with orthogonal R_f (row-major dim x dim) mapping node f to node f + 1.
/// Same subtraction-free elimination with matrix pivots.
void solve_block_laplacian(std::span<const double> mass, std::span<const double> c, std::span<const double> transport,
                           std::span<double> rhs, int dim);

/// Evaluates f(k) for k in [0, count) into out[k]. Serial or OpenMP static
/// schedule; f must only depend on k.
template <class T, class F>
void map_indexed(std::size_t count, F&& f, std::vector<T>& out, bool parallel) {
  out.resize(count);
  const auto n = static_cast<long long>(count);
  if (!parallel) {
    for (long long k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = f(static_cast<std::size_t>(k));
    return;
  }
#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (long long k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = f(static_cast<std::size_t>(k));
}

}  // namespace mtvf::kernels
