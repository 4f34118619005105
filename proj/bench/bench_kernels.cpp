// Serial versus OpenMP kernels on a sphere curve, plus one whole regularized run.
#include "mtvf/flow.hpp"
#include "mtvf/kernels.hpp"
#include "mtvf/lab.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace mtvf;
namespace k = mtvf::kernels;

namespace {

Vec axis(int j) {
  Vec e = Vec::Zero(3);
  e[j] = 1.0;
  return e;
}

struct Fixture {
  Manifold m = Manifold::sphere(3);
  k::Grid g;
  std::vector<double> u, dist, v, c, z, vel, b, R;

  explicit Fixture(int n) : g{n, 3, 1.0 / (n - 1)} {
    Rng rng(7);
    Vec p = lab::random_point(m, rng);
    for (int i = 0; i < n; ++i) {
      p = m.exp(p, 0.02 * lab::random_unit_tangent(m, p, rng));
      u.insert(u.end(), p.data(), p.data() + 3);
    }
    dist.resize(n - 1);
    v.resize(n - 1);
    c.resize(n - 1);
    z.resize((n - 1) * 3);
    vel.resize(n * 3);
    b.resize(n * 3);
    R.resize((n - 1) * 9);
    k::serial::face_geometry(m, g, u, 1e-3, dist, v, c, z);
  }
};

template <bool Parallel>
void BM_FaceGeometry(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    if constexpr (Parallel)
      k::omp::face_geometry(f.m, f.g, f.u, 1e-3, f.dist, f.v, f.c, f.z);
    else
      k::serial::face_geometry(f.m, f.g, f.u, 1e-3, f.dist, f.v, f.c, f.z);
    benchmark::DoNotOptimize(f.z.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_Velocity(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    if constexpr (Parallel)
      k::omp::velocity(f.m, f.g, f.u, f.c, f.vel);
    else
      k::serial::velocity(f.m, f.g, f.u, f.c, f.vel);
    benchmark::DoNotOptimize(f.vel.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_Linearize(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    if constexpr (Parallel)
      k::omp::linearize(f.m, f.g, f.u, f.u, f.c, 1e-4, f.b, f.R);
    else
      k::serial::linearize(f.m, f.g, f.u, f.u, f.c, 1e-4, f.b, f.R);
    benchmark::DoNotOptimize(f.b.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_RegularizedRun(benchmark::State& state) {
  const auto s = Manifold::sphere(3);
  const PiecewiseConstantCurve u0(s, {0.4}, {axis(0), axis(1)});
  FlowConfig cfg;
  cfg.manifold = s;
  cfg.epsilon = 1e-3;
  cfg.grid_n = static_cast<int>(state.range(0));
  cfg.t_max = 0.05;
  cfg.snapshot_every = 1000;
  cfg.parallel = Parallel;
  const auto start = mollify(u0, cfg.grid_n, 0.02);
  for (auto _ : state) benchmark::DoNotOptimize(run_regularized(start, cfg));
}

}  // namespace

BENCHMARK(BM_FaceGeometry<false>)->Name("face_geometry/serial")->RangeMultiplier(8)->Range(512, 1 << 15);
BENCHMARK(BM_FaceGeometry<true>)->Name("face_geometry/omp")->RangeMultiplier(8)->Range(512, 1 << 15);
BENCHMARK(BM_Velocity<false>)->Name("velocity/serial")->RangeMultiplier(8)->Range(512, 1 << 15);
BENCHMARK(BM_Velocity<true>)->Name("velocity/omp")->RangeMultiplier(8)->Range(512, 1 << 15);
BENCHMARK(BM_Linearize<false>)->Name("linearize/serial")->RangeMultiplier(8)->Range(512, 1 << 15);
BENCHMARK(BM_Linearize<true>)->Name("linearize/omp")->RangeMultiplier(8)->Range(512, 1 << 15);
BENCHMARK(BM_RegularizedRun<false>)->Name("regularized_run/serial")->Arg(401)->Arg(1601)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RegularizedRun<true>)->Name("regularized_run/omp")->Arg(401)->Arg(1601)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
