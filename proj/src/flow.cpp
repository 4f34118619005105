#include "mtvf/flow.hpp"

#include "mtvf/errors.hpp"

#include <algorithm>

namespace mtvf {

double ZField::max_norm() const {
  double worst = 0.0;
  for (const auto& z : face_values) worst = std::max(worst, z.norm());
  for (const auto& p : pieces) worst = std::max({worst, p.z_begin.norm(), p.z_end.norm()});
  return worst;
}

bool FlowTrajectory::is_piecewise_constant() const {
  return !snapshots.empty() && std::holds_alternative<PiecewiseConstantCurve>(snapshots.front().curve);
}

std::vector<double> FlowTrajectory::times() const {
  std::vector<double> t;
  t.reserve(snapshots.size());
  for (const auto& s : snapshots) t.push_back(s.t);
  return t;
}

double total_variation(const Curve& c) {
  return std::visit(
      [](const auto& curve) {
        using T = std::decay_t<decltype(curve)>;
        if constexpr (std::is_same_v<T, PiecewiseConstantCurve>) return tv_measure_pc(curve).total;
        else return tv_measure_sampled(curve).total;
      },
      c);
}

namespace {

// Unit tangents pointing from a_i towards its right and left neighbours.
struct PlateauPull {
  Vec next;
  Vec prev;
};

PlateauPull pulls(const Manifold& m, std::span<const Vec> a, std::size_t i) {
  PlateauPull out{Vec::Zero(m.ambient_dim()), Vec::Zero(m.ambient_dim())};
  if (i + 1 < a.size()) out.next = m.unit_tangent_pair(a[i], a[i + 1]).at_start;
  if (i > 0) out.prev = m.unit_tangent_pair(a[i], a[i - 1]).at_start;
  return out;
}

}  // namespace

std::vector<Vec> pc_velocity(const PiecewiseConstantCurve& u) {
  const auto& m = u.manifold();
  const auto a = u.values();
  std::vector<Vec> vel;
  vel.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto p = pulls(m, a, i);
    vel.push_back((p.next + p.prev) / u.plateau_length(i));
  }
  return vel;
}

ZField reconstruct_z_pc(const PiecewiseConstantCurve& u) {
  const auto& m = u.manifold();
  const auto a = u.values();
  ZField z;
  z.kind = ZField::Kind::PiecewiseLinear;
  z.pieces.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto p = pulls(m, a, i);
    Vec begin = i == 0 ? m.zero() : Vec(-p.prev);
    z.pieces.push_back({u.plateau_begin(i), u.plateau_end(i), begin, p.next});
  }
  return z;
}

}  // namespace mtvf
