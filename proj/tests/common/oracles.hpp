#pragma once

// Brute-force reference implementations used by the unit and acceptance suites.
// They share no code with the library beyond the data types.

#include "marsupial/graph.hpp"
#include "marsupial/mapstore.hpp"
#include "marsupial/rng.hpp"
#include "marsupial/sensor.hpp"
#include "marsupial/voxel_grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

using marsupial::Index3;
using marsupial::Vec3;
using marsupial::VoxelGrid;
using marsupial::VoxelState;

// p/q with q > 0.
struct Frac {
  long long p, q;
};
inline bool less(const Frac& a, const Frac& b) { return a.p * b.q < b.p * a.q; }
inline Frac make_frac(long long p, long long q) { return q < 0 ? Frac{-p, -q} : Frac{p, q}; }

// Does the open segment between the centers of `a` and `b` cross the interior of
// voxel `v` over a positive length? Exact: half-voxel integer units, rational slabs.
inline bool segment_pierces(const Index3& a, const Index3& b, const Index3& v) {
  Frac lo{0, 1}, hi{1, 1};
  for (int axis = 0; axis < 3; ++axis) {
    const long long d = 2LL * (b[axis] - a[axis]);
    const long long l = 2LL * (v[axis] - a[axis]) - 1;
    const long long h = 2LL * (v[axis] - a[axis]) + 1;
    if (d == 0) {
      if (!(l < 0 && 0 < h)) return false;
      continue;
    }
    Frac t0 = make_frac(l, d), t1 = make_frac(h, d);
    if (less(t1, t0)) std::swap(t0, t1);
    if (less(lo, t0)) lo = t0;
    if (less(t1, hi)) hi = t1;
  }
  return less(lo, hi);
}

inline bool visible(const VoxelGrid& map, const Index3& from, const Index3& to) {
  const Index3 lo{std::min(from.x, to.x), std::min(from.y, to.y), std::min(from.z, to.z)};
  const Index3 hi{std::max(from.x, to.x), std::max(from.y, to.y), std::max(from.z, to.z)};
  for (int z = lo.z; z <= hi.z; ++z)
    for (int y = lo.y; y <= hi.y; ++y)
      for (int x = lo.x; x <= hi.x; ++x) {
        const Index3 v{x, y, z};
        if (v == to) continue;
        if (map.at(v) != VoxelState::Occupied) continue;
        if (v == from || segment_pierces(from, to, v)) return false;
      }
  return true;
}

// Cone test phrased with direction vectors and acos instead of atan2.
inline bool in_cone(const Index3& off, double res, double yaw, const marsupial::SensorSpec& s) {
  const Vec3 d = res * Vec3(off.x, off.y, off.z);
  if (d.norm() > s.max_range + 1e-9) return false;
  const double horiz = std::sqrt(d.x() * d.x() + d.y() * d.y());
  const double tilt = s.tilt * std::numbers::pi / 180.0;
  const Vec3 axis(std::cos(tilt), 0.0, std::sin(tilt));
  // Elevation of d against the band center, measured in the vertical plane of d.
  const Vec3 in_plane(horiz, 0.0, d.z());
  const double c = std::clamp(in_plane.dot(axis) / std::max(in_plane.norm(), 1e-300), -1.0, 1.0);
  const double off_band = in_plane.norm() == 0.0 ? 0.0 : std::acos(c);
  if (off_band > 0.5 * s.fov_v * std::numbers::pi / 180.0 + 1e-9) return false;
  if (s.fov_h >= 360.0 || horiz == 0.0) return true;
  const Vec3 head(std::cos(yaw), std::sin(yaw), 0.0);
  const double ch = std::clamp((d.x() * head.x() + d.y() * head.y()) / horiz, -1.0, 1.0);
  return std::acos(ch) <= 0.5 * s.fov_h * std::numbers::pi / 180.0 + 1e-9;
}

// Every Unknown voxel of the whole grid, tested one by one.
inline std::int64_t gain_count(const VoxelGrid& map, const marsupial::Pose& pose,
                               const marsupial::SensorSpec& s) {
  const Index3 o = map.index_of(pose.position);
  std::int64_t n = 0;
  for (int z = 0; z < map.dims().z; ++z)
    for (int y = 0; y < map.dims().y; ++y)
      for (int x = 0; x < map.dims().x; ++x) {
        const Index3 v{x, y, z};
        if (v == o || map.at(v) != VoxelState::Unknown) continue;
        if (!in_cone(v - o, map.resolution(), pose.yaw, s)) continue;
        if (visible(map, o, v)) ++n;
      }
  return n;
}

// Voxels whose closed box meets the ray over a positive length inside [0, max_t],
// ordered by entry parameter.
inline std::vector<Index3> ray_cells(const VoxelGrid& g, const Vec3& o, const Vec3& dir, double max_t) {
  std::vector<std::pair<double, Index3>> hits;
  for (int z = 0; z < g.dims().z; ++z)
    for (int y = 0; y < g.dims().y; ++y)
      for (int x = 0; x < g.dims().x; ++x) {
        double t0 = 0.0, t1 = max_t;
        bool ok = true;
        for (int a = 0; a < 3 && ok; ++a) {
          const double lo = g.origin()[a] + (a == 0 ? x : a == 1 ? y : z) * g.resolution();
          const double hi = lo + g.resolution();
          if (dir[a] == 0.0) {
            ok = o[a] >= lo && o[a] < hi;
          } else {
            double u = (lo - o[a]) / dir[a], w = (hi - o[a]) / dir[a];
            if (u > w) std::swap(u, w);
            t0 = std::max(t0, u);
            t1 = std::min(t1, w);
          }
        }
        if (ok && t1 - t0 > 1e-9) hits.push_back({t0, Index3{x, y, z}});
      }
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Index3> out;
  for (const auto& h : hits) out.push_back(h.second);
  return out;
}

// Shortest simple-path length between s and t by exhaustive DFS; +inf when none.
inline double enumerate_shortest(const marsupial::ExplorationGraph& g, int s, int t,
                                 std::vector<int>* best_path = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> path{s};
  std::vector<char> on(g.size(), 0);
  on[s] = 1;
  std::function<void(int, double)> dfs = [&](int u, double len) {
    if (u == t) {
      const bool better = len < best || (len == best && best_path && path < *best_path);
      if (better) {
        best = len;
        if (best_path) *best_path = path;
      }
      return;
    }
    for (const auto& e : g.neighbors(u)) {
      if (on[e.to]) continue;
      on[e.to] = 1;
      path.push_back(e.to);
      dfs(e.to, len + e.weight);
      path.pop_back();
      on[e.to] = 0;
    }
  };
  dfs(s, 0.0);
  return best;
}

// Random connected-or-not graph with 2..max_v (<= 32) vertices at distinct points of
// a small integer lattice, so equal-length alternatives are common.
inline marsupial::ExplorationGraph random_graph(marsupial::Rng& rng, int max_v, double edge_p) {
  marsupial::ExplorationGraph g(marsupial::GraphKind::GlobalGround);
  const int n = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_v - 1)));
  std::set<int> used;
  while (static_cast<int>(used.size()) < n) {
    const int cell = static_cast<int>(rng.below(32));
    if (!used.insert(cell).second) continue;
    g.add_vertex(marsupial::Pose(cell % 4, (cell / 4) % 4, cell / 16, 0.0));
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < edge_p) g.add_edge(i, j);
  return g;
}

// Random feature map content over a few blocks.
inline std::vector<marsupial::LabeledPoint> random_points(marsupial::Rng& rng, int n, double extent) {
  std::vector<marsupial::LabeledPoint> pts;
  for (int i = 0; i < n; ++i) {
    marsupial::LabeledPoint p;
    p.position = Vec3(rng.uniform(-extent, extent), rng.uniform(-extent, extent), rng.uniform(-extent, extent));
    p.label = rng.below(2) ? marsupial::FeatureLabel::Edge : marsupial::FeatureLabel::Planar;
    pts.push_back(p);
  }
  return pts;
}

}  // namespace oracle
