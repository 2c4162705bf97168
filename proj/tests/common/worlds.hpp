#pragma once

// Small synthetic worlds shared by the unit and acceptance suites.

#include "marsupial/features.hpp"
#include "marsupial/mapstore.hpp"
#include "marsupial/rng.hpp"
#include "marsupial/sensor.hpp"
#include "marsupial/voxel_grid.hpp"

#include <vector>

namespace worlds {

using namespace marsupial;

inline void fill_box(VoxelGrid& w, const Vec3& lo, const Vec3& hi, VoxelState s) {
  const Index3 a = w.index_of(lo + Vec3::Constant(1e-9));
  const Index3 b = w.index_of(hi - Vec3::Constant(1e-9));
  for (int z = std::max(0, a.z); z <= std::min(w.dims().z - 1, b.z); ++z)
    for (int y = std::max(0, a.y); y <= std::min(w.dims().y - 1, b.y); ++y)
      for (int x = std::max(0, a.x); x <= std::min(w.dims().x - 1, b.x); ++x) w.set(Index3{x, y, z}, s);
}

/// Walled room (16 x 12 x 5 m at 0.2 m) with random pillars and wall-mounted boxes,
/// so scans carry edges and planes in every direction.
inline VoxelGrid structured_room(Rng& rng) {
  VoxelGrid w(Vec3::Zero(), 0.2, Index3{80, 60, 25}, VoxelState::Free);
  const Vec3 size(16.0, 12.0, 5.0);
  fill_box(w, Vec3(0, 0, 0), Vec3(size.x(), size.y(), 0.2), VoxelState::Occupied);
  fill_box(w, Vec3(0, 0, size.z() - 0.2), size, VoxelState::Occupied);
  fill_box(w, Vec3(0, 0, 0), Vec3(0.2, size.y(), size.z()), VoxelState::Occupied);
  fill_box(w, Vec3(size.x() - 0.2, 0, 0), size, VoxelState::Occupied);
  fill_box(w, Vec3(0, 0, 0), Vec3(size.x(), 0.2, size.z()), VoxelState::Occupied);
  fill_box(w, Vec3(0, size.y() - 0.2, 0), size, VoxelState::Occupied);
  const int pillars = 6 + static_cast<int>(rng.below(5));
  for (int i = 0; i < pillars; ++i) {
    const Vec3 c(rng.uniform(2.0, 14.0), rng.uniform(2.0, 10.0), 0.0);
    if ((c - Vec3(8.0, 6.0, 0.0)).norm() < 2.0) continue;  // keep the middle clear
    const Vec3 half(rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), 0.0);
    fill_box(w, c - half, c + half + Vec3(0, 0, rng.uniform(1.0, 5.0)), VoxelState::Occupied);
  }
  const int boxes = 4 + static_cast<int>(rng.below(4));
  for (int i = 0; i < boxes; ++i) {
    const Vec3 lo(rng.uniform(0.2, 14.0), rng.below(2) ? 0.2 : 10.8, rng.uniform(0.5, 3.5));
    fill_box(w, lo, lo + Vec3(rng.uniform(0.6, 2.0), 1.0, rng.uniform(0.4, 1.2)), VoxelState::Occupied);
  }
  return w;
}

inline SensorSpec scan_sensor() { return SensorSpec{360.0, 90.0, 20.0, 180, 32}; }

/// Feature map built from scans at the given (true) poses.
inline UnifiedMap feature_map(const VoxelGrid& world, const std::vector<Pose>& poses,
                              const FeatureParams& fp = {}) {
  UnifiedMap m(MapFrame{10.0, world.resolution(), world.origin()}, 1);
  for (const auto& p : poses) insert_points(m, extract_features(raycast_scan(world, p, scan_sensor()), p, fp));
  return m;
}

}  // namespace worlds
