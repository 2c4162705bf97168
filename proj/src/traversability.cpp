#include "marsupial/traversability.hpp"

#include <algorithm>
#include <cmath>

namespace marsupial {
namespace {

bool blocking(VoxelState s, const RobotSpec& robot) {
  return s == VoxelState::Occupied || (robot.unknown_is_obstacle && s == VoxelState::Unknown);
}

// Squared distance from p to the closed box of voxel idx, optionally ignoring z.
double box_dist2(const VoxelGrid& map, const Index3& idx, const Vec3& p, bool planar) {
  const double res = map.resolution();
  double d2 = 0.0;
  for (int a = 0; a < (planar ? 2 : 3); ++a) {
    const double lo = map.origin()[a] + idx[a] * res;
    const double hi = lo + res;
    const double d = p[a] < lo ? lo - p[a] : (p[a] > hi ? p[a] - hi : 0.0);
    d2 += d * d;
  }
  return d2;
}

bool sphere_clear(const VoxelGrid& map, const Vec3& p, const RobotSpec& robot) {
  const Index3 c = map.index_of(p);
  if (blocking(map.at(c, VoxelState::Occupied), robot)) return false;
  const double r = robot.collision_radius;
  if (r <= 0.0) return true;
  const int span = static_cast<int>(std::ceil(r / map.resolution()));
  const double r2 = r * r;
  for (int dz = -span; dz <= span; ++dz)
    for (int dy = -span; dy <= span; ++dy)
      for (int dx = -span; dx <= span; ++dx) {
        const Index3 n = c + Index3{dx, dy, dz};
        if (box_dist2(map, n, p, false) >= r2) continue;
        if (blocking(map.at(n, VoxelState::Occupied), robot)) return false;
      }
  return true;
}

// Body column from the support layer up to the sample, widened by the footprint disc.
// Off-center obstacles no taller than a climbable step are stepped over.
bool column_clear(const VoxelGrid& map, const Vec3& p, int support_z, const RobotSpec& robot) {
  const Index3 c = map.index_of(p);
  const double r = robot.collision_radius;
  const int span = r > 0.0 ? static_cast<int>(std::ceil(r / map.resolution())) : 0;
  const double r2 = r * r;
  const int climb = static_cast<int>(std::floor(robot.max_step_height / map.resolution() + 1e-9));
  for (int z = support_z + 1; z <= c.z; ++z)
    for (int dy = -span; dy <= span; ++dy)
      for (int dx = -span; dx <= span; ++dx) {
        const Index3 n{c.x + dx, c.y + dy, z};
        if ((dx != 0 || dy != 0) && (z <= support_z + climb || box_dist2(map, n, p, true) >= r2)) continue;
        if (blocking(map.at(n, VoxelState::Occupied), robot)) return false;
      }
  return true;
}

std::optional<int> support_layer(const VoxelGrid& map, const Vec3& p, const RobotSpec& robot) {
  const Index3 c = map.index_of(p);
  if (!map.contains(c)) return std::nullopt;
  if (blocking(map.at(c), robot)) return std::nullopt;
  const int depth = static_cast<int>(std::ceil(2.0 * robot.sensor_height / map.resolution())) + 1;
  for (int z = c.z - 1; z >= std::max(0, c.z - depth); --z) {
    const VoxelState s = map.at(Index3{c.x, c.y, z});
    if (s == VoxelState::Occupied) return z;
    if (s == VoxelState::Unknown && robot.unknown_is_obstacle) return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

std::optional<double> support_height(const VoxelGrid& map, const Vec3& p, const RobotSpec& robot) {
  const auto z = support_layer(map, p, robot);
  if (!z) return std::nullopt;
  return map.origin().z() + (*z + 1) * map.resolution();
}

bool traversable(const VoxelGrid& map, const Pose& from, const Pose& to, const RobotSpec& robot) {
  const Vec3 a = from.position;
  const Vec3 b = to.position;
  const double len = (b - a).norm();
  const double res = map.resolution();

  if (robot.kind == RobotKind::Aerial) {
    const int n = std::max(1, static_cast<int>(std::ceil(len / (0.5 * res))));
    for (int s = 0; s <= n; ++s) {
      const Vec3 p = a + (b - a) * (static_cast<double>(s) / n);
      if (!sphere_clear(map, p, robot)) return false;
    }
    return true;
  }

  const int n = std::max(1, static_cast<int>(std::ceil(len / res)));
  std::optional<int> prev;
  for (int s = 0; s <= n; ++s) {
    const Vec3 p = a + (b - a) * (static_cast<double>(s) / n);
    const auto layer = support_layer(map, p, robot);
    if (!layer) return false;
    if (!column_clear(map, p, *layer, robot)) return false;
    if (prev && std::abs(*layer - *prev) * res > robot.max_step_height + 1e-9) return false;
    prev = layer;
  }
  return true;
}

bool can_occupy(const VoxelGrid& map, const Pose& p, const RobotSpec& robot) {
  return traversable(map, p, p, robot);
}

}  // namespace marsupial
