#pragma once

#include "marsupial/geometry.hpp"
#include "marsupial/voxel_grid.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace marsupial {

/// Spinning range sensor model. Angles in degrees.
struct SensorSpec {
  double fov_h{360.0};
  double fov_v{30.0};
  double max_range{20.0};
  int rays_h{180};
  int rays_v{16};
  double tilt{0.0};  // elevation of the vertical band's center

  void validate() const;
};

enum class RobotKind { Ground, Aerial };

std::string to_string(RobotKind k);

struct RobotSpec {
  RobotKind kind{RobotKind::Ground};
  SensorSpec sensor;
  double nominal_speed{0.7};
  double endurance{3600.0};
  double max_step_height{0.3};  // ground only
  double collision_radius{0.2};
  double sensor_height{0.6};  // ground only: sensor origin above the support surface
  bool unknown_is_obstacle{true};
  // Short-range downward sensor that maps the terrain around a ground robot's feet.
  std::optional<SensorSpec> terrain;

  static RobotSpec ground();
  static RobotSpec aerial();
  void validate() const;
};

struct ScanPoint {
  int ring{0};
  int column{0};
  Vec3 direction{Vec3::UnitX()};  // sensor frame, unit length
  double range{0.0};              // distance along the ray to the hit voxel entry
  bool hit{false};
  Vec3 point{Vec3::Zero()};  // sensor frame; hit voxel center, or direction*max_range on a miss
};

/// Ring-major: points[ring * rays_h + column].
struct ScanPointCloud {
  int rays_h{0};
  int rays_v{0};
  double max_range{0.0};
  std::vector<ScanPoint> points;

  const ScanPoint& at(int ring, int column) const { return points[ring * rays_h + column]; }
  std::size_t hit_count() const;
};

/// Visits voxels pierced by the ray origin + t*dir, t in [0, max_t], in order
/// of entry parameter. The visitor returns false to stop. Stops on leaving the grid.
void traverse_ray(const VoxelGrid& grid, const Vec3& origin, const Vec3& dir, double max_t,
                  const std::function<bool(const Index3&, double)>& visit);

/// Unit ray directions of the sensor in its own frame, ring-major.
std::vector<Vec3> ray_directions(const SensorSpec& sensor);

/// Simulated scan against a ground-truth world. Throws std::out_of_range when the
/// pose lies outside the world.
ScanPointCloud raycast_scan(const VoxelGrid& world, const Pose& pose, const SensorSpec& sensor);

/// Carves the scan into `map`. Returns the number of voxels that left Unknown.
std::size_t integrate_scan(VoxelGrid& map, const Pose& pose, const ScanPointCloud& scan);

}  // namespace marsupial
