#include "marsupial/sensor.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace marsupial {

void SensorSpec::validate() const {
  if (!(fov_h > 0.0 && fov_h <= 360.0)) throw std::invalid_argument("sensor fov_h must be in (0, 360]");
  if (!(fov_v > 0.0 && fov_v <= 180.0)) throw std::invalid_argument("sensor fov_v must be in (0, 180]");
  if (!(max_range > 0.0)) throw std::invalid_argument("sensor max_range must be > 0");
  if (rays_h < 1 || rays_v < 1) throw std::invalid_argument("sensor ray counts must be >= 1");
  if (std::abs(tilt) + 0.5 * fov_v > 90.0 + 1e-9)
    throw std::invalid_argument("sensor tilt pushes the vertical band past the pole");
}

std::string to_string(RobotKind k) { return k == RobotKind::Ground ? "ground" : "aerial"; }

RobotSpec RobotSpec::ground() {
  RobotSpec r;
  r.kind = RobotKind::Ground;
  r.sensor = SensorSpec{360.0, 30.0, 20.0, 180, 16};
  r.nominal_speed = 0.7;
  r.endurance = 3600.0;
  r.max_step_height = 0.3;
  r.collision_radius = 0.2;
  r.sensor_height = 0.6;
  r.terrain = SensorSpec{360.0, 70.0, 3.5, 120, 12, -52.5};
  return r;
}

RobotSpec RobotSpec::aerial() {
  RobotSpec r;
  r.kind = RobotKind::Aerial;
  r.sensor = SensorSpec{360.0, 90.0, 20.0, 180, 32};
  r.nominal_speed = 1.0;
  r.endurance = 720.0;
  r.max_step_height = 0.0;
  r.collision_radius = 0.2;
  r.sensor_height = 0.0;
  return r;
}

void RobotSpec::validate() const {
  sensor.validate();
  if (terrain) terrain->validate();
  if (!(nominal_speed > 0.0)) throw std::invalid_argument("robot nominal_speed must be > 0");
  if (!(endurance > 0.0)) throw std::invalid_argument("robot endurance must be > 0");
  if (!(collision_radius >= 0.0)) throw std::invalid_argument("robot collision_radius must be >= 0");
  if (kind == RobotKind::Ground) {
    if (!(max_step_height >= 0.0)) throw std::invalid_argument("ground max_step_height must be >= 0");
    if (!(sensor_height > 0.0)) throw std::invalid_argument("ground sensor_height must be > 0");
  }
}

std::size_t ScanPointCloud::hit_count() const {
  std::size_t n = 0;
  for (const auto& p : points) n += p.hit ? 1 : 0;
  return n;
}

void traverse_ray(const VoxelGrid& grid, const Vec3& origin, const Vec3& dir, double max_t,
                  const std::function<bool(const Index3&, double)>& visit) {
  Index3 cur = grid.index_of(origin);
  if (!grid.contains(cur)) return;
  const double res = grid.resolution();
  constexpr double inf = std::numeric_limits<double>::infinity();

  int step[3];
  double t_max[3];
  double t_delta[3];
  for (int a = 0; a < 3; ++a) {
    if (dir[a] > 0.0) {
      step[a] = 1;
      const double boundary = grid.origin()[a] + (cur[a] + 1) * res;
      t_max[a] = (boundary - origin[a]) / dir[a];
      t_delta[a] = res / dir[a];
    } else if (dir[a] < 0.0) {
      step[a] = -1;
      const double boundary = grid.origin()[a] + cur[a] * res;
      t_max[a] = (boundary - origin[a]) / dir[a];
      t_delta[a] = -res / dir[a];
    } else {
      step[a] = 0;
      t_max[a] = inf;
      t_delta[a] = inf;
    }
  }

  double t_entry = 0.0;
  while (true) {
    if (!visit(cur, t_entry)) return;
    int axis = 0;
    if (t_max[1] < t_max[axis]) axis = 1;
    if (t_max[2] < t_max[axis]) axis = 2;
    const double t_next = t_max[axis];
    if (!(t_next <= max_t)) return;
    cur[axis] += step[axis];
    if (!grid.contains(cur)) return;
    t_entry = t_next;
    t_max[axis] += t_delta[axis];
  }
}

std::vector<Vec3> ray_directions(const SensorSpec& sensor) {
  std::vector<Vec3> dirs;
  dirs.reserve(static_cast<std::size_t>(sensor.rays_h) * sensor.rays_v);
  const bool full_circle = sensor.fov_h >= 360.0;
  for (int j = 0; j < sensor.rays_v; ++j) {
    const double el = sensor.rays_v > 1
                          ? deg2rad(sensor.tilt - 0.5 * sensor.fov_v + j * sensor.fov_v / (sensor.rays_v - 1))
                          : deg2rad(sensor.tilt);
    for (int i = 0; i < sensor.rays_h; ++i) {
      double az;
      if (full_circle) {
        az = -std::numbers::pi + 2.0 * std::numbers::pi * i / sensor.rays_h;
      } else {
        az = sensor.rays_h > 1
                 ? deg2rad(-0.5 * sensor.fov_h + i * sensor.fov_h / (sensor.rays_h - 1))
                 : 0.0;
      }
      dirs.emplace_back(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    }
  }
  return dirs;
}

ScanPointCloud raycast_scan(const VoxelGrid& world, const Pose& pose, const SensorSpec& sensor) {
  if (!world.contains(pose.position)) throw std::out_of_range("raycast_scan: pose outside world");
  const auto dirs = ray_directions(sensor);
  const Eigen::Matrix3d rot = pose.rotation();

  ScanPointCloud scan;
  scan.rays_h = sensor.rays_h;
  scan.rays_v = sensor.rays_v;
  scan.max_range = sensor.max_range;
  scan.points.reserve(dirs.size());

  for (std::size_t r = 0; r < dirs.size(); ++r) {
    ScanPoint sp;
    sp.ring = static_cast<int>(r) / sensor.rays_h;
    sp.column = static_cast<int>(r) % sensor.rays_h;
    sp.direction = dirs[r];
    sp.range = sensor.max_range;
    sp.point = dirs[r] * sensor.max_range;

    const Vec3 world_dir = rot * dirs[r];
    traverse_ray(world, pose.position, world_dir, sensor.max_range,
                 [&](const Index3& idx, double t) {
                   if (world.at(idx) != VoxelState::Occupied) return true;
                   sp.hit = true;
                   sp.range = t;
                   sp.point = pose.inverse_transform(world.center(idx));
                   return false;
                 });
    scan.points.push_back(sp);
  }
  return scan;
}

std::size_t integrate_scan(VoxelGrid& map, const Pose& pose, const ScanPointCloud& scan) {
  const Eigen::Matrix3d rot = pose.rotation();
  std::size_t newly = 0;
  auto mark = [&](const Index3& idx, VoxelState s) {
    const VoxelState prev = map.at(idx);
    if (prev == VoxelState::Unknown) ++newly;
    // Occupied is sticky: a free-space pass never erases a surface.
    if (s == VoxelState::Free && prev == VoxelState::Occupied) return;
    map.set(idx, s);
  };

  for (const auto& sp : scan.points) {
    const Vec3 world_dir = rot * sp.direction;
    if (sp.hit) {
      // Cells entered at the same parameter as the hit (corner crossings) are free.
      const Index3 hit = map.index_of(pose.transform(sp.point));
      traverse_ray(map, pose.position, world_dir, sp.range, [&](const Index3& idx, double) {
        if (idx == hit) {
          mark(idx, VoxelState::Occupied);
          return false;
        }
        mark(idx, VoxelState::Free);
        return true;
      });
    } else {
      traverse_ray(map, pose.position, world_dir, scan.max_range,
                   [&](const Index3& idx, double) {
                     mark(idx, VoxelState::Free);
                     return true;
                   });
    }
  }
  return newly;
}

}  // namespace marsupial
