#include "marsupial/gain.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace marsupial {

namespace {
constexpr double kAngleSlack = 1e-9;
}

bool in_view_cone(const Index3& offset, double resolution, double yaw, const SensorSpec& sensor) {
  const double dx = offset.x * resolution;
  const double dy = offset.y * resolution;
  const double dz = offset.z * resolution;
  const double horiz = std::hypot(dx, dy);
  if (std::sqrt(horiz * horiz + dz * dz) > sensor.max_range + kAngleSlack) return false;
  const double elevation = std::atan2(dz, horiz);
  if (std::abs(elevation - deg2rad(sensor.tilt)) > deg2rad(0.5 * sensor.fov_v) + kAngleSlack) return false;
  if (sensor.fov_h >= 360.0 || horiz == 0.0) return true;
  const double bearing = wrap_angle(std::atan2(dy, dx) - yaw);
  return std::abs(bearing) <= deg2rad(0.5 * sensor.fov_h) + kAngleSlack;
}

bool line_of_sight(const VoxelGrid& map, const Index3& from, const Index3& to) {
  // In units of half voxels the segment runs from 0 to 2*d; the k-th boundary on
  // axis a is crossed at t = (2k+1) / (2|d_a|). Crossing times are compared by
  // cross-multiplication so ties (edges, corners) are detected exactly.
  const Index3 d = to - from;
  const long long n[3] = {std::llabs(d.x), std::llabs(d.y), std::llabs(d.z)};
  const int step[3] = {d.x > 0 ? 1 : -1, d.y > 0 ? 1 : -1, d.z > 0 ? 1 : -1};
  long long k[3] = {0, 0, 0};
  Index3 cur = from;
  if (cur == to) return true;
  if (map.at(cur) == VoxelState::Occupied) return false;
  while (true) {
    // Pick the axes with the smallest next crossing time (2k+1)/n.
    int best = -1;
    for (int a = 0; a < 3; ++a) {
      if (k[a] >= n[a]) continue;
      if (best < 0 || (2 * k[a] + 1) * n[best] < (2 * k[best] + 1) * n[a]) best = a;
    }
    if (best < 0) return true;
    const long long num = 2 * k[best] + 1, den = n[best];
    for (int a = 0; a < 3; ++a) {
      if (k[a] >= n[a]) continue;
      if ((2 * k[a] + 1) * den == num * n[a]) {
        ++k[a];
        cur[a] += step[a];
      }
    }
    if (cur == to) return true;
    if (map.at(cur) == VoxelState::Occupied) return false;
  }
}

VolumetricGain evaluate_gain(const VoxelGrid& map, const Pose& pose, const SensorSpec& sensor) {
  const Index3 origin = map.index_of(pose.position);
  if (!map.contains(origin)) throw std::out_of_range("evaluate_gain: pose outside map");
  const double res = map.resolution();
  const int span = static_cast<int>(std::floor(sensor.max_range / res + 1e-9));
  const Index3& dims = map.dims();
  const double reach = std::abs(sensor.tilt) + 0.5 * sensor.fov_v;
  const int z_span = reach >= 90.0 ? span : static_cast<int>(std::ceil(span * std::sin(deg2rad(reach)) + 1));

  std::int64_t count = 0;
  for (int z = std::max(0, origin.z - z_span); z <= std::min(dims.z - 1, origin.z + z_span); ++z)
    for (int y = std::max(0, origin.y - span); y <= std::min(dims.y - 1, origin.y + span); ++y)
      for (int x = std::max(0, origin.x - span); x <= std::min(dims.x - 1, origin.x + span); ++x) {
        const Index3 v{x, y, z};
        if (v == origin || map.at(v) != VoxelState::Unknown) continue;
        if (!in_view_cone(v - origin, res, pose.yaw, sensor)) continue;
        if (line_of_sight(map, origin, v)) ++count;
      }
  return VolumetricGain::from_count(count, res);
}

bool refresh_gain(const VoxelGrid& map, Vertex& v, const SensorSpec& sensor) {
  const Index3 c = map.index_of(v.pose.position);
  const int span = static_cast<int>(std::ceil(sensor.max_range / map.resolution())) + 1;
  const std::uint64_t stamp =
      map.max_stamp(c - Index3{span, span, span}, c + Index3{span, span, span});
  if (v.gain_stamp != 0 && stamp < v.gain_stamp) return false;
  v.gain = evaluate_gain(map, v.pose, sensor);
  v.gain_stamp = map.stamp() + 1;
  return true;
}

}  // namespace marsupial
