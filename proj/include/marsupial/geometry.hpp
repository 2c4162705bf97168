#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace marsupial {

using Vec3 = Eigen::Vector3d;

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * std::numbers::pi);
  if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
  return w;
}

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

/// 4-DoF pose: position plus heading. Roll and pitch are always zero.
struct Pose {
  Vec3 position{Vec3::Zero()};
  double yaw{0.0};

  Pose() = default;
  Pose(const Vec3& p, double y) : position(p), yaw(wrap_angle(y)) {}
  Pose(double x, double y, double z, double heading) : position(x, y, z), yaw(wrap_angle(heading)) {}

  Eigen::Matrix3d rotation() const {
    return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
  }

  /// Maps a point from this pose's local frame into the parent frame.
  Vec3 transform(const Vec3& local) const { return rotation() * local + position; }
  Vec3 inverse_transform(const Vec3& world) const {
    return rotation().transpose() * (world - position);
  }

  Pose compose(const Pose& rhs) const { return Pose(transform(rhs.position), yaw + rhs.yaw); }
  Pose inverse() const {
    const Vec3 p = -(rotation().transpose() * position);
    return Pose(p, -yaw);
  }

  bool operator==(const Pose& o) const { return position == o.position && yaw == o.yaw; }
};

/// Axis-aligned box, closed on both ends.
struct Aabb {
  Vec3 min{Vec3::Zero()};
  Vec3 max{Vec3::Zero()};

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  bool valid() const { return (max.array() >= min.array()).all(); }
  Vec3 extent() const { return max - min; }

  Aabb intersect(const Aabb& o) const {
    return Aabb{min.cwiseMax(o.min), max.cwiseMin(o.max)};
  }
  static Aabb centered(const Vec3& c, const Vec3& size) {
    return Aabb{c - 0.5 * size, c + 0.5 * size};
  }
  bool operator==(const Aabb& o) const { return min == o.min && max == o.max; }
};

/// Strict lexicographic order on 3-vectors (x, then y, then z).
inline bool lex_less(const Vec3& a, const Vec3& b) {
  return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
}

}  // namespace marsupial
