#pragma once

#include "marsupial/geometry.hpp"

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace marsupial {

enum class VoxelState : std::uint8_t { Unknown = 0, Free = 1, Occupied = 2 };

char to_char(VoxelState s);

struct Index3 {
  int x{0}, y{0}, z{0};

  Index3() = default;
  constexpr Index3(int x_, int y_, int z_) : x(x_), y(y_), z(z_) {}

  constexpr int operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  constexpr int& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }
  constexpr Index3 operator+(const Index3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Index3 operator-(const Index3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr bool operator==(const Index3&) const = default;
  constexpr auto operator<=>(const Index3&) const = default;
};

/// Regular 3D lattice of ternary occupancy cells.
///
/// Voxel (i,j,k) covers [origin + i*res, origin + (i+1)*res) per axis. Writes
/// bump a per-chunk revision stamp so that cached queries (view gain) can tell
/// whether anything inside their footprint changed.
class VoxelGrid {
 public:
  static constexpr int kChunk = 8;

  VoxelGrid() = default;
  VoxelGrid(const Vec3& origin, double resolution, const Index3& dims,
            VoxelState fill = VoxelState::Unknown);

  const Vec3& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  const Index3& dims() const { return dims_; }
  std::size_t size() const { return cells_.size(); }
  Aabb bounds() const;

  bool contains(const Index3& idx) const {
    return idx.x >= 0 && idx.y >= 0 && idx.z >= 0 && idx.x < dims_.x && idx.y < dims_.y &&
           idx.z < dims_.z;
  }
  bool contains(const Vec3& p) const { return contains(index_of(p)); }

  Index3 index_of(const Vec3& p) const;
  Vec3 center(const Index3& idx) const {
    return origin_ + resolution_ * Vec3(idx.x + 0.5, idx.y + 0.5, idx.z + 0.5);
  }
  std::size_t linear(const Index3& idx) const {
    return (static_cast<std::size_t>(idx.z) * dims_.y + idx.y) * dims_.x + idx.x;
  }
  Index3 unlinear(std::size_t i) const;

  /// Out-of-range reads return `outside`.
  VoxelState at(const Index3& idx, VoxelState outside = VoxelState::Unknown) const {
    return contains(idx) ? static_cast<VoxelState>(cells_[linear(idx)]) : outside;
  }
  VoxelState at(const Vec3& p, VoxelState outside = VoxelState::Unknown) const {
    return at(index_of(p), outside);
  }
  void set(const Index3& idx, VoxelState s);

  std::size_t count(VoxelState s) const;
  const std::vector<std::uint8_t>& raw() const { return cells_; }

  /// Latest write stamp among chunks touching the voxel box [lo, hi].
  std::uint64_t max_stamp(const Index3& lo, const Index3& hi) const;
  std::uint64_t stamp() const { return clock_; }

  bool same_layout(const VoxelGrid& o) const {
    return origin_ == o.origin_ && resolution_ == o.resolution_ && dims_ == o.dims_;
  }

 private:
  std::size_t chunk_of(const Index3& idx) const {
    return (static_cast<std::size_t>(idx.z / kChunk) * chunk_dims_.y + idx.y / kChunk) *
               chunk_dims_.x +
           idx.x / kChunk;
  }

  Vec3 origin_{Vec3::Zero()};
  double resolution_{1.0};
  Index3 dims_{};
  Index3 chunk_dims_{};
  std::vector<std::uint8_t> cells_;
  std::vector<std::uint64_t> chunk_stamp_;
  std::uint64_t clock_{0};
};

}  // namespace marsupial
