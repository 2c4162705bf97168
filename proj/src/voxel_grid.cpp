#include "marsupial/voxel_grid.hpp"

#include <algorithm>
#include <cmath>

namespace marsupial {

char to_char(VoxelState s) {
  switch (s) {
    case VoxelState::Free: return '.';
    case VoxelState::Occupied: return '#';
    default: return '?';
  }
}

VoxelGrid::VoxelGrid(const Vec3& origin, double resolution, const Index3& dims, VoxelState fill)
    : origin_(origin), resolution_(resolution), dims_(dims) {
  if (!(resolution > 0.0)) throw std::invalid_argument("voxel resolution must be > 0");
  if (dims.x <= 0 || dims.y <= 0 || dims.z <= 0)
    throw std::invalid_argument("voxel dims must be strictly positive");
  cells_.assign(static_cast<std::size_t>(dims.x) * dims.y * dims.z,
                static_cast<std::uint8_t>(fill));
  chunk_dims_ = {(dims.x + kChunk - 1) / kChunk, (dims.y + kChunk - 1) / kChunk,
                 (dims.z + kChunk - 1) / kChunk};
  chunk_stamp_.assign(static_cast<std::size_t>(chunk_dims_.x) * chunk_dims_.y * chunk_dims_.z, 0);
}

Aabb VoxelGrid::bounds() const {
  return Aabb{origin_, origin_ + resolution_ * Vec3(dims_.x, dims_.y, dims_.z)};
}

Index3 VoxelGrid::index_of(const Vec3& p) const {
  const Vec3 q = (p - origin_) / resolution_;
  return {static_cast<int>(std::floor(q.x())), static_cast<int>(std::floor(q.y())),
          static_cast<int>(std::floor(q.z()))};
}

Index3 VoxelGrid::unlinear(std::size_t i) const {
  const auto nx = static_cast<std::size_t>(dims_.x);
  const auto ny = static_cast<std::size_t>(dims_.y);
  return {static_cast<int>(i % nx), static_cast<int>((i / nx) % ny),
          static_cast<int>(i / (nx * ny))};
}

void VoxelGrid::set(const Index3& idx, VoxelState s) {
  if (!contains(idx)) return;
  auto& c = cells_[linear(idx)];
  const auto v = static_cast<std::uint8_t>(s);
  if (c == v) return;
  c = v;
  chunk_stamp_[chunk_of(idx)] = ++clock_;
}

std::size_t VoxelGrid::count(VoxelState s) const {
  return static_cast<std::size_t>(
      std::count(cells_.begin(), cells_.end(), static_cast<std::uint8_t>(s)));
}

std::uint64_t VoxelGrid::max_stamp(const Index3& lo, const Index3& hi) const {
  const Index3 a{std::max(lo.x, 0) / kChunk, std::max(lo.y, 0) / kChunk,
                 std::max(lo.z, 0) / kChunk};
  const Index3 b{std::min(hi.x, dims_.x - 1) / kChunk, std::min(hi.y, dims_.y - 1) / kChunk,
                 std::min(hi.z, dims_.z - 1) / kChunk};
  std::uint64_t m = 0;
  for (int z = a.z; z <= b.z; ++z)
    for (int y = a.y; y <= b.y; ++y)
      for (int x = a.x; x <= b.x; ++x)
        m = std::max(m, chunk_stamp_[(static_cast<std::size_t>(z) * chunk_dims_.y + y) *
                                         chunk_dims_.x +
                                     x]);
  return m;
}

}  // namespace marsupial
