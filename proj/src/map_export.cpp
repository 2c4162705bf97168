#include "marsupial/map_export.hpp"

#include <fmt/format.h>

#include <sstream>
#include <stdexcept>

namespace marsupial {

std::string state_name(VoxelState s) {
  switch (s) {
    case VoxelState::Free: return "free";
    case VoxelState::Occupied: return "occupied";
    default: return "unknown";
  }
}

std::string export_voxels(const VoxelGrid& grid, bool include_unknown) {
  std::string out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Index3 idx = grid.unlinear(i);
    const VoxelState s = grid.at(idx);
    if (s == VoxelState::Unknown && !include_unknown) continue;
    const Vec3 c = grid.center(idx);
    out += fmt::format("{} {} {} {}\n", c.x(), c.y(), c.z(), state_name(s));
  }
  return out;
}

std::string export_surface(const VoxelGrid& grid) {
  static const Index3 kDirs[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  const double h = 0.5 * grid.resolution();
  std::string out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Index3 idx = grid.unlinear(i);
    if (grid.at(idx) != VoxelState::Occupied) continue;
    const Vec3 c = grid.center(idx);
    for (const auto& d : kDirs) {
      const Index3 n = idx + d;
      if (!grid.contains(n) || grid.at(n) != VoxelState::Free) continue;
      const int axis = d.x ? 0 : (d.y ? 1 : 2);
      const int u = (axis + 1) % 3, v = (axis + 2) % 3;
      Vec3 corner[4];
      for (int k = 0; k < 4; ++k) {
        corner[k] = c;
        corner[k][axis] += h * d[axis];
        corner[k][u] += (k == 1 || k == 2) ? h : -h;
        corner[k][v] += (k >= 2) ? h : -h;
      }
      for (const auto& tri : {std::array<int, 3>{0, 1, 2}, std::array<int, 3>{0, 2, 3}}) {
        out += fmt::format("{} {} {} {} {} {} {} {} {}\n", corner[tri[0]].x(), corner[tri[0]].y(),
                           corner[tri[0]].z(), corner[tri[1]].x(), corner[tri[1]].y(), corner[tri[1]].z(),
                           corner[tri[2]].x(), corner[tri[2]].y(), corner[tri[2]].z());
      }
    }
  }
  return out;
}

std::string save_grid(const VoxelGrid& grid) {
  const Vec3 o = grid.origin();
  const Index3 d = grid.dims();
  std::string out = fmt::format("grid {} {} {} {} {} {} {}\n", o.x(), o.y(), o.z(), grid.resolution(), d.x, d.y, d.z);
  std::string row(static_cast<std::size_t>(d.x), '?');
  for (int z = 0; z < d.z; ++z)
    for (int y = 0; y < d.y; ++y) {
      for (int x = 0; x < d.x; ++x) row[x] = to_char(grid.at(Index3{x, y, z}));
      out += row;
      out += '\n';
    }
  return out;
}

VoxelGrid load_grid(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  Vec3 o;
  double res;
  Index3 d;
  if (!(in >> tag >> o.x() >> o.y() >> o.z() >> res >> d.x >> d.y >> d.z) || tag != "grid")
    throw std::invalid_argument("grid snapshot: bad header");
  VoxelGrid grid(o, res, d, VoxelState::Unknown);
  std::string row;
  for (int z = 0; z < d.z; ++z)
    for (int y = 0; y < d.y; ++y) {
      if (!(in >> row) || static_cast<int>(row.size()) != d.x)
        throw std::invalid_argument("grid snapshot: truncated or ragged rows");
      for (int x = 0; x < d.x; ++x) {
        const char c = row[x];
        if (c == '.') grid.set(Index3{x, y, z}, VoxelState::Free);
        else if (c == '#') grid.set(Index3{x, y, z}, VoxelState::Occupied);
        else if (c != '?') throw std::invalid_argument("grid snapshot: bad cell character");
      }
    }
  return grid;
}

}  // namespace marsupial
