#pragma once

#include "marsupial/voxel_grid.hpp"

#include <string>

namespace marsupial {

std::string state_name(VoxelState s);

/// One known voxel per line: `x y z state` with the voxel center in metres and
/// state `free` or `occupied`. Unknown voxels are listed only on request.
std::string export_voxels(const VoxelGrid& grid, bool include_unknown = false);

/// Triangle soup of occupied faces that border a free voxel: one triangle per
/// line as nine coordinates `x1 y1 z1 x2 y2 z2 x3 y3 z3`, two per face.
std::string export_surface(const VoxelGrid& grid);

/// Lossless text snapshot: a `grid ox oy oz res nx ny nz` header, then one line of
/// `?`/`.`/`#` per (y, z) row in linear order.
std::string save_grid(const VoxelGrid& grid);
VoxelGrid load_grid(const std::string& text);

}  // namespace marsupial
