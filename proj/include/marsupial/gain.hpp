#pragma once

#include "marsupial/geometry.hpp"
#include "marsupial/graph.hpp"
#include "marsupial/sensor.hpp"
#include "marsupial/voxel_grid.hpp"

namespace marsupial {

/// Whether the voxel offset (in voxel units) from the viewpoint lies in the
/// sensor cone: range, horizontal sector around yaw, and vertical band.
bool in_view_cone(const Index3& offset, double resolution, double yaw, const SensorSpec& sensor);

/// Exact line-of-sight between two voxel centers: true when the segment's
/// interior crossings avoid every Occupied voxel (the target voxel excluded).
/// Segments grazing an edge or corner touch no voxel there.
bool line_of_sight(const VoxelGrid& map, const Index3& from, const Index3& to);

/// Unknown voxels inside the sensor cone of `pose` with clear line of sight from
/// the center of the voxel containing the pose. Throws std::out_of_range when the
/// pose is outside the map.
VolumetricGain evaluate_gain(const VoxelGrid& map, const Pose& pose, const SensorSpec& sensor);

/// Re-evaluates `v.gain` only if some map chunk within sensor range changed since
/// the stored stamp. Returns true when a recomputation happened.
bool refresh_gain(const VoxelGrid& map, Vertex& v, const SensorSpec& sensor);

}  // namespace marsupial
