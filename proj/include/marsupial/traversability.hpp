#pragma once

#include "marsupial/geometry.hpp"
#include "marsupial/sensor.hpp"
#include "marsupial/voxel_grid.hpp"

#include <optional>

namespace marsupial {

/// Height of the top face of the first Occupied voxel below `p`, searching a
/// fixed depth of 2*sensor_height + one voxel. Empty when the column is open or
/// crosses a blocking Unknown before any support.
std::optional<double> support_height(const VoxelGrid& map, const Vec3& p, const RobotSpec& robot);

/// True when the straight motion from `from` to `to` is feasible for `robot`.
///
/// Aerial: every sample at spacing res/2 keeps collision_radius clearance from
/// blocking voxels. Ground: samples at spacing res each need support under the
/// footprint, a clear body column up to the sample height (footprint obstacles up
/// to max_step_height are stepped over), and support-height changes between
/// consecutive samples no larger than max_step_height.
bool traversable(const VoxelGrid& map, const Pose& from, const Pose& to, const RobotSpec& robot);

/// Single-pose feasibility (traversable(p, p)).
bool can_occupy(const VoxelGrid& map, const Pose& p, const RobotSpec& robot);

}  // namespace marsupial
