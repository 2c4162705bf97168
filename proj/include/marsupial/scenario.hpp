#pragma once

#include "marsupial/config.hpp"
#include "marsupial/geometry.hpp"
#include "marsupial/sensor.hpp"
#include "marsupial/voxel_grid.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace marsupial {

struct ScenarioSpec {
  std::string name;
  VoxelGrid world;
  Pose start_pose;
  RobotSpec ground{RobotSpec::ground()};
  RobotSpec aerial{RobotSpec::aerial()};
  Aabb global_bbox;
  MissionConfig config;
};

struct ParseError : std::runtime_error {
  ParseError(int line, const std::string& field, const std::string& msg);
  int line;
  std::string field;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses a scenario document:
///
///   [world]    resolution, size, origin, fill, shell, box, ramp, start, bbox, and
///              optional `layer` blocks of ASCII rows (`#` occupied, `.` free;
///              first row is y = 0, first layer is z = 0)
///   [robots]   ground.* / aerial.* robot and sensor settings
///   [config]   planner.*, marsupial.*, registration.*, mission.* keys
///
/// `#` starts a comment outside ASCII layer rows. Throws ParseError or
/// ValidationError.
ScenarioSpec load_scenario(const std::string& text);
ScenarioSpec load_scenario_file(const std::string& path);

/// Applies one dotted override, e.g. `planner.ground.n_samples=120` or
/// `robots.aerial.endurance=10`. Throws std::invalid_argument on unknown keys
/// or malformed values.
void apply_setting(ScenarioSpec& spec, const std::string& key, const std::string& value);

/// Checks every invariant (start pose free and ground-feasible, specs valid).
void validate_scenario(const ScenarioSpec& spec);

}  // namespace marsupial
