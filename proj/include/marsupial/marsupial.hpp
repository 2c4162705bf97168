#pragma once

#include "marsupial/geometry.hpp"
#include "marsupial/graph.hpp"
#include "marsupial/mapstore.hpp"
#include "marsupial/planner.hpp"
#include "marsupial/rng.hpp"
#include "marsupial/sensor.hpp"
#include "marsupial/voxel_grid.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace marsupial {

enum class ExploreDirection { Up, Down };

std::string to_string(ExploreDirection d);

struct MarsupialConfig {
  double r_m{10.0};            // min distance of a deployment vertex from the robot (m)
  double r_g{8.0};             // exclusion radius around ground frontiers (m)
  double cluster_radius{4.0};  // single-linkage distance (m)
  double vertical_bonus{0.3};  // gain multiplier per metre of altitude change
  double covered_penalty{0.3};
  double aerial_gain_range{20.0};
  int samples_per_waypoint{2};
  ExploreDirection direction{ExploreDirection::Up};
  int max_deployments{1};
  // Deploy at a junction when a frontier diverges from the ground's goal by at least
  // branch_min_angle.
  bool deploy_on_branch{false};
  double branch_min_angle{90.0};  // deg
  double branch_radius{10.0};     // m; frontiers considered for the branch test
  double branch_min_gain{5.0};    // m^3

  void validate() const;
};

/// Ground-built sparse graph whose vertex gains use the aerial sensor model.
struct DeploymentGraph {
  ExplorationGraph graph{GraphKind::Deployment};
};

/// Adds sparse ground-reachable vertices along and around the executed path
/// (spacing >= cluster_radius/2), links them, and refreshes aerial gains.
void update_deployment_graph(DeploymentGraph& gm, const VoxelGrid& map, const SensorSpec& aerial_sensor,
                             const std::vector<Pose>& executed_ground_path, const RobotSpec& ground,
                             const MarsupialConfig& config, Rng& rng);

struct DeploymentRegion {
  Vec3 center{Vec3::Zero()};
  std::vector<int> members;
  double aggregate_gain{0.0};
  int nearest_global_vertex{-1};
};

/// Vertices with aerial gain >= gain_threshold, farther than r_m from the robot and
/// than r_g from every ground frontier, clustered by single linkage.
std::vector<DeploymentRegion> identify_deployment_regions(const DeploymentGraph& gm, const Pose& robot_pose,
                                                          const std::vector<Vec3>& ground_frontiers,
                                                          const MarsupialConfig& config,
                                                          double gain_threshold,
                                                          const ExplorationGraph& ground_global);

struct DeploymentChoice {
  DeploymentRegion region;
  GraphPath path;
};

/// Region whose nearest global vertex has the shortest path from `current`; ties
/// by lexicographic region center. Disconnected regions are skipped.
std::optional<DeploymentChoice> select_deployment(const ExplorationGraph& ground_global,
                                                  const std::vector<DeploymentRegion>& regions,
                                                  int current);

struct HandoffPackage {
  BlockBatch blocks;
  ExplorationGraph deployment_graph{GraphKind::Deployment};
  Pose ground_pose;
  Aabb exploration_bbox;
  Pose return_pose;
  ExploreDirection direction{ExploreDirection::Up};
  double voxel_resolution{0.25};
};

HandoffPackage make_handoff(const DeploymentGraph& gm, const UnifiedMap& map, const Pose& ground_pose,
                            const Aabb& global_bbox, ExploreDirection direction, double voxel_resolution);

/// Header (magic, poses, bbox, direction, resolution, map frame), then the graph
/// text export and the block wire stream, each u32-length-prefixed. Little endian.
std::vector<std::uint8_t> encode_handoff(const HandoffPackage& pkg);
HandoffPackage decode_handoff(std::span<const std::uint8_t> bytes);

/// raw.volume * (1 + vertical_bonus*|z - z_deploy|) * (covered_penalty when within
/// cluster_radius of a deployment-graph vertex). Zero outside the exploration bbox.
double modulate_aerial_gain(const VolumetricGain& raw, const Pose& vertex_pose,
                            const HandoffPackage& handoff, const MarsupialConfig& config);

}  // namespace marsupial
