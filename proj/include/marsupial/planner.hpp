#pragma once

#include "marsupial/gain.hpp"
#include "marsupial/geometry.hpp"
#include "marsupial/graph.hpp"
#include "marsupial/rng.hpp"
#include "marsupial/sensor.hpp"
#include "marsupial/voxel_grid.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace marsupial {

struct PlannerParams {
  Vec3 local_bbox{20.0, 20.0, 6.0};  // extent centered on the robot (m)
  int n_samples{300};
  double edge_radius{2.0};
  double gain_range{0.0};                   // overrides the sensor range for gain when > 0
  double completion_gain_threshold{0.8};    // m^3
  double path_gain_lambda{0.15};            // 1/m
  int attempts_per_sample{10};

  static PlannerParams ground_defaults();
  static PlannerParams aerial_defaults();
  void validate() const;

  /// Sensor model used for gain: same cone as `sensor`, range replaced by gain_range.
  SensorSpec gain_sensor(const SensorSpec& sensor) const;
  double global_spacing() const { return 0.5 * edge_radius; }
  double global_connect_radius() const { return 2.0 * edge_radius; }
};

struct PlanningError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Snaps a ground position onto the support surface of its column: the voxel
/// `floor(sensor_height / res)` layers above the first Occupied voxel below.
/// Empty when the column has no known support.
std::optional<Pose> project_to_support(const VoxelGrid& map, const Pose& p, const RobotSpec& robot);

/// Random graph in `local_bbox` around the root, clipped to `bounds`. Vertex 0 is
/// the root. Only the component containing the root is kept; gains are not filled.
/// Throws PlanningError when the root is in collision or no sample is valid.
ExplorationGraph build_local_graph(const VoxelGrid& map, const Pose& root, const RobotSpec& robot,
                                   const PlannerParams& params, Rng& rng,
                                   const std::optional<Aabb>& bounds = std::nullopt);

/// Fills every vertex gain with evaluate_gain.
void evaluate_graph_gains(ExplorationGraph& g, const VoxelGrid& map, const SensorSpec& gain_sensor);

struct LocalPath {
  std::vector<int> ids;
  std::vector<Pose> poses;
  double gain{0.0};  // discounted accumulated volume
};

/// Root-to-vertex path on the shortest-path tree maximizing
/// sum_u gain(u) * exp(-lambda * dist(root, u)). Ties go to the smallest end id.
/// `gain_of` overrides per-vertex gain (used for modulated aerial gains).
LocalPath best_local_path(const ExplorationGraph& g, const PlannerParams& params,
                          const std::vector<double>* gain_of = nullptr);

bool local_completion(const LocalPath& best, const PlannerParams& params);
bool local_completion(const ExplorationGraph& g, const PlannerParams& params);

/// Creates the global graph with its home vertex.
ExplorationGraph make_global_graph(GraphKind kind, const Pose& home);

/// Appends `chain` to the global graph, thinned to vertex spacing edge_radius/2:
/// a pose near an existing vertex reuses it when that vertex links to the previous
/// chain vertex; new vertices connect to nearby vertices passing `traversable`.
/// Consecutive chain poses that were traversable stay connected. Returns the
/// global id matched to each pose.
std::vector<int> append_chain(ExplorationGraph& global, const std::vector<Pose>& chain,
                              const VoxelGrid& map, const RobotSpec& robot,
                              const PlannerParams& params);

/// Adds the executed path plus local-graph paths to candidate frontier vertices
/// (gain above the completion threshold).
void update_global_graph(ExplorationGraph& global, const ExplorationGraph& local,
                         const std::vector<Pose>& executed_path, const VoxelGrid& map,
                         const RobotSpec& robot, const PlannerParams& params);

/// Refreshes global gains against the map and flags frontiers (gain >= threshold).
/// Returned ids are ordered by gain descending, then distance from `from`, then id.
std::vector<int> detect_frontiers(ExplorationGraph& global, const VoxelGrid& map,
                                  const SensorSpec& gain_sensor, const PlannerParams& params,
                                  const Vec3& from);

/// Shortest path from `current` to the home vertex.
GraphPath auto_home(const ExplorationGraph& global, int current);

}  // namespace marsupial
