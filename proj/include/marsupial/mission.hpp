#pragma once

#include "marsupial/config.hpp"
#include "marsupial/graph.hpp"
#include "marsupial/mapstore.hpp"
#include "marsupial/marsupial.hpp"
#include "marsupial/registration.hpp"
#include "marsupial/rng.hpp"
#include "marsupial/scenario.hpp"
#include "marsupial/voxel_grid.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace marsupial {

enum class AgentMode { Carried, Exploring, MovingToDeploy, Deploying, Colocalizing, Homing, Landed, Done, Fault };
std::string to_string(AgentMode m);

/// Which agents take part in a run.
enum class TeamConfig { GroundOnly, AerialOnly, Marsupial };
std::string to_string(TeamConfig c);
TeamConfig parse_team(const std::string& s);

struct AgentState {
  std::string name;
  RobotSpec robot;
  PlannerParams planner;
  bool active{false};
  AgentMode mode{AgentMode::Done};

  Pose pose;      // ground truth
  Pose estimate;  // odometry
  VoxelGrid map;
  UnifiedMap features;
  double elapsed{0.0};
  double distance_traveled{0.0};

  ExplorationGraph global{GraphKind::GlobalGround};
  Pose return_pose;
  std::optional<Aabb> bounds;

  std::vector<Pose> path;  // remaining waypoints
  Pose last_waypoint;
  int last_vertex{-1};  // global vertex matched to last_waypoint
  std::vector<double> home_dist;  // per global vertex, refreshed when the graph grows
  std::size_t home_dist_size{0};

  std::set<int> visited_targets;
  std::size_t new_voxels_since_plan{0};
  int stalled_plans{0};
  bool planned_once{false};
  bool homing_for_endurance{false};
  bool waiting_logged{false};
  std::vector<Pose> trail;  // waypoints not yet folded into the deployment graph
};

struct Message {
  int id{0};
  int ack_of{-1};  // >= 0 for acknowledgements
  std::string from;
  std::string to;
  std::string kind;
  std::vector<std::uint8_t> payload;
  double deliver_at{0.0};
  std::uint64_t order{0};
};

struct Outgoing {
  Message msg;
  double next_send{0.0};
  int attempts{0};
  bool acked{false};
};

struct Channel {
  double latency{0.2};
  double drop{0.0};
  std::deque<Message> in_flight;  // sorted by (deliver_at, order)
  std::vector<Outgoing> reliable;
  std::uint64_t sent{0};
  std::uint64_t dropped{0};
};

struct MissionEvent {
  double time{0.0};
  std::string agent;
  std::string name;
  std::vector<std::pair<std::string, std::string>> fields;

  /// `t=<s> agent=<name> event=<name> k=v ...` with fields in insertion order.
  std::string format() const;
};

struct MissionState {
  std::int64_t steps{0};
  double time{0.0};
  double dt{0.1};
  AgentState ground;
  AgentState aerial;
  Channel channel;
  MissionPolicy policy{MissionPolicy::Home};
  std::vector<MissionEvent> event_log;
  std::uint64_t seed{0};
};

struct Metrics {
  TeamConfig team{TeamConfig::Marsupial};
  std::uint64_t seed{0};
  std::string outcome;  // complete, fault, cap_exceeded
  int exit_code{0};
  double completion_time{0.0};
  double coverage{0.0};
  double roi_coverage{-1.0};         // union map, when the scenario defines a roi
  double aerial_roi_coverage{-1.0};  // aerial map alone
  double roi_coverage_at_deploy{-1.0};
  double time_to_target{-1.0};
  double ground_distance{0.0};
  double aerial_distance{0.0};
  double ground_elapsed{0.0};
  double aerial_elapsed{0.0};
  std::string ground_mode;
  std::string aerial_mode;
  double ground_home_error{-1.0};
  double aerial_home_error{-1.0};
  int deployments{0};
  std::optional<Pose> deployment_pose;
  std::optional<Vec3> deployment_region_center;
  std::string coloc_status{"none"};
  int coloc_attempts{0};
  double coloc_residual{-1.0};
  double coloc_error_trans{-1.0};
  double coloc_error_yaw_deg{-1.0};
  bool reunion{false};
  double map_consistency{-1.0};  // Jaccard of the two point sets after the reunion merge
  std::vector<std::pair<double, double>> coverage_series;  // (t, coverage) at each change

  std::string to_text() const;
};

struct MissionResult {
  Metrics metrics;
  std::vector<std::string> log;
  MissionState final_state;
  VoxelGrid merged_map;  // union of both agents' voxel maps
};

/// Two-agent lockstep executive.
class Mission {
 public:
  Mission(const ScenarioSpec& scenario, std::uint64_t seed, TeamConfig team = TeamConfig::Marsupial);

  /// Advances the world by one dt.
  void step();
  bool finished() const;
  bool cap_exceeded() const;
  double cap() const { return cap_; }
  const MissionState& state() const { return state_; }
  const Metrics& metrics() const { return metrics_; }

  /// Steps until both agents are done (or the cap), then finalizes metrics.
  MissionResult run();

  double coverage() const { return coverage_; }
  /// Union of both agents' voxel maps.
  VoxelGrid merged_map() const;
  const DeploymentGraph& deployment_graph() const { return gm_; }

 private:
  void log(const std::string& agent, const std::string& name,
           std::vector<std::pair<std::string, std::string>> fields = {});
  void set_mode(AgentState& a, AgentMode m, const std::string& why = "");

  void step_agent(AgentState& a);
  void advance(AgentState& a);
  void reach_waypoint(AgentState& a);
  void sense(AgentState& a);
  /// Short all-round scan of the robot's immediate surroundings (and, for ground
  /// robots, its support).
  void sense_body(AgentState& a);
  void plan(AgentState& a);
  void on_local_completion(AgentState& a);
  bool try_deployment(AgentState& ground);
  /// Deploys in place when a strong frontier lies off the ground's next goal.
  bool try_branch_deployment(AgentState& ground, const Vec3& goal);
  void arrive_at_deployment(AgentState& ground);
  void begin_homing(AgentState& a, const std::string& reason);
  void finish_homing(AgentState& a);
  double home_distance(AgentState& a);
  bool endurance_low(AgentState& a);
  void colocalize_step(AgentState& aerial);
  void launch_aerial(const HandoffPackage& pkg);
  void apply_policy();
  void check_reunion();
  std::vector<double> modulated_gains(const AgentState& a, const ExplorationGraph& g) const;
  bool frontier_allowed(const AgentState& a, const Vertex& v) const;

  void send(const std::string& from, const std::string& to, const std::string& kind,
            std::vector<std::uint8_t> payload, bool reliable);
  void transmit(Message m);
  void pump_channel();
  void deliver(const Message& m);

  void update_coverage();
  void finalize();

  ScenarioSpec scenario_;
  TeamConfig team_;
  MissionState state_;
  Metrics metrics_;
  double cap_{0.0};

  Rng rng_ground_;
  Rng rng_aerial_;
  Rng rng_channel_;
  Rng rng_odometry_;
  Rng rng_deploy_;

  DeploymentGraph gm_;
  std::optional<HandoffPackage> handoff_;
  std::optional<Aabb> branch_aerial_bounds_;
  std::optional<Aabb> branch_ground_bounds_;
  bool handoff_received_{false};
  int deployments_{0};
  int next_message_id_{1};
  std::uint64_t message_order_{0};
  std::set<int> seen_messages_;
  int coloc_attempts_{0};
  Pose coloc_init_;
  bool reunited_{false};
  bool ground_waiting_for_aerial_{false};

  std::vector<std::size_t> truth_free_;
  std::vector<std::size_t> roi_free_;
  double coverage_{0.0};
  bool coverage_dirty_{true};
  std::string last_coverage_text_;
};

/// Runs ground_only, aerial_only and marsupial with the same seed.
std::vector<Metrics> compare_runs(const ScenarioSpec& scenario, std::uint64_t seed);
std::string format_comparison(const std::vector<Metrics>& rows);

}  // namespace marsupial
