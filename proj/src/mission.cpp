#include "marsupial/mission.hpp"

#include "marsupial/features.hpp"
#include "marsupial/gain.hpp"
#include "marsupial/planner.hpp"
#include "marsupial/sensor.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace marsupial {

std::string to_string(AgentMode m) {
  switch (m) {
    case AgentMode::Carried: return "Carried";
    case AgentMode::Exploring: return "Exploring";
    case AgentMode::MovingToDeploy: return "MovingToDeploy";
    case AgentMode::Deploying: return "Deploying";
    case AgentMode::Colocalizing: return "Colocalizing";
    case AgentMode::Homing: return "Homing";
    case AgentMode::Landed: return "Landed";
    case AgentMode::Done: return "Done";
    case AgentMode::Fault: return "Fault";
  }
  return "Fault";
}

std::string to_string(TeamConfig c) {
  switch (c) {
    case TeamConfig::GroundOnly: return "ground_only";
    case TeamConfig::AerialOnly: return "aerial_only";
    case TeamConfig::Marsupial: return "marsupial";
  }
  return "marsupial";
}

TeamConfig parse_team(const std::string& s) {
  if (s == "ground_only") return TeamConfig::GroundOnly;
  if (s == "aerial_only") return TeamConfig::AerialOnly;
  if (s == "marsupial") return TeamConfig::Marsupial;
  throw std::invalid_argument("team must be ground_only, aerial_only or marsupial, got '" + s + "'");
}

namespace {

std::string num(double v) { return fmt::format("{:.3f}", v); }
std::string vec(const Vec3& v) { return fmt::format("{:.3f},{:.3f},{:.3f}", v.x(), v.y(), v.z()); }

VoxelState cell(const VoxelGrid& g, std::size_t i) { return static_cast<VoxelState>(g.raw()[i]); }

bool terminal(AgentMode m) {
  return m == AgentMode::Landed || m == AgentMode::Done || m == AgentMode::Fault;
}

bool airborne(AgentMode m) {
  return m == AgentMode::Exploring || m == AgentMode::Colocalizing || m == AgentMode::Homing;
}

}  // namespace

std::string MissionEvent::format() const {
  std::string out = fmt::format("t={:.3f} agent={} event={}", time, agent, name);
  for (const auto& [k, v] : fields) {
    out += ' ';
    out += k;
    out += '=';
    out += v;
  }
  return out;
}

std::string Metrics::to_text() const {
  std::string out;
  auto kv = [&](const std::string& k, const std::string& v) { out += k + "=" + v + "\n"; };
  kv("team", to_string(team));
  kv("seed", std::to_string(seed));
  kv("outcome", outcome);
  kv("exit_code", std::to_string(exit_code));
  kv("completion_time", num(completion_time));
  kv("coverage", fmt::format("{:.4f}", coverage));
  kv("roi_coverage", fmt::format("{:.4f}", roi_coverage));
  kv("aerial_roi_coverage", fmt::format("{:.4f}", aerial_roi_coverage));
  kv("roi_coverage_at_deploy", fmt::format("{:.4f}", roi_coverage_at_deploy));
  kv("time_to_target", num(time_to_target));
  kv("ground_distance", num(ground_distance));
  kv("aerial_distance", num(aerial_distance));
  kv("ground_elapsed", num(ground_elapsed));
  kv("aerial_elapsed", num(aerial_elapsed));
  kv("ground_mode", ground_mode);
  kv("aerial_mode", aerial_mode);
  kv("ground_home_error", num(ground_home_error));
  kv("aerial_home_error", num(aerial_home_error));
  kv("deployments", std::to_string(deployments));
  kv("deployment_pose", deployment_pose ? vec(deployment_pose->position) : "none");
  kv("deployment_region_center", deployment_region_center ? vec(*deployment_region_center) : "none");
  kv("coloc_status", coloc_status);
  kv("coloc_attempts", std::to_string(coloc_attempts));
  kv("coloc_residual", fmt::format("{:.5f}", coloc_residual));
  kv("coloc_error_trans", fmt::format("{:.5f}", coloc_error_trans));
  kv("coloc_error_yaw_deg", fmt::format("{:.5f}", coloc_error_yaw_deg));
  kv("reunion", reunion ? "1" : "0");
  kv("map_consistency", fmt::format("{:.4f}", map_consistency));
  return out;
}

Mission::Mission(const ScenarioSpec& scenario, std::uint64_t seed, TeamConfig team)
    : scenario_(scenario), team_(team) {
  Rng master(seed);
  rng_ground_ = master.fork(1);
  rng_aerial_ = master.fork(2);
  rng_channel_ = master.fork(3);
  rng_odometry_ = master.fork(4);
  rng_deploy_ = master.fork(5);

  const auto& cfg = scenario_.config;
  const auto& world = scenario_.world;
  state_.dt = cfg.mission.dt;
  state_.policy = cfg.mission.policy;
  state_.seed = seed;
  state_.channel.latency = cfg.mission.channel_latency;
  state_.channel.drop = cfg.mission.channel_drop;
  metrics_.team = team;
  metrics_.seed = seed;

  const MapFrame frame{cfg.mission.block_edge, world.resolution(), world.origin()};
  auto init = [&](AgentState& a, const std::string& name, const RobotSpec& robot, const PlannerParams& planner,
                  std::uint8_t writer) {
    a.name = name;
    a.robot = robot;
    a.planner = planner;
    a.map = VoxelGrid(world.origin(), world.resolution(), world.dims(), VoxelState::Unknown);
    a.features = UnifiedMap(frame, writer);
  };
  init(state_.ground, "ground", scenario_.ground, cfg.ground_planner, 0);
  init(state_.aerial, "aerial", scenario_.aerial, cfg.aerial_planner, 1);

  const Pose start = scenario_.start_pose;
  const Pose aerial_start = start.compose(cfg.mission.extrinsics);
  AgentState& g = state_.ground;
  AgentState& a = state_.aerial;

  g.active = team != TeamConfig::AerialOnly;
  g.pose = g.estimate = g.last_waypoint = g.return_pose = start;
  g.global = make_global_graph(GraphKind::GlobalGround, start);
  g.last_vertex = 0;
  g.bounds = scenario_.global_bbox;
  g.mode = g.active ? AgentMode::Exploring : AgentMode::Done;
  if (team == TeamConfig::Marsupial) g.trail.push_back(start);

  a.active = team != TeamConfig::GroundOnly;
  a.pose = a.estimate = a.last_waypoint = a.return_pose = aerial_start;
  a.global = make_global_graph(GraphKind::GlobalAerial, aerial_start);
  a.last_vertex = 0;
  if (!a.active) {
    a.mode = AgentMode::Done;
  } else if (team == TeamConfig::Marsupial) {
    a.mode = AgentMode::Carried;
  } else {
    a.mode = AgentMode::Exploring;
    a.bounds = scenario_.global_bbox;
  }

  cap_ = cfg.mission.cap_factor * ((g.active ? g.robot.endurance : 0.0) + (a.active ? a.robot.endurance : 0.0));

  for (std::size_t i = 0; i < world.size(); ++i) {
    if (cell(world, i) != VoxelState::Free) continue;
    truth_free_.push_back(i);
    if (cfg.mission.roi && cfg.mission.roi->contains(world.center(world.unlinear(i)))) roi_free_.push_back(i);
  }

  log("mission", "start",
      {{"team", to_string(team)}, {"policy", to_string(state_.policy)}, {"seed", std::to_string(seed)},
       {"free_voxels", std::to_string(truth_free_.size())}, {"cap", num(cap_)}});
  if (g.active) {
    log("ground", "mode", {{"from", "-"}, {"to", to_string(g.mode)}});
    sense(g);
  }
  if (a.active) {
    log("aerial", "mode", {{"from", "-"}, {"to", to_string(a.mode)}});
    if (a.mode == AgentMode::Exploring) sense(a);
  }
  update_coverage();
}

void Mission::log(const std::string& agent, const std::string& name,
                  std::vector<std::pair<std::string, std::string>> fields) {
  state_.event_log.push_back(MissionEvent{state_.time, agent, name, std::move(fields)});
}

void Mission::set_mode(AgentState& a, AgentMode m, const std::string& why) {
  if (a.mode == m) return;
  std::vector<std::pair<std::string, std::string>> f{{"from", to_string(a.mode)}, {"to", to_string(m)}};
  if (!why.empty()) f.emplace_back("reason", why);
  log(a.name, "mode", std::move(f));
  a.mode = m;
}

bool Mission::finished() const {
  const auto& g = state_.ground;
  const auto& a = state_.aerial;
  const bool g_done = !g.active || terminal(g.mode);
  const bool a_done = !a.active || terminal(a.mode) || (a.mode == AgentMode::Carried && g_done);
  return g_done && a_done && state_.channel.in_flight.empty();
}

bool Mission::cap_exceeded() const { return state_.time >= cap_ - 1e-9; }

void Mission::step() {
  if (!finished()) {
    pump_channel();
    step_agent(state_.ground);
    auto sync = [&] {
      if (state_.aerial.mode != AgentMode::Carried) return;
      const Pose& ext = scenario_.config.mission.extrinsics;
      state_.aerial.pose = state_.ground.pose.compose(ext);
      state_.aerial.estimate = state_.ground.estimate.compose(ext);
    };
    sync();
    step_agent(state_.aerial);
    sync();
    check_reunion();
    update_coverage();
  }
  ++state_.steps;
  state_.time = static_cast<double>(state_.steps) * state_.dt;
}

void Mission::step_agent(AgentState& a) {
  if (!a.active) return;
  if (a.mode == AgentMode::Carried || terminal(a.mode)) return;

  if ((a.mode == AgentMode::Exploring || a.mode == AgentMode::MovingToDeploy || a.mode == AgentMode::Deploying ||
       a.mode == AgentMode::Colocalizing) &&
      endurance_low(a)) {
    if (a.mode == AgentMode::Deploying) ground_waiting_for_aerial_ = false;
    begin_homing(a, "endurance");
  }

  if (a.mode == AgentMode::Deploying && ground_waiting_for_aerial_ && terminal(state_.aerial.mode)) {
    ground_waiting_for_aerial_ = false;
    check_reunion();
    a.path.clear();
    set_mode(a, AgentMode::Exploring, "aerial_finished");
  }

  if (a.mode == AgentMode::Exploring && a.path.empty()) plan(a);

  if (a.mode == AgentMode::Exploring || a.mode == AgentMode::MovingToDeploy || a.mode == AgentMode::Homing) {
    bool hold = false;
    if (a.mode == AgentMode::Homing && &a == &state_.ground && handoff_ && !reunited_ &&
        state_.policy == MissionPolicy::Continue && !a.homing_for_endurance && airborne(state_.aerial.mode) &&
        (a.pose.position - state_.aerial.return_pose.position).norm() <= scenario_.config.mission.comm_range) {
      if (endurance_low(a)) {
        a.homing_for_endurance = true;
        log(a.name, "stop_waiting", {{"reason", "endurance"}});
      } else {
        hold = true;
        if (!a.waiting_logged) log(a.name, "wait_for_aerial", {{"pose", vec(a.pose.position)}});
        a.waiting_logged = true;
      }
    }
    if (!hold && !a.path.empty()) advance(a);
    if (a.path.empty()) {
      if (a.mode == AgentMode::MovingToDeploy) arrive_at_deployment(a);
      else if (a.mode == AgentMode::Homing && !hold) finish_homing(a);
    }
  } else if (a.mode == AgentMode::Colocalizing) {
    colocalize_step(a);
  }

  if (a.mode != AgentMode::Fault) a.elapsed += state_.dt;
}

void Mission::advance(AgentState& a) {
  double budget = a.robot.nominal_speed * state_.dt;
  const AgentMode mode = a.mode;
  while (budget > 1e-12 && !a.path.empty() && a.mode == mode) {
    const Vec3 target = a.path.front().position;
    const Vec3 delta = target - a.pose.position;
    const double d = delta.norm();
    Vec3 moved;
    bool reached = false;
    if (d <= budget) {
      moved = delta;
      budget -= d;
      reached = true;
    } else {
      moved = delta * (budget / d);
      budget = 0.0;
    }
    a.pose.position += moved;
    if (reached) a.pose.position = target;
    if (std::hypot(moved.x(), moved.y()) > 1e-9) a.pose.yaw = std::atan2(moved.y(), moved.x());
    a.distance_traveled += moved.norm();
    a.estimate.position += moved;
    a.estimate.yaw = a.pose.yaw;
    const double sigma = scenario_.config.mission.odometry_sigma;
    if (sigma > 0.0 && moved.norm() > 0.0) {
      const double nx = rng_odometry_.gaussian(), ny = rng_odometry_.gaussian();
      a.estimate.position += sigma * Vec3(nx, ny, 0.0);
    }
    if (reached) {
      a.path.erase(a.path.begin());
      reach_waypoint(a);
    }
  }
}

void Mission::sense_body(AgentState& a) {
  const double res = scenario_.world.resolution();
  const SensorSpec body{360.0, 180.0, a.robot.collision_radius + 2.0 * res, 72, 37};
  const double depth = a.robot.kind == RobotKind::Ground ? 2.0 * a.robot.sensor_height + res : 0.0;
  SensorSpec spec = body;
  spec.max_range = std::max(body.max_range, depth);
  const auto scan = raycast_scan(scenario_.world, a.pose, spec);
  a.new_voxels_since_plan += integrate_scan(a.map, a.pose, scan);
}

void Mission::sense(AgentState& a) {
  sense_body(a);
  if (a.robot.terrain) {
    const auto terrain = raycast_scan(scenario_.world, a.pose, *a.robot.terrain);
    a.new_voxels_since_plan += integrate_scan(a.map, a.pose, terrain);
  }
  const auto scan = raycast_scan(scenario_.world, a.pose, a.robot.sensor);
  a.new_voxels_since_plan += integrate_scan(a.map, a.pose, scan);
  const auto feats = extract_features(scan, a.estimate, scenario_.config.registration.features);
  insert_points(a.features, feats);
  coverage_dirty_ = true;
}

void Mission::reach_waypoint(AgentState& a) {
  sense(a);
  const auto ids = append_chain(a.global, {a.last_waypoint, a.pose}, a.map, a.robot, a.planner);
  a.last_vertex = ids.back();
  a.last_waypoint = a.pose;
  if (&a == &state_.ground && team_ == TeamConfig::Marsupial) a.trail.push_back(a.pose);
}

double Mission::home_distance(AgentState& a) {
  const int home = a.global.home();
  const std::size_t key = a.global.size() * 1000003u + a.global.edge_count();
  if (a.home_dist_size != key || a.home_dist.size() != a.global.size()) {
    a.home_dist = dijkstra(a.global, home).dist;
    a.home_dist_size = key;
  }
  const Vec3 wp = a.last_waypoint.position;
  const Vec3 v = a.global.vertex(a.last_vertex).pose.position;
  return (a.pose.position - wp).norm() + (wp - v).norm() + a.home_dist[a.last_vertex];
}

bool Mission::endurance_low(AgentState& a) {
  const double remaining = a.robot.endurance - a.elapsed;
  const double d = home_distance(a);
  if (!std::isfinite(d)) return false;
  const double need = scenario_.config.mission.homing_safety * d / a.robot.nominal_speed;
  return remaining <= need + 2.0 * state_.dt;
}

void Mission::plan(AgentState& a) {
  const auto& mcfg = scenario_.config.marsupial;
  const bool is_ground = &a == &state_.ground;
  // Frontiers next to a completed position are not worth another visit.
  for (std::size_t i = 0; i < a.global.size(); ++i) {
    const Vertex& v = a.global.vertex(static_cast<int>(i));
    if ((v.pose.position - a.pose.position).norm() <= a.planner.edge_radius) a.visited_targets.insert(v.id);
  }
  const double res = a.map.resolution();
  const double stall_voxels = a.planner.completion_gain_threshold / (res * res * res);
  if (a.planned_once) {
    if (static_cast<double>(a.new_voxels_since_plan) < stall_voxels) ++a.stalled_plans;
    else a.stalled_plans = 0;
  }
  a.planned_once = true;
  a.new_voxels_since_plan = 0;

  Rng& rng = is_ground ? rng_ground_ : rng_aerial_;
  std::optional<ExplorationGraph> local;
  try {
    local = build_local_graph(a.map, a.pose, a.robot, a.planner, rng, a.bounds);
  } catch (const PlanningError& e) {
    std::string why = e.what();
    std::replace(why.begin(), why.end(), ' ', '_');
    log(a.name, "plan_failed", {{"reason", why}});
  }
  bool complete = !local.has_value();
  if (local) {
    evaluate_graph_gains(*local, a.map, a.planner.gain_sensor(a.robot.sensor));
    const auto gains = modulated_gains(a, *local);
    const LocalPath best = best_local_path(*local, a.planner, &gains);
    update_global_graph(a.global, *local, {}, a.map, a.robot, a.planner);
    complete = local_completion(best, a.planner) || best.ids.size() < 2 || a.stalled_plans >= 3;
    if (!complete && is_ground && team_ == TeamConfig::Marsupial && state_.aerial.mode == AgentMode::Carried &&
        deployments_ < mcfg.max_deployments && mcfg.deploy_on_branch &&
        try_branch_deployment(a, best.poses.back().position))
      return;
    if (!complete) {
      a.path.assign(best.poses.begin() + 1, best.poses.end());
      double length = 0.0;
      for (std::size_t i = 1; i < best.poses.size(); ++i)
        length += (best.poses[i].position - best.poses[i - 1].position).norm();
      log(a.name, "plan",
          {{"vertices", std::to_string(local->size())}, {"gain", num(best.gain)}, {"length", num(length)},
           {"goal", vec(best.poses.back().position)}});
      return;
    }
  }
  log(a.name, "local_completion", {{"stalled", std::to_string(a.stalled_plans)}});
  a.stalled_plans = 0;
  a.planned_once = false;
  on_local_completion(a);
}

std::vector<double> Mission::modulated_gains(const AgentState& a, const ExplorationGraph& g) const {
  std::vector<double> out(g.size());
  const bool modulate = &a == &state_.aerial && handoff_.has_value();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vertex& v = g.vertex(static_cast<int>(i));
    out[i] = modulate ? modulate_aerial_gain(v.gain, v.pose, *handoff_, scenario_.config.marsupial) : v.gain.volume;
  }
  return out;
}

bool Mission::frontier_allowed(const AgentState& a, const Vertex& v) const {
  if (a.bounds && !a.bounds->contains(v.pose.position)) return false;
  if (&a == &state_.aerial && handoff_) {
    const double g = modulate_aerial_gain(v.gain, v.pose, *handoff_, scenario_.config.marsupial);
    if (g < a.planner.completion_gain_threshold) return false;
  }
  return true;
}

void Mission::on_local_completion(AgentState& a) {
  const bool is_ground = &a == &state_.ground;
  // Frontiers next to a completed position are not worth another visit.
  for (std::size_t i = 0; i < a.global.size(); ++i) {
    const Vertex& v = a.global.vertex(static_cast<int>(i));
    if ((v.pose.position - a.pose.position).norm() <= a.planner.edge_radius) a.visited_targets.insert(v.id);
  }
  if (is_ground && team_ == TeamConfig::Marsupial && state_.aerial.mode == AgentMode::Carried &&
      deployments_ < scenario_.config.marsupial.max_deployments && try_deployment(a))
    return;

  const auto frontiers =
      detect_frontiers(a.global, a.map, a.planner.gain_sensor(a.robot.sensor), a.planner, a.pose.position);
  const auto tree = dijkstra(a.global, a.last_vertex);
  int best = -1;
  for (const int f : frontiers) {
    if (a.visited_targets.count(f) || !tree.reachable(f)) continue;
    if (!frontier_allowed(a, a.global.vertex(f))) continue;
    if (best < 0 || tree.dist[f] < tree.dist[best] || (tree.dist[f] == tree.dist[best] && f < best)) best = f;
  }
  if (best >= 0) {
    a.visited_targets.insert(best);
    a.path.clear();
    for (const int id : tree.path_to(best)) a.path.push_back(a.global.vertex(id).pose);
    log(a.name, "reposition",
        {{"target", std::to_string(best)}, {"distance", num(tree.dist[best])},
         {"frontiers", std::to_string(frontiers.size())}});
    return;
  }
  begin_homing(a, "complete");
}

bool Mission::try_deployment(AgentState& ground) {
  const auto& mcfg = scenario_.config.marsupial;
  update_deployment_graph(gm_, ground.map, state_.aerial.robot.sensor, ground.trail, ground.robot, mcfg,
                          rng_deploy_);
  ground.trail.assign(1, ground.pose);
  const auto frontiers = detect_frontiers(ground.global, ground.map, ground.planner.gain_sensor(ground.robot.sensor),
                                          ground.planner, ground.pose.position);
  std::vector<Vec3> fpos;
  for (const int f : frontiers)
    if (!ground.visited_targets.count(f) && frontier_allowed(ground, ground.global.vertex(f)))
      fpos.push_back(ground.global.vertex(f).pose.position);
  const auto regions = identify_deployment_regions(gm_, ground.pose, fpos, mcfg,
                                                   ground.planner.completion_gain_threshold, ground.global);
  const auto choice = select_deployment(ground.global, regions, ground.last_vertex);
  log(ground.name, "deployment_check",
      {{"graph_vertices", std::to_string(gm_.graph.size())}, {"regions", std::to_string(regions.size())},
       {"selected", choice ? "1" : "0"}});
  if (!choice) return false;
  metrics_.deployment_region_center = choice->region.center;
  log(ground.name, "deploy_region",
      {{"center", vec(choice->region.center)}, {"members", std::to_string(choice->region.members.size())},
       {"gain", num(choice->region.aggregate_gain)}, {"path_length", num(choice->path.length)}});
  ground.path = choice->path.poses;
  set_mode(ground, AgentMode::MovingToDeploy);
  return true;
}

bool Mission::try_branch_deployment(AgentState& ground, const Vec3& goal) {
  const auto& mcfg = scenario_.config.marsupial;
  const auto frontiers = detect_frontiers(ground.global, ground.map, ground.planner.gain_sensor(ground.robot.sensor),
                                          ground.planner, ground.pose.position);
  home_distance(ground);
  const double here = ground.home_dist[ground.last_vertex];
  const Vec3 dg = goal - ground.pose.position;
  const double goal_bearing = std::atan2(dg.y(), dg.x());
  const double min_angle = deg2rad(mcfg.branch_min_angle);
  for (const int f : frontiers) {
    const Vertex& v = ground.global.vertex(f);
    if (v.gain.volume < mcfg.branch_min_gain) break;
    if (ground.visited_targets.count(f)) continue;
    const Vec3 da = v.pose.position - ground.pose.position;
    const double h = std::hypot(da.x(), da.y());
    if (h < ground.planner.edge_radius || h > mcfg.branch_radius) continue;
    // Frontiers back toward home are not a new branch.
    if (!(ground.home_dist[f] >= here - ground.planner.edge_radius)) continue;
    const double angle = std::abs(wrap_angle(std::atan2(da.y(), da.x()) - goal_bearing));
    if (angle + 1e-12 < min_angle) continue;

    const Vec3 fa = v.pose.position;
    const Vec3 sep = fa - goal;
    const int axis = std::abs(sep.x()) >= std::abs(sep.y()) ? 0 : 1;
    const double s = ground.pose.position[axis];
    const double margin = ground.planner.edge_radius;
    Aabb aerial_box = scenario_.global_bbox, ground_box = scenario_.global_bbox;
    if (fa[axis] > s) {
      aerial_box.min[axis] = s - margin;
      ground_box.max[axis] = s + margin;
    } else {
      aerial_box.max[axis] = s + margin;
      ground_box.min[axis] = s - margin;
    }
    branch_aerial_bounds_ = aerial_box;
    branch_ground_bounds_ = ground_box;
    metrics_.deployment_region_center = ground.pose.position;
    log(ground.name, "branch_detected",
        {{"angle_deg", num(rad2deg(angle))}, {"ground_goal", vec(goal)}, {"aerial_frontier", vec(fa)},
         {"aerial_gain", num(v.gain.volume)}});
    ground.path.clear();
    set_mode(ground, AgentMode::MovingToDeploy, "branch");
    arrive_at_deployment(ground);
    return true;
  }
  return false;
}

void Mission::arrive_at_deployment(AgentState& ground) {
  set_mode(ground, AgentMode::Deploying);
  const auto& cfg = scenario_.config;
  HandoffPackage pkg = make_handoff(gm_, ground.features, ground.estimate, scenario_.global_bbox,
                                    cfg.marsupial.direction, scenario_.world.resolution());
  if (branch_aerial_bounds_) pkg.exploration_bbox = pkg.exploration_bbox.intersect(*branch_aerial_bounds_);
  ++deployments_;
  metrics_.deployments = deployments_;
  metrics_.deployment_pose = ground.pose;
  metrics_.roi_coverage_at_deploy = roi_free_.empty() ? -1.0 : [&] {
    std::size_t known = 0;
    for (const auto i : roi_free_)
      if (cell(state_.ground.map, i) != VoxelState::Unknown || cell(state_.aerial.map, i) != VoxelState::Unknown)
        ++known;
    return static_cast<double>(known) / static_cast<double>(roi_free_.size());
  }();
  auto bytes = encode_handoff(pkg);
  log(ground.name, "deploy",
      {{"pose", vec(ground.pose.position)}, {"yaw", num(ground.pose.yaw)},
       {"bbox_min", vec(pkg.exploration_bbox.min)}, {"bbox_max", vec(pkg.exploration_bbox.max)},
       {"blocks", std::to_string(pkg.blocks.blocks.size())}, {"bytes", std::to_string(bytes.size())}});
  send(ground.name, state_.aerial.name, "handoff", std::move(bytes), true);
}

void Mission::launch_aerial(const HandoffPackage& pkg) {
  AgentState& a = state_.aerial;
  if (a.mode != AgentMode::Carried) return;
  merge_blocks(a.features, pkg.blocks);
  handoff_ = pkg;
  // Home is the deployment point; the launch pose hangs off it.
  a.global = make_global_graph(GraphKind::GlobalAerial, Pose(pkg.return_pose.position, a.pose.yaw));
  a.last_vertex = 0;
  if ((a.pose.position - pkg.return_pose.position).norm() > 1e-9) {
    a.last_vertex = a.global.add_vertex(a.pose);
    a.global.add_edge(0, a.last_vertex);
  }
  a.last_waypoint = a.pose;
  a.return_pose = pkg.return_pose;
  a.bounds = pkg.exploration_bbox;
  coloc_attempts_ = 0;
  coloc_init_ = pkg.ground_pose.compose(scenario_.config.mission.extrinsics);
  log(a.name, "handoff_received",
      {{"blocks", std::to_string(pkg.blocks.blocks.size())},
       {"deployment_vertices", std::to_string(pkg.deployment_graph.size())}});
  set_mode(a, AgentMode::Colocalizing);
}

void Mission::colocalize_step(AgentState& a) {
  const auto& cfg = scenario_.config;
  const auto scan = raycast_scan(scenario_.world, a.pose, a.robot.sensor);
  RegistrationResult r;
  if (coloc_attempts_ == 0)
    r = colocalize(scan, a.features, handoff_->ground_pose, cfg.mission.extrinsics, cfg.registration);
  else
    r = register_scan(scan, a.features, coloc_init_, cfg.registration);
  ++coloc_attempts_;
  const double err_t = (r.pose.position - a.pose.position).norm();
  const double err_yaw = rad2deg(std::abs(wrap_angle(r.pose.yaw - a.pose.yaw)));
  metrics_.coloc_status = to_string(r.status);
  metrics_.coloc_attempts = coloc_attempts_;
  metrics_.coloc_residual = r.residual;
  metrics_.coloc_error_trans = err_t;
  metrics_.coloc_error_yaw_deg = err_yaw;
  log(a.name, "coloc",
      {{"attempt", std::to_string(coloc_attempts_)}, {"status", to_string(r.status)},
       {"iterations", std::to_string(r.iterations_used)}, {"residual", fmt::format("{:.5f}", r.residual)},
       {"error_trans", fmt::format("{:.4f}", err_t)}, {"error_yaw_deg", fmt::format("{:.4f}", err_yaw)}});
  if (r.success()) {
    a.estimate = r.pose;
    sense_body(a);
    a.new_voxels_since_plan += integrate_scan(a.map, a.pose, scan);
    insert_points(a.features, extract_features(scan, a.estimate, cfg.registration.features));
    coverage_dirty_ = true;
    send(a.name, state_.ground.name, "coloc_done", {}, true);
    set_mode(a, AgentMode::Exploring, "colocalized");
    return;
  }
  if (std::isfinite(r.pose.position.norm()) && r.status != RegistrationStatus::EmptyCorrespondences)
    coloc_init_ = r.pose;
  if (coloc_attempts_ > cfg.mission.coloc_retries) {
    log(a.name, "fault", {{"reason", "colocalization_exhausted"}});
    set_mode(a, AgentMode::Fault, "colocalization");
  }
}

void Mission::apply_policy() {
  AgentState& g = state_.ground;
  if (g.mode != AgentMode::Deploying) return;
  log(g.name, "policy", {{"policy", to_string(state_.policy)}});
  switch (state_.policy) {
    case MissionPolicy::Continue:
      if (branch_ground_bounds_) g.bounds = *branch_ground_bounds_;
      g.path.clear();
      g.planned_once = false;
      set_mode(g, AgentMode::Exploring, "policy");
      break;
    case MissionPolicy::Wait:
      ground_waiting_for_aerial_ = true;
      break;
    case MissionPolicy::Home:
      begin_homing(g, "policy");
      break;
  }
}

void Mission::begin_homing(AgentState& a, const std::string& reason) {
  const int home = a.global.home();
  GraphPath gp;
  try {
    gp = shortest_path(a.global, a.last_vertex, home);
    // Under continue, the ground goes home by way of the aerial's landing spot.
    if (&a == &state_.ground && handoff_ && !reunited_ && state_.policy == MissionPolicy::Continue &&
        reason != "endurance" && state_.aerial.mode != AgentMode::Fault) {
      const int meet = a.global.nearest(state_.aerial.return_pose.position);
      if (meet >= 0 && meet != a.last_vertex && meet != home) {
        GraphPath out = shortest_path(a.global, a.last_vertex, meet);
        const GraphPath back = shortest_path(a.global, meet, home);
        if (!back.poses.empty()) out.poses.insert(out.poses.end(), back.poses.begin() + 1, back.poses.end());
        gp = std::move(out);
      }
    }
  } catch (const DisconnectedError&) {
    log(a.name, "fault", {{"reason", "homing_disconnected"}});
    set_mode(a, AgentMode::Fault, "homing");
    return;
  }
  a.path.clear();
  if ((a.pose.position - a.last_waypoint.position).norm() > 1e-12) a.path.push_back(a.last_waypoint);
  if (gp.poses.empty()) a.path.push_back(a.global.vertex(home).pose);
  else a.path.insert(a.path.end(), gp.poses.begin(), gp.poses.end());
  a.homing_for_endurance = reason == "endurance";
  a.waiting_logged = false;
  log(a.name, "homing",
      {{"reason", reason}, {"distance", num(home_distance(a))},
       {"remaining", num(a.robot.endurance - a.elapsed)}});
  set_mode(a, AgentMode::Homing, reason);
}

void Mission::finish_homing(AgentState& a) {
  const double err = (a.pose.position - a.return_pose.position).norm();
  log(a.name, "arrived", {{"pose", vec(a.pose.position)}, {"return_error", num(err)}});
  set_mode(a, &a == &state_.aerial ? AgentMode::Landed : AgentMode::Done);
}

void Mission::check_reunion() {
  if (reunited_ || team_ != TeamConfig::Marsupial || !handoff_) return;
  const AgentState& g = state_.ground;
  const AgentState& a = state_.aerial;
  if (a.mode != AgentMode::Landed || g.mode == AgentMode::Fault) return;
  if ((g.pose.position - a.pose.position).norm() > scenario_.config.mission.comm_range) return;
  const auto stats = exchange_maps(state_.ground.features, state_.aerial.features);
  const auto ps_g = state_.ground.features.point_set();
  const auto ps_a = state_.aerial.features.point_set();
  std::size_t common = 0;
  for (const auto& p : ps_g) common += ps_a.count(p);
  const std::size_t uni = ps_g.size() + ps_a.size() - common;
  reunited_ = true;
  metrics_.reunion = true;
  metrics_.map_consistency = uni == 0 ? 1.0 : static_cast<double>(common) / static_cast<double>(uni);
  log("mission", "reunion_merge",
      {{"rounds", std::to_string(stats.rounds)}, {"blocks_to_ground", std::to_string(stats.blocks_to_a)},
       {"blocks_to_aerial", std::to_string(stats.blocks_to_b)}, {"identical", stats.converged ? "1" : "0"},
       {"points", std::to_string(ps_g.size())}});
}

void Mission::send(const std::string& from, const std::string& to, const std::string& kind,
                   std::vector<std::uint8_t> payload, bool reliable) {
  Message m;
  m.id = next_message_id_++;
  m.from = from;
  m.to = to;
  m.kind = kind;
  m.payload = std::move(payload);
  if (reliable) {
    state_.channel.reliable.push_back(Outgoing{std::move(m), state_.time, 0, false});
  } else {
    transmit(std::move(m));
  }
}

void Mission::transmit(Message m) {
  Channel& ch = state_.channel;
  ++ch.sent;
  if (ch.drop > 0.0 && rng_channel_.uniform() < ch.drop) {
    ++ch.dropped;
    log("channel", "drop", {{"kind", m.kind}, {"id", std::to_string(m.ack_of >= 0 ? m.ack_of : m.id)}});
    return;
  }
  m.deliver_at = state_.time + ch.latency;
  m.order = message_order_++;
  auto it = std::upper_bound(ch.in_flight.begin(), ch.in_flight.end(), m, [](const Message& x, const Message& y) {
    if (x.deliver_at != y.deliver_at) return x.deliver_at < y.deliver_at;
    return x.order < y.order;
  });
  ch.in_flight.insert(it, std::move(m));
}

void Mission::pump_channel() {
  Channel& ch = state_.channel;
  for (auto& out : ch.reliable) {
    if (out.acked || out.next_send > state_.time + 1e-9) continue;
    ++out.attempts;
    log(out.msg.from, "send",
        {{"kind", out.msg.kind}, {"id", std::to_string(out.msg.id)}, {"attempt", std::to_string(out.attempts)},
         {"bytes", std::to_string(out.msg.payload.size())}});
    transmit(out.msg);
    out.next_send = state_.time + scenario_.config.mission.retry_interval;
  }
  while (!ch.in_flight.empty() && ch.in_flight.front().deliver_at <= state_.time + 1e-9) {
    const Message m = std::move(ch.in_flight.front());
    ch.in_flight.pop_front();
    deliver(m);
  }
}

void Mission::deliver(const Message& m) {
  if (m.ack_of >= 0) {
    for (auto& out : state_.channel.reliable) {
      if (out.msg.id != m.ack_of || out.acked) continue;
      out.acked = true;
      log(m.to, "acked", {{"kind", out.msg.kind}, {"id", std::to_string(out.msg.id)}});
      if (out.msg.kind == "handoff") apply_policy();
    }
    return;
  }
  Message ack;
  ack.id = next_message_id_++;
  ack.ack_of = m.id;
  ack.from = m.to;
  ack.to = m.from;
  ack.kind = "ack";
  transmit(std::move(ack));
  if (!seen_messages_.insert(m.id).second) return;
  log(m.to, "recv", {{"kind", m.kind}, {"id", std::to_string(m.id)}, {"bytes", std::to_string(m.payload.size())}});
  if (m.kind == "handoff") launch_aerial(decode_handoff(m.payload));
}

void Mission::update_coverage() {
  if (!coverage_dirty_) return;
  coverage_dirty_ = false;
  const auto& g = state_.ground.map;
  const auto& a = state_.aerial.map;
  std::size_t known = 0;
  for (const auto i : truth_free_)
    if (cell(g, i) != VoxelState::Unknown || cell(a, i) != VoxelState::Unknown) ++known;
  coverage_ = truth_free_.empty() ? 1.0 : static_cast<double>(known) / static_cast<double>(truth_free_.size());
  const std::string text = fmt::format("{:.4f}", coverage_);
  if (text == last_coverage_text_) return;
  last_coverage_text_ = text;
  metrics_.coverage_series.emplace_back(state_.time, coverage_);
  log("mission", "coverage", {{"value", text}});
  if (metrics_.time_to_target < 0.0 && coverage_ >= scenario_.config.mission.coverage_target) {
    metrics_.time_to_target = state_.time;
    log("mission", "coverage_target_reached", {{"value", text}});
  }
}

VoxelGrid Mission::merged_map() const {
  VoxelGrid out = state_.ground.map;
  const auto& a = state_.aerial.map;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const VoxelState s = cell(a, i);
    if (s == VoxelState::Unknown) continue;
    const VoxelState cur = cell(out, i);
    if (cur == VoxelState::Unknown || s == VoxelState::Occupied) out.set(out.unlinear(i), s);
  }
  return out;
}

void Mission::finalize() {
  AgentState& g = state_.ground;
  AgentState& a = state_.aerial;
  if (a.active && a.mode == AgentMode::Carried && (!g.active || terminal(g.mode))) set_mode(a, AgentMode::Done, "carried");

  const bool fault = (g.active && g.mode == AgentMode::Fault) || (a.active && a.mode == AgentMode::Fault);
  if (!finished()) {
    metrics_.outcome = "cap_exceeded";
    metrics_.exit_code = 3;
  } else if (fault) {
    metrics_.outcome = "fault";
    metrics_.exit_code = 2;
  } else {
    metrics_.outcome = "complete";
    metrics_.exit_code = 0;
  }
  metrics_.completion_time = state_.time;
  metrics_.coverage = coverage_;
  if (!roi_free_.empty()) {
    std::size_t known = 0, aerial_known = 0;
    for (const auto i : roi_free_) {
      const bool ak = cell(a.map, i) != VoxelState::Unknown;
      aerial_known += ak;
      known += ak || cell(g.map, i) != VoxelState::Unknown;
    }
    metrics_.roi_coverage = static_cast<double>(known) / static_cast<double>(roi_free_.size());
    metrics_.aerial_roi_coverage = static_cast<double>(aerial_known) / static_cast<double>(roi_free_.size());
  }
  metrics_.ground_distance = g.distance_traveled;
  metrics_.aerial_distance = a.distance_traveled;
  metrics_.ground_elapsed = g.elapsed;
  metrics_.aerial_elapsed = a.elapsed;
  metrics_.ground_mode = g.active ? to_string(g.mode) : "inactive";
  metrics_.aerial_mode = a.active ? to_string(a.mode) : "inactive";
  if (g.active) metrics_.ground_home_error = (g.pose.position - g.return_pose.position).norm();
  if (a.active && a.mode != AgentMode::Done) metrics_.aerial_home_error = (a.pose.position - a.return_pose.position).norm();
  log("mission", "end",
      {{"outcome", metrics_.outcome}, {"coverage", fmt::format("{:.4f}", coverage_)},
       {"ground_mode", metrics_.ground_mode}, {"aerial_mode", metrics_.aerial_mode}});
}

MissionResult Mission::run() {
  while (!finished() && !cap_exceeded()) step();
  finalize();
  MissionResult r;
  r.metrics = metrics_;
  r.log.reserve(state_.event_log.size());
  for (const auto& e : state_.event_log) r.log.push_back(e.format());
  r.merged_map = merged_map();
  r.final_state = state_;
  return r;
}

std::vector<Metrics> compare_runs(const ScenarioSpec& scenario, std::uint64_t seed) {
  std::vector<Metrics> rows;
  for (const auto team : {TeamConfig::GroundOnly, TeamConfig::AerialOnly, TeamConfig::Marsupial}) {
    Mission m(scenario, seed, team);
    rows.push_back(m.run().metrics);
  }
  return rows;
}

std::string format_comparison(const std::vector<Metrics>& rows) {
  std::string out = fmt::format("{:<12} {:>9} {:>10} {:>10} {:>10} {:>10} {:>12}\n", "team", "coverage",
                                "t_target", "time", "ground_m", "aerial_m", "outcome");
  for (const auto& m : rows)
    out += fmt::format("{:<12} {:>9.4f} {:>10.1f} {:>10.1f} {:>10.1f} {:>10.1f} {:>12}\n", to_string(m.team),
                       m.coverage, m.time_to_target, m.completion_time, m.ground_distance, m.aerial_distance,
                       m.outcome);
  return out;
}

}  // namespace marsupial
