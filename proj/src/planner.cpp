#include "marsupial/planner.hpp"

#include "marsupial/traversability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace marsupial {

PlannerParams PlannerParams::ground_defaults() { return PlannerParams{}; }

PlannerParams PlannerParams::aerial_defaults() {
  PlannerParams p;
  p.local_bbox = Vec3(20.0, 20.0, 10.0);
  return p;
}

void PlannerParams::validate() const {
  if (!(local_bbox.array() > 0.0).all()) throw std::invalid_argument("planner local_bbox must be positive");
  if (n_samples <= 0) throw std::invalid_argument("planner n_samples must be positive");
  if (!(edge_radius > 0.0)) throw std::invalid_argument("planner edge_radius must be positive");
  if (gain_range < 0.0) throw std::invalid_argument("planner gain_range must be >= 0");
  if (!(completion_gain_threshold > 0.0))
    throw std::invalid_argument("planner completion_gain_threshold must be positive");
  if (!(path_gain_lambda > 0.0)) throw std::invalid_argument("planner path_gain_lambda must be positive");
  if (attempts_per_sample <= 0) throw std::invalid_argument("planner attempts_per_sample must be positive");
}

SensorSpec PlannerParams::gain_sensor(const SensorSpec& sensor) const {
  SensorSpec s = sensor;
  if (gain_range > 0.0) s.max_range = gain_range;
  return s;
}

std::optional<Pose> project_to_support(const VoxelGrid& map, const Pose& p, const RobotSpec& robot) {
  const Index3 c = map.index_of(p.position);
  if (!map.contains(c)) return std::nullopt;
  for (int z = c.z; z >= 0; --z) {
    const VoxelState s = map.at(Index3{c.x, c.y, z});
    if (s == VoxelState::Occupied) {
      if (z == c.z) return std::nullopt;
      const int lift = static_cast<int>(std::floor(robot.sensor_height / map.resolution()));
      const Index3 at{c.x, c.y, z + 1 + lift};
      if (!map.contains(at)) return std::nullopt;
      return Pose(map.center(at), p.yaw);
    }
    if (s == VoxelState::Unknown && robot.unknown_is_obstacle) return std::nullopt;
  }
  return std::nullopt;
}

ExplorationGraph build_local_graph(const VoxelGrid& map, const Pose& root, const RobotSpec& robot,
                                   const PlannerParams& params, Rng& rng,
                                   const std::optional<Aabb>& bounds) {
  if (!map.contains(root.position) || !can_occupy(map, root, robot))
    throw PlanningError("local graph root is in collision");

  Aabb box = Aabb::centered(root.position, params.local_bbox).intersect(map.bounds());
  if (bounds) box = box.intersect(*bounds);
  const GraphKind kind = robot.kind == RobotKind::Ground ? GraphKind::LocalGround : GraphKind::LocalAerial;
  ExplorationGraph g(kind);
  g.add_vertex(root);

  std::set<Index3> taken{map.index_of(root.position)};
  if (box.valid()) {
    const Index3 lo = map.index_of(box.min);
    Index3 hi = map.index_of(box.max);
    for (int a = 0; a < 3; ++a) hi[a] = std::min(hi[a], map.dims()[a] - 1);
    const std::uint64_t span[3] = {static_cast<std::uint64_t>(std::max(0, hi.x - lo.x + 1)),
                                   static_cast<std::uint64_t>(std::max(0, hi.y - lo.y + 1)),
                                   static_cast<std::uint64_t>(std::max(0, hi.z - lo.z + 1))};
    const int attempts = params.n_samples * params.attempts_per_sample;
    int accepted = 0;
    for (int t = 0; t < attempts && accepted < params.n_samples && span[0] && span[1] && span[2]; ++t) {
      const Index3 idx{lo.x + static_cast<int>(rng.below(span[0])),
                       lo.y + static_cast<int>(rng.below(span[1])),
                       lo.z + static_cast<int>(rng.below(span[2]))};
      if (map.at(idx) != VoxelState::Free) continue;
      std::optional<Pose> pose = Pose(map.center(idx), 0.0);
      if (robot.kind == RobotKind::Ground) pose = project_to_support(map, *pose, robot);
      if (!pose) continue;
      if (bounds && !bounds->contains(pose->position)) continue;
      const Index3 at = map.index_of(pose->position);
      if (taken.count(at)) continue;
      if (!can_occupy(map, *pose, robot)) continue;
      taken.insert(at);
      g.add_vertex(*pose);
      ++accepted;
    }
  }
  if (g.size() == 1) throw PlanningError("local graph: zero valid samples in bounding box");

  const double r2 = params.edge_radius * params.edge_radius;
  const auto& vs = g.vertices();
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = i + 1; j < vs.size(); ++j) {
      if ((vs[i].pose.position - vs[j].pose.position).squaredNorm() > r2) continue;
      if (traversable(map, vs[i].pose, vs[j].pose, robot))
        g.add_edge(static_cast<int>(i), static_cast<int>(j));
    }
  return g.component_of(0);
}

void evaluate_graph_gains(ExplorationGraph& g, const VoxelGrid& map, const SensorSpec& gain_sensor) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    Vertex& v = g.vertex(static_cast<int>(i));
    v.gain = evaluate_gain(map, v.pose, gain_sensor);
    v.gain_stamp = map.stamp() + 1;
  }
}

LocalPath best_local_path(const ExplorationGraph& g, const PlannerParams& params,
                          const std::vector<double>* gain_of) {
  LocalPath out;
  if (g.empty()) return out;
  const auto tree = dijkstra(g, 0);
  const auto gain = [&](int id) { return gain_of ? (*gain_of)[id] : g.vertex(id).gain.volume; };

  // Scores accumulate along the tree; process vertices in distance order so each
  // predecessor is final before its children.
  std::vector<int> order;
  for (std::size_t v = 0; v < g.size(); ++v)
    if (tree.reachable(static_cast<int>(v))) order.push_back(static_cast<int>(v));
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (tree.dist[a] != tree.dist[b]) return tree.dist[a] < tree.dist[b];
    return a < b;
  });
  std::vector<double> score(g.size(), 0.0);
  int best = 0;
  for (const int v : order) {
    const double own = gain(v) * std::exp(-params.path_gain_lambda * tree.dist[v]);
    score[v] = (tree.pred[v] >= 0 ? score[tree.pred[v]] : 0.0) + own;
    if (score[v] > score[best] || (score[v] == score[best] && v < best)) best = v;
  }
  out.ids = tree.path_to(best);
  for (const int id : out.ids) out.poses.push_back(g.vertex(id).pose);
  out.gain = score[best];
  return out;
}

bool local_completion(const LocalPath& best, const PlannerParams& params) {
  return best.gain < params.completion_gain_threshold;
}

bool local_completion(const ExplorationGraph& g, const PlannerParams& params) {
  return local_completion(best_local_path(g, params), params);
}

ExplorationGraph make_global_graph(GraphKind kind, const Pose& home) {
  ExplorationGraph g(kind);
  const int id = g.add_vertex(home);
  g.vertex(id).home = true;
  return g;
}

std::vector<int> append_chain(ExplorationGraph& global, const std::vector<Pose>& chain,
                              const VoxelGrid& map, const RobotSpec& robot,
                              const PlannerParams& params) {
  std::vector<int> matched;
  const double spacing = params.global_spacing();
  auto linked = [&](int a, int b) {
    return a == b || global.has_edge(a, b) ||
           traversable(map, global.vertex(a).pose, global.vertex(b).pose, robot);
  };
  auto add_linked_vertex = [&](const Pose& pose) {
    const int id = global.add_vertex(pose);
    int links = 0;
    for (const int other : global.within(pose.position, params.global_connect_radius())) {
      if (other == id) continue;
      if (traversable(map, global.vertex(other).pose, pose, robot)) {
        global.add_edge(other, id);
        if (++links >= 6) break;
      }
    }
    return id;
  };

  int prev = -1;
  const Pose* prev_pose = nullptr;
  for (const auto& pose : chain) {
    int cur = -1;
    const int near = global.nearest(pose.position);
    const bool close = near >= 0 && (global.vertex(near).pose.position - pose.position).norm() < spacing;
    if (close && (prev < 0 || linked(prev, near)) && traversable(map, global.vertex(near).pose, pose, robot)) {
      cur = near;
    } else {
      cur = add_linked_vertex(pose);
    }
    if (prev >= 0 && prev != cur && !global.has_edge(prev, cur)) {
      if (traversable(map, global.vertex(prev).pose, global.vertex(cur).pose, robot)) {
        global.add_edge(prev, cur);
      } else if (prev_pose) {
        // prev was matched to a nearby vertex; bridge through the chain pose itself.
        const int bridge = global.add_vertex(*prev_pose);
        global.add_edge(prev, bridge);
        global.add_edge(bridge, cur);
      }
    }
    matched.push_back(cur);
    prev = cur;
    prev_pose = &pose;
  }
  return matched;
}

void update_global_graph(ExplorationGraph& global, const ExplorationGraph& local,
                         const std::vector<Pose>& executed_path, const VoxelGrid& map,
                         const RobotSpec& robot, const PlannerParams& params) {
  append_chain(global, executed_path, map, robot, params);
  if (local.empty()) return;

  std::vector<int> candidates;
  for (const auto& v : local.vertices())
    if (v.gain.volume > params.completion_gain_threshold) candidates.push_back(v.id);
  std::sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    const double ga = local.vertex(a).gain.volume, gb = local.vertex(b).gain.volume;
    if (ga != gb) return ga > gb;
    return a < b;
  });
  const auto tree = dijkstra(local, 0);
  for (const int c : candidates) {
    const int near = global.nearest(local.vertex(c).pose.position);
    if (near >= 0 &&
        (global.vertex(near).pose.position - local.vertex(c).pose.position).norm() <
            params.global_spacing())
      continue;
    std::vector<Pose> chain;
    for (const int id : tree.path_to(c)) chain.push_back(local.vertex(id).pose);
    const auto ids = append_chain(global, chain, map, robot, params);
    if (!ids.empty()) global.vertex(ids.back()).gain = local.vertex(c).gain;
  }
}

std::vector<int> detect_frontiers(ExplorationGraph& global, const VoxelGrid& map,
                                  const SensorSpec& gain_sensor, const PlannerParams& params,
                                  const Vec3& from) {
  std::vector<int> out;
  for (std::size_t i = 0; i < global.size(); ++i) {
    Vertex& v = global.vertex(static_cast<int>(i));
    refresh_gain(map, v, gain_sensor);
    v.frontier = v.gain.volume >= params.completion_gain_threshold;
    if (v.frontier) out.push_back(v.id);
  }
  std::sort(out.begin(), out.end(), [&](int a, int b) {
    const auto& va = global.vertex(a);
    const auto& vb = global.vertex(b);
    if (va.gain.volume != vb.gain.volume) return va.gain.volume > vb.gain.volume;
    const double da = (va.pose.position - from).norm(), db = (vb.pose.position - from).norm();
    if (da != db) return da < db;
    return a < b;
  });
  return out;
}

GraphPath auto_home(const ExplorationGraph& global, int current) {
  const int home = global.home();
  if (home < 0) throw DisconnectedError("global graph has no home vertex");
  return shortest_path(global, current, home);
}

}  // namespace marsupial
