#include "marsupial/marsupial.hpp"

#include "marsupial/gain.hpp"
#include "marsupial/traversability.hpp"
#include "marsupial/wire.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace marsupial {

std::string to_string(ExploreDirection d) { return d == ExploreDirection::Up ? "up" : "down"; }

void MarsupialConfig::validate() const {
  if (!(r_m > 0) || !(r_g > 0) || !(cluster_radius > 0))
    throw std::invalid_argument("marsupial r_m, r_g and cluster_radius must be > 0");
  if (!(covered_penalty >= 0.0 && covered_penalty < 1.0))
    throw std::invalid_argument("marsupial covered_penalty must be in [0, 1)");
  if (!(vertical_bonus >= 0.0)) throw std::invalid_argument("marsupial vertical_bonus must be >= 0");
  if (!(aerial_gain_range > 0.0)) throw std::invalid_argument("marsupial aerial_gain_range must be > 0");
  if (samples_per_waypoint < 0) throw std::invalid_argument("marsupial samples_per_waypoint must be >= 0");
  if (max_deployments < 0) throw std::invalid_argument("marsupial max_deployments must be >= 0");
  if (!(branch_min_angle > 0.0 && branch_min_angle <= 180.0))
    throw std::invalid_argument("marsupial branch_min_angle must be in (0, 180]");
  if (!(branch_radius > 0.0) || !(branch_min_gain >= 0.0))
    throw std::invalid_argument("marsupial branch_radius must be > 0 and branch_min_gain >= 0");
}

void update_deployment_graph(DeploymentGraph& gm, const VoxelGrid& map, const SensorSpec& aerial_sensor,
                             const std::vector<Pose>& executed_ground_path, const RobotSpec& ground,
                             const MarsupialConfig& config, Rng& rng) {
  if (executed_ground_path.empty()) return;
  ExplorationGraph& g = gm.graph;
  const double spacing = 0.5 * config.cluster_radius;
  const double link = config.cluster_radius;

  auto try_add = [&](const Pose& pose) {
    const int near = g.nearest(pose.position);
    if (near >= 0 && (g.vertex(near).pose.position - pose.position).norm() < spacing) return;
    const int id = g.add_vertex(pose);
    for (const int other : g.within(pose.position, link)) {
      if (other == id) continue;
      if (traversable(map, g.vertex(other).pose, pose, ground)) g.add_edge(other, id);
    }
  };

  for (const auto& wp : executed_ground_path) {
    try_add(wp);
    for (int s = 0; s < config.samples_per_waypoint; ++s) {
      const double angle = rng.uniform(-std::numbers::pi, std::numbers::pi);
      const double radius = rng.uniform(0.0, config.cluster_radius);
      const Vec3 p = wp.position + radius * Vec3(std::cos(angle), std::sin(angle), 0.0);
      if (!map.contains(p)) continue;
      const auto projected = project_to_support(map, Pose(p, 0.0), ground);
      if (!projected || !can_occupy(map, *projected, ground)) continue;
      if (!traversable(map, wp, *projected, ground)) continue;
      try_add(*projected);
    }
  }

  SensorSpec sensor = aerial_sensor;
  sensor.max_range = config.aerial_gain_range;
  for (std::size_t i = 0; i < g.size(); ++i) refresh_gain(map, g.vertex(static_cast<int>(i)), sensor);
}

std::vector<DeploymentRegion> identify_deployment_regions(const DeploymentGraph& gm, const Pose& robot_pose,
                                                          const std::vector<Vec3>& ground_frontiers,
                                                          const MarsupialConfig& config,
                                                          double gain_threshold,
                                                          const ExplorationGraph& ground_global) {
  const auto& vs = gm.graph.vertices();
  std::vector<int> survivors;
  for (const auto& v : vs) {
    if (v.gain.volume < gain_threshold) continue;
    if ((v.pose.position - robot_pose.position).norm() <= config.r_m) continue;
    bool near_frontier = false;
    for (const auto& f : ground_frontiers)
      if ((v.pose.position - f).norm() <= config.r_g) {
        near_frontier = true;
        break;
      }
    if (!near_frontier) survivors.push_back(v.id);
  }

  // Single linkage via union-find over pairs within cluster_radius.
  std::vector<int> parent(survivors.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t a = 0; a < survivors.size(); ++a)
    for (std::size_t b = a + 1; b < survivors.size(); ++b) {
      const double d = (vs[survivors[a]].pose.position - vs[survivors[b]].pose.position).norm();
      if (d <= config.cluster_radius) {
        const int ra = find(static_cast<int>(a)), rb = find(static_cast<int>(b));
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
      }
    }

  std::vector<DeploymentRegion> regions;
  std::vector<int> region_of(survivors.size(), -1);
  for (std::size_t a = 0; a < survivors.size(); ++a) {
    const int root = find(static_cast<int>(a));
    if (region_of[root] < 0) {
      region_of[root] = static_cast<int>(regions.size());
      regions.emplace_back();
    }
    auto& r = regions[region_of[root]];
    r.members.push_back(survivors[a]);
    r.aggregate_gain += vs[survivors[a]].gain.volume;
  }
  for (auto& r : regions) {
    Vec3 sum = Vec3::Zero();
    for (const int m : r.members) sum += vs[m].pose.position;
    r.center = sum / static_cast<double>(r.members.size());
    r.nearest_global_vertex = ground_global.nearest(r.center);
  }
  return regions;
}

std::optional<DeploymentChoice> select_deployment(const ExplorationGraph& ground_global,
                                                  const std::vector<DeploymentRegion>& regions,
                                                  int current) {
  std::optional<DeploymentChoice> best;
  for (const auto& r : regions) {
    if (r.nearest_global_vertex < 0) continue;
    GraphPath path;
    try {
      path = shortest_path(ground_global, current, r.nearest_global_vertex);
    } catch (const DisconnectedError&) {
      continue;
    }
    if (!best || path.length < best->path.length ||
        (path.length == best->path.length && lex_less(r.center, best->region.center)))
      best = DeploymentChoice{r, std::move(path)};
  }
  return best;
}

HandoffPackage make_handoff(const DeploymentGraph& gm, const UnifiedMap& map, const Pose& ground_pose,
                            const Aabb& global_bbox, ExploreDirection direction, double voxel_resolution) {
  HandoffPackage pkg;
  pkg.blocks = collect_all_blocks(map);
  pkg.deployment_graph = gm.graph;
  pkg.ground_pose = ground_pose;
  pkg.return_pose = ground_pose;
  pkg.direction = direction;
  pkg.voxel_resolution = voxel_resolution;
  pkg.exploration_bbox = global_bbox;
  if (direction == ExploreDirection::Up)
    pkg.exploration_bbox.min.z() = ground_pose.position.z();
  else
    pkg.exploration_bbox.max.z() = ground_pose.position.z();
  return pkg;
}

namespace {
constexpr std::uint32_t kHandoffMagic = 0x314F484D;  // "MHO1"

void write_pose(wire::Writer& w, const Pose& p) {
  w.f64(p.position.x());
  w.f64(p.position.y());
  w.f64(p.position.z());
  w.f64(p.yaw);
}

Pose read_pose(wire::Reader& r) {
  const double x = r.f64(), y = r.f64(), z = r.f64(), yaw = r.f64();
  Pose p;
  p.position = Vec3(x, y, z);
  p.yaw = yaw;
  return p;
}

void write_vec(wire::Writer& w, const Vec3& v) {
  w.f64(v.x());
  w.f64(v.y());
  w.f64(v.z());
}

Vec3 read_vec(wire::Reader& r) {
  const double x = r.f64(), y = r.f64(), z = r.f64();
  return {x, y, z};
}
}  // namespace

std::vector<std::uint8_t> encode_handoff(const HandoffPackage& pkg) {
  wire::Writer w;
  w.u32(kHandoffMagic);
  write_pose(w, pkg.ground_pose);
  write_pose(w, pkg.return_pose);
  write_vec(w, pkg.exploration_bbox.min);
  write_vec(w, pkg.exploration_bbox.max);
  w.u8(pkg.direction == ExploreDirection::Up ? 0 : 1);
  w.f64(pkg.voxel_resolution);
  w.f64(pkg.blocks.frame.block_edge);
  w.f64(pkg.blocks.frame.quantum);
  write_vec(w, pkg.blocks.frame.lattice_origin);
  w.str(export_graph(pkg.deployment_graph));
  const auto blocks = encode_blocks(pkg.blocks);
  w.u32(static_cast<std::uint32_t>(blocks.size()));
  w.bytes(blocks);
  return w.take();
}

HandoffPackage decode_handoff(std::span<const std::uint8_t> bytes) {
  wire::Reader r(bytes);
  if (r.u32() != kHandoffMagic) throw wire::DecodeError("not a handoff package");
  HandoffPackage pkg;
  pkg.ground_pose = read_pose(r);
  pkg.return_pose = read_pose(r);
  pkg.exploration_bbox.min = read_vec(r);
  pkg.exploration_bbox.max = read_vec(r);
  const auto dir = r.u8();
  if (dir > 1) throw wire::DecodeError("bad exploration direction");
  pkg.direction = dir == 0 ? ExploreDirection::Up : ExploreDirection::Down;
  pkg.voxel_resolution = r.f64();
  MapFrame frame;
  frame.block_edge = r.f64();
  frame.quantum = r.f64();
  frame.lattice_origin = read_vec(r);
  pkg.deployment_graph = import_graph(r.str(), GraphKind::Deployment, pkg.voxel_resolution);
  const auto n = r.u32();
  pkg.blocks = decode_blocks(r.bytes(n), frame);
  if (!r.done()) throw wire::DecodeError("trailing bytes after handoff package");
  return pkg;
}

double modulate_aerial_gain(const VolumetricGain& raw, const Pose& vertex_pose,
                            const HandoffPackage& handoff, const MarsupialConfig& config) {
  if (!handoff.exploration_bbox.contains(vertex_pose.position)) return 0.0;
  const double dz = std::abs(vertex_pose.position.z() - handoff.ground_pose.position.z());
  double gain = raw.volume * (1.0 + config.vertical_bonus * dz);
  const auto& gm = handoff.deployment_graph;
  const int near = gm.nearest(vertex_pose.position);
  if (near >= 0 && (gm.vertex(near).pose.position - vertex_pose.position).norm() < config.cluster_radius)
    gain *= config.covered_penalty;
  return gain;
}

}  // namespace marsupial
