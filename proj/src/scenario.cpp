#include "marsupial/scenario.hpp"

#include "marsupial/traversability.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace marsupial {

std::string to_string(MissionPolicy p) {
  switch (p) {
    case MissionPolicy::Continue: return "continue";
    case MissionPolicy::Wait: return "wait";
    case MissionPolicy::Home: return "home";
  }
  return "home";
}

MissionPolicy parse_policy(const std::string& s) {
  if (s == "continue") return MissionPolicy::Continue;
  if (s == "wait") return MissionPolicy::Wait;
  if (s == "home") return MissionPolicy::Home;
  throw std::invalid_argument("policy must be one of continue|wait|home, got '" + s + "'");
}

void MissionParams::validate() const {
  if (!(dt > 0)) throw std::invalid_argument("mission dt must be > 0");
  if (!(homing_safety >= 1.0)) throw std::invalid_argument("mission homing_safety must be >= 1");
  if (channel_latency < 0 || retry_interval <= 0) throw std::invalid_argument("mission channel timing invalid");
  if (!(channel_drop >= 0 && channel_drop < 1)) throw std::invalid_argument("mission channel_drop must be in [0,1)");
  if (odometry_sigma < 0) throw std::invalid_argument("mission odometry_sigma must be >= 0");
  if (coloc_retries < 0) throw std::invalid_argument("mission coloc_retries must be >= 0");
  if (!(cap_factor > 0) || !(comm_range > 0) || !(block_edge > 0))
    throw std::invalid_argument("mission cap_factor, comm_range and block_edge must be > 0");
  if (!(coverage_target > 0 && coverage_target <= 1)) throw std::invalid_argument("mission coverage_target must be in (0,1]");
}

void MissionConfig::validate() const {
  ground_planner.validate();
  aerial_planner.validate();
  marsupial.validate();
  registration.validate();
  mission.validate();
}

ParseError::ParseError(int line_, const std::string& field_, const std::string& msg)
    : std::runtime_error(fmt::format("line {}: field '{}': {}", line_, field_, msg)),
      line(line_),
      field(field_) {}

namespace {

std::vector<double> numbers(const std::string& value, std::size_t expected) {
  std::istringstream in(value);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("expected a number, got '" + tok + "'");
    }
    if (used != tok.size()) throw std::invalid_argument("expected a number, got '" + tok + "'");
    out.push_back(v);
  }
  if (expected && out.size() != expected)
    throw std::invalid_argument(fmt::format("expected {} numbers, got {}", expected, out.size()));
  return out;
}

double number(const std::string& v) { return numbers(v, 1)[0]; }

int integer(const std::string& v) {
  const double d = number(v);
  if (d != std::floor(d)) throw std::invalid_argument("expected an integer, got '" + v + "'");
  return static_cast<int>(d);
}

bool boolean(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

Vec3 vec3(const std::string& v) {
  const auto n = numbers(v, 3);
  return {n[0], n[1], n[2]};
}

Aabb box6(const std::string& v) {
  const auto n = numbers(v, 6);
  return Aabb{Vec3(std::min(n[0], n[3]), std::min(n[1], n[4]), std::min(n[2], n[5])),
              Vec3(std::max(n[0], n[3]), std::max(n[1], n[4]), std::max(n[2], n[5]))};
}

Pose pose4(const std::string& v) {
  const auto n = numbers(v, 4);
  return Pose(n[0], n[1], n[2], deg2rad(n[3]));
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

using Setter = std::function<void(ScenarioSpec&, const std::string&)>;

void add_robot_keys(std::map<std::string, Setter>& reg, const std::string& prefix,
                    RobotSpec ScenarioSpec::*member) {
  reg[prefix + "fov"] = [member](ScenarioSpec& s, const std::string& v) {
    const auto n = numbers(v, 2);
    (s.*member).sensor.fov_h = n[0];
    (s.*member).sensor.fov_v = n[1];
  };
  reg[prefix + "max_range"] = [member](ScenarioSpec& s, const std::string& v) { (s.*member).sensor.max_range = number(v); };
  reg[prefix + "rays"] = [member](ScenarioSpec& s, const std::string& v) {
    const auto n = numbers(v, 2);
    (s.*member).sensor.rays_h = static_cast<int>(n[0]);
    (s.*member).sensor.rays_v = static_cast<int>(n[1]);
  };
  reg[prefix + "speed"] = [member](ScenarioSpec& s, const std::string& v) { (s.*member).nominal_speed = number(v); };
  reg[prefix + "endurance"] = [member](ScenarioSpec& s, const std::string& v) { (s.*member).endurance = number(v); };
  reg[prefix + "max_step_height"] = [member](ScenarioSpec& s, const std::string& v) { (s.*member).max_step_height = number(v); };
  reg[prefix + "collision_radius"] = [member](ScenarioSpec& s, const std::string& v) { (s.*member).collision_radius = number(v); };
  reg[prefix + "sensor_height"] = [member](ScenarioSpec& s, const std::string& v) { (s.*member).sensor_height = number(v); };
  reg[prefix + "terrain"] = [member](ScenarioSpec& s, const std::string& v) {
    if (!boolean(v)) (s.*member).terrain.reset();
    else if (!(s.*member).terrain) (s.*member).terrain = RobotSpec::ground().terrain;
  };
  reg[prefix + "terrain_range"] = [member](ScenarioSpec& s, const std::string& v) {
    if (!(s.*member).terrain) (s.*member).terrain = RobotSpec::ground().terrain;
    (s.*member).terrain->max_range = number(v);
  };
  reg[prefix + "unknown_is_obstacle"] = [member](ScenarioSpec& s, const std::string& v) { (s.*member).unknown_is_obstacle = boolean(v); };
}

void add_planner_keys(std::map<std::string, Setter>& reg, const std::string& prefix,
                      PlannerParams MissionConfig::*member) {
  auto P = [member](ScenarioSpec& s) -> PlannerParams& { return s.config.*member; };
  reg[prefix + "local_bbox"] = [P](ScenarioSpec& s, const std::string& v) { P(s).local_bbox = vec3(v); };
  reg[prefix + "n_samples"] = [P](ScenarioSpec& s, const std::string& v) { P(s).n_samples = integer(v); };
  reg[prefix + "edge_radius"] = [P](ScenarioSpec& s, const std::string& v) { P(s).edge_radius = number(v); };
  reg[prefix + "gain_range"] = [P](ScenarioSpec& s, const std::string& v) { P(s).gain_range = number(v); };
  reg[prefix + "completion_gain_threshold"] = [P](ScenarioSpec& s, const std::string& v) { P(s).completion_gain_threshold = number(v); };
  reg[prefix + "path_gain_lambda"] = [P](ScenarioSpec& s, const std::string& v) { P(s).path_gain_lambda = number(v); };
  reg[prefix + "attempts_per_sample"] = [P](ScenarioSpec& s, const std::string& v) { P(s).attempts_per_sample = integer(v); };
}

const std::map<std::string, Setter>& registry() {
  static const std::map<std::string, Setter> reg = [] {
    std::map<std::string, Setter> r;
    add_robot_keys(r, "robots.ground.", &ScenarioSpec::ground);
    add_robot_keys(r, "robots.aerial.", &ScenarioSpec::aerial);
    add_planner_keys(r, "planner.ground.", &MissionConfig::ground_planner);
    add_planner_keys(r, "planner.aerial.", &MissionConfig::aerial_planner);

    auto M = [](ScenarioSpec& s) -> MarsupialConfig& { return s.config.marsupial; };
    r["marsupial.r_m"] = [M](ScenarioSpec& s, const std::string& v) { M(s).r_m = number(v); };
    r["marsupial.r_g"] = [M](ScenarioSpec& s, const std::string& v) { M(s).r_g = number(v); };
    r["marsupial.cluster_radius"] = [M](ScenarioSpec& s, const std::string& v) { M(s).cluster_radius = number(v); };
    r["marsupial.vertical_bonus"] = [M](ScenarioSpec& s, const std::string& v) { M(s).vertical_bonus = number(v); };
    r["marsupial.covered_penalty"] = [M](ScenarioSpec& s, const std::string& v) { M(s).covered_penalty = number(v); };
    r["marsupial.aerial_gain_range"] = [M](ScenarioSpec& s, const std::string& v) { M(s).aerial_gain_range = number(v); };
    r["marsupial.samples_per_waypoint"] = [M](ScenarioSpec& s, const std::string& v) { M(s).samples_per_waypoint = integer(v); };
    r["marsupial.max_deployments"] = [M](ScenarioSpec& s, const std::string& v) { M(s).max_deployments = integer(v); };
    r["marsupial.deploy_on_branch"] = [M](ScenarioSpec& s, const std::string& v) { M(s).deploy_on_branch = boolean(v); };
    r["marsupial.branch_min_angle"] = [M](ScenarioSpec& s, const std::string& v) { M(s).branch_min_angle = number(v); };
    r["marsupial.branch_radius"] = [M](ScenarioSpec& s, const std::string& v) { M(s).branch_radius = number(v); };
    r["marsupial.branch_min_gain"] = [M](ScenarioSpec& s, const std::string& v) { M(s).branch_min_gain = number(v); };
    r["marsupial.direction"] = [M](ScenarioSpec& s, const std::string& v) {
      if (v == "up") M(s).direction = ExploreDirection::Up;
      else if (v == "down") M(s).direction = ExploreDirection::Down;
      else throw std::invalid_argument("direction must be up or down");
    };

    auto R = [](ScenarioSpec& s) -> RegistrationParams& { return s.config.registration; };
    r["registration.max_iterations"] = [R](ScenarioSpec& s, const std::string& v) { R(s).max_iterations = integer(v); };
    r["registration.epsilon_trans"] = [R](ScenarioSpec& s, const std::string& v) { R(s).epsilon_trans = number(v); };
    r["registration.epsilon_rot"] = [R](ScenarioSpec& s, const std::string& v) { R(s).epsilon_rot = number(v); };
    r["registration.corr_max_dist"] = [R](ScenarioSpec& s, const std::string& v) { R(s).corr_max_dist = number(v); };
    r["registration.residual_reject"] = [R](ScenarioSpec& s, const std::string& v) { R(s).residual_reject = number(v); };

    auto X = [](ScenarioSpec& s) -> MissionParams& { return s.config.mission; };
    r["mission.dt"] = [X](ScenarioSpec& s, const std::string& v) { X(s).dt = number(v); };
    r["mission.homing_safety"] = [X](ScenarioSpec& s, const std::string& v) { X(s).homing_safety = number(v); };
    r["mission.channel_latency"] = [X](ScenarioSpec& s, const std::string& v) { X(s).channel_latency = number(v); };
    r["mission.channel_drop"] = [X](ScenarioSpec& s, const std::string& v) { X(s).channel_drop = number(v); };
    r["mission.retry_interval"] = [X](ScenarioSpec& s, const std::string& v) { X(s).retry_interval = number(v); };
    r["mission.odometry_sigma"] = [X](ScenarioSpec& s, const std::string& v) { X(s).odometry_sigma = number(v); };
    r["mission.coloc_retries"] = [X](ScenarioSpec& s, const std::string& v) { X(s).coloc_retries = integer(v); };
    r["mission.cap_factor"] = [X](ScenarioSpec& s, const std::string& v) { X(s).cap_factor = number(v); };
    r["mission.comm_range"] = [X](ScenarioSpec& s, const std::string& v) { X(s).comm_range = number(v); };
    r["mission.block_edge"] = [X](ScenarioSpec& s, const std::string& v) { X(s).block_edge = number(v); };
    r["mission.coverage_target"] = [X](ScenarioSpec& s, const std::string& v) { X(s).coverage_target = number(v); };
    r["mission.extrinsics"] = [X](ScenarioSpec& s, const std::string& v) { X(s).extrinsics = pose4(v); };
    r["mission.policy"] = [X](ScenarioSpec& s, const std::string& v) { X(s).policy = parse_policy(v); };
    r["mission.roi"] = [X](ScenarioSpec& s, const std::string& v) { X(s).roi = box6(v); };

    r["world.start"] = [](ScenarioSpec& s, const std::string& v) { s.start_pose = pose4(v); };
    r["world.bbox"] = [](ScenarioSpec& s, const std::string& v) { s.global_bbox = box6(v); };
    return r;
  }();
  return reg;
}

struct WorldDirective {
  int line;
  std::string key;
  std::string value;
};

VoxelState parse_state(const std::string& s) {
  if (s == "occupied" || s == "#") return VoxelState::Occupied;
  if (s == "free" || s == ".") return VoxelState::Free;
  throw std::invalid_argument("state must be occupied or free, got '" + s + "'");
}

void fill_box(VoxelGrid& g, const Aabb& box, VoxelState s) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Index3 idx = g.unlinear(i);
    if (box.contains(g.center(idx))) g.set(idx, s);
  }
}

void fill_ramp(VoxelGrid& g, const std::vector<double>& n, char axis) {
  const Aabb rect{Vec3(std::min(n[0], n[2]), std::min(n[1], n[3]), -1e300),
                  Vec3(std::max(n[0], n[2]), std::max(n[1], n[3]), 1e300)};
  const int a = axis == 'x' ? 0 : 1;
  const double lo = rect.min[a], hi = rect.max[a];
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Index3 idx = g.unlinear(i);
    const Vec3 c = g.center(idx);
    if (!rect.contains(c)) continue;
    const double t = hi > lo ? (c[a] - lo) / (hi - lo) : 0.0;
    const double top = n[4] + t * (n[5] - n[4]);
    if (c.z() <= top) g.set(idx, VoxelState::Occupied);
  }
}

VoxelGrid build_world(const std::vector<WorldDirective>& dirs,
                      const std::vector<std::pair<int, std::vector<std::string>>>& layers) {
  double resolution = 0.25;
  Vec3 size(10, 10, 3), origin = Vec3::Zero();
  bool shell = false;
  VoxelState fill = VoxelState::Free;
  for (const auto& d : dirs) {
    try {
      if (d.key == "resolution") resolution = number(d.value);
      else if (d.key == "size") size = vec3(d.value);
      else if (d.key == "origin") origin = vec3(d.value);
      else if (d.key == "shell") shell = boolean(d.value);
      else if (d.key == "fill") fill = parse_state(d.value);
    } catch (const std::exception& e) {
      throw ParseError(d.line, "world." + d.key, e.what());
    }
  }
  if (!(resolution > 0)) throw ValidationError("world resolution must be > 0");

  Index3 dims;
  if (!layers.empty()) {
    const auto& first = layers.front().second;
    dims = {static_cast<int>(first.empty() ? 0 : first.front().size()), static_cast<int>(first.size()),
            static_cast<int>(layers.size())};
    for (const auto& [line, rows] : layers) {
      if (static_cast<int>(rows.size()) != dims.y)
        throw ParseError(line, "world.layer", "all layers must have the same number of rows");
      for (const auto& row : rows)
        if (static_cast<int>(row.size()) != dims.x)
          throw ParseError(line, "world.layer", "all rows must have the same length");
    }
  } else {
    for (int a = 0; a < 3; ++a) dims[a] = static_cast<int>(std::llround(size[a] / resolution));
  }
  if (dims.x <= 0 || dims.y <= 0 || dims.z <= 0) throw ValidationError("world dims must be strictly positive");

  VoxelGrid g(origin, resolution, dims, fill);
  for (std::size_t z = 0; z < layers.size(); ++z) {
    const auto& [line, rows] = layers[z];
    for (int y = 0; y < dims.y; ++y)
      for (int x = 0; x < dims.x; ++x) {
        const char c = rows[y][x];
        if (c != '#' && c != '.') throw ParseError(line, "world.layer", fmt::format("bad cell character '{}'", c));
        g.set(Index3{x, y, static_cast<int>(z)}, c == '#' ? VoxelState::Occupied : VoxelState::Free);
      }
  }
  for (const auto& d : dirs) {
    try {
      if (d.key == "box") {
        std::istringstream in(d.value);
        std::string nums, tok;
        std::vector<std::string> toks;
        while (in >> tok) toks.push_back(tok);
        if (toks.size() != 6 && toks.size() != 7) throw std::invalid_argument("box needs 6 numbers and an optional state");
        for (int t = 0; t < 6; ++t) nums += toks[t] + " ";
        fill_box(g, box6(nums), toks.size() == 7 ? parse_state(toks[6]) : VoxelState::Occupied);
      } else if (d.key == "ramp") {
        std::istringstream in(d.value);
        std::vector<std::string> toks;
        std::string tok;
        while (in >> tok) toks.push_back(tok);
        if (toks.size() != 7 || (toks[6] != "x" && toks[6] != "y"))
          throw std::invalid_argument("ramp needs x0 y0 x1 y1 z0 z1 and axis x|y");
        std::string nums;
        for (int t = 0; t < 6; ++t) nums += toks[t] + " ";
        fill_ramp(g, numbers(nums, 6), toks[6][0]);
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(d.line, "world." + d.key, e.what());
    }
  }
  if (shell) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Index3 idx = g.unlinear(i);
      if (idx.x == 0 || idx.y == 0 || idx.z == 0 || idx.x == dims.x - 1 || idx.y == dims.y - 1 ||
          idx.z == dims.z - 1)
        g.set(idx, VoxelState::Occupied);
    }
  }
  return g;
}

}  // namespace

void apply_setting(ScenarioSpec& spec, const std::string& key, const std::string& value) {
  const auto& reg = registry();
  const auto it = reg.find(key);
  if (it == reg.end()) throw std::invalid_argument("unknown setting '" + key + "'");
  it->second(spec, trim(value));
}

void validate_scenario(const ScenarioSpec& spec) {
  try {
    spec.ground.validate();
    spec.aerial.validate();
    spec.config.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  if (spec.ground.kind != RobotKind::Ground || spec.aerial.kind != RobotKind::Aerial)
    throw ValidationError("robot kinds must be ground and aerial");
  if (!spec.global_bbox.valid()) throw ValidationError("global bbox is inverted");
  if (!spec.world.contains(spec.start_pose.position))
    throw ValidationError("start_pose lies outside the world");
  if (spec.world.at(spec.start_pose.position) != VoxelState::Free)
    throw ValidationError("start_pose must lie in free space");
  if (!can_occupy(spec.world, spec.start_pose, spec.ground))
    throw ValidationError("start_pose is not ground-traversable");
  if (spec.world.count(VoxelState::Unknown) != 0)
    throw ValidationError("ground-truth world contains unknown cells");
}

ScenarioSpec load_scenario(const std::string& text) {
  ScenarioSpec spec;
  std::vector<WorldDirective> world_dirs;
  std::vector<std::pair<int, std::vector<std::string>>> layers;
  std::vector<std::pair<int, std::pair<std::string, std::string>>> settings;
  bool have_start = false, have_bbox = false;

  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  bool in_layer = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (in_layer) {
      if (!line.empty() && line.find_first_not_of("#.") == std::string::npos) {
        layers.back().second.push_back(line);
        continue;
      }
      in_layer = false;
    }
    if (const auto hash = line.find('#'); hash != std::string::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, line, "unterminated section header");
      section = line.substr(1, line.size() - 2);
      if (section != "world" && section != "robots" && section != "config")
        throw ParseError(line_no, section, "unknown section");
      continue;
    }
    if (section.empty()) throw ParseError(line_no, line, "content outside a section");
    if (section == "world" && line == "layer") {
      layers.push_back({line_no, {}});
      in_layer = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, line, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section == "world") {
      static const std::vector<std::string> world_keys = {"resolution", "size", "origin", "fill", "shell", "box", "ramp"};
      if (key == "name") {
        spec.name = value;
      } else if (key == "start" || key == "bbox") {
        settings.push_back({line_no, {"world." + key, value}});
        (key == "start" ? have_start : have_bbox) = true;
      } else if (std::find(world_keys.begin(), world_keys.end(), key) != world_keys.end()) {
        world_dirs.push_back({line_no, key, value});
      } else {
        throw ParseError(line_no, "world." + key, "unknown world key");
      }
    } else if (section == "robots") {
      settings.push_back({line_no, {"robots." + key, value}});
    } else {
      settings.push_back({line_no, {key, value}});
    }
  }

  spec.world = build_world(world_dirs, layers);
  spec.global_bbox = spec.world.bounds();
  for (const auto& [ln, kv] : settings) {
    try {
      apply_setting(spec, kv.first, kv.second);
    } catch (const std::invalid_argument& e) {
      throw ParseError(ln, kv.first, e.what());
    }
  }
  if (!have_start) throw ParseError(line_no, "world.start", "missing start pose");
  (void)have_bbox;
  validate_scenario(spec);
  return spec;
}

ScenarioSpec load_scenario_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  auto spec = load_scenario(ss.str());
  if (spec.name.empty()) {
    auto base = path.substr(path.find_last_of('/') + 1);
    spec.name = base.substr(0, base.find('.'));
  }
  return spec;
}

}  // namespace marsupial
