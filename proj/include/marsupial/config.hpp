#pragma once

#include "marsupial/geometry.hpp"
#include "marsupial/marsupial.hpp"
#include "marsupial/planner.hpp"
#include "marsupial/registration.hpp"

#include <optional>
#include <string>
#include <vector>

namespace marsupial {

/// What the ground robot does once the aerial robot is airborne.
enum class MissionPolicy { Continue, Wait, Home };

std::string to_string(MissionPolicy p);
MissionPolicy parse_policy(const std::string& s);

struct MissionParams {
  double dt{0.1};
  double homing_safety{1.25};
  double channel_latency{0.2};
  double channel_drop{0.0};
  double retry_interval{0.5};
  double odometry_sigma{0.0};  // per-step random-walk std-dev on the pose estimate (m)
  int coloc_retries{3};
  double cap_factor{4.0};  // mission cap = cap_factor * (ground + aerial endurance)
  double comm_range{3.0};  // reunion distance for the post-mission map exchange
  double block_edge{10.0};
  double coverage_target{0.95};
  Pose extrinsics;  // aerial sensor relative to ground sensor while carried
  MissionPolicy policy{MissionPolicy::Home};
  std::optional<Aabb> roi;  // extra coverage bookkeeping region

  void validate() const;
};

struct MissionConfig {
  PlannerParams ground_planner{PlannerParams::ground_defaults()};
  PlannerParams aerial_planner{PlannerParams::aerial_defaults()};
  MarsupialConfig marsupial;
  RegistrationParams registration;
  MissionParams mission;

  void validate() const;
};

}  // namespace marsupial
