#include "marsupial/scenario.hpp"

#include <gtest/gtest.h>

using namespace marsupial;

namespace {

const char* kRoom = R"(# tiny room
[world]
resolution = 0.5
size = 6 4 3
shell = true
start = 1.25 1.25 1.25 0

[config]
planner.ground.n_samples = 40
)";

int error_line(const std::string& text) {
  try {
    load_scenario(text);
  } catch (const ParseError& e) {
    return e.line;
  }
  return -1;
}

}  // namespace

TEST(Scenario, ParsesWorldAndOverrides) {
  const auto s = load_scenario(kRoom);
  EXPECT_EQ(s.world.dims(), (Index3{12, 8, 6}));
  EXPECT_EQ(s.world.at(Index3{0, 3, 3}), VoxelState::Occupied);
  EXPECT_EQ(s.world.at(Index3{5, 3, 3}), VoxelState::Free);
  EXPECT_EQ(s.config.ground_planner.n_samples, 40);
  EXPECT_EQ(s.start_pose.position, Vec3(1.25, 1.25, 1.25));
  EXPECT_EQ(s.aerial.endurance, 720.0);
  EXPECT_EQ(s.ground.endurance, 3600.0);
}

TEST(Scenario, AsciiLayers) {
  const auto s = load_scenario(R"([world]
resolution = 1
layer
####
####
layer
#..#
####
start = 1.5 0.5 1.5 0
)");
  EXPECT_EQ(s.world.dims(), (Index3{4, 2, 2}));
  EXPECT_EQ(s.world.at(Index3{1, 0, 1}), VoxelState::Free);
  EXPECT_EQ(s.world.at(Index3{1, 1, 1}), VoxelState::Occupied);
}

TEST(Scenario, ApplySetting) {
  auto s = load_scenario(kRoom);
  apply_setting(s, "robots.aerial.endurance", "10");
  EXPECT_EQ(s.aerial.endurance, 10.0);
  apply_setting(s, "mission.policy", "continue");
  EXPECT_EQ(s.config.mission.policy, MissionPolicy::Continue);
  apply_setting(s, "planner.aerial.local_bbox", "4 5 6");
  EXPECT_EQ(s.config.aerial_planner.local_bbox, Vec3(4, 5, 6));
  EXPECT_THROW(apply_setting(s, "planner.nope", "1"), std::invalid_argument);
  EXPECT_THROW(apply_setting(s, "planner.ground.n_samples", "many"), std::invalid_argument);
}

TEST(Scenario, ParseErrorsCarryLineNumbers) {
  EXPECT_EQ(error_line("[world]\nresolution = 0.5\nsize = 6 4\n"), 3);
  EXPECT_EQ(error_line("[world]\nbogus = 1\n"), 2);
  EXPECT_EQ(error_line("[nowhere]\n"), 1);
  EXPECT_EQ(error_line("resolution = 1\n"), 1);
  EXPECT_EQ(error_line(std::string(kRoom) + "planner.ground.n_samples = x\n"), 10);
  try {
    load_scenario("[world]\nbogus = 1\n");
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field, "world.bogus");
  }
}

TEST(Scenario, ValidationRejectsBadStart) {
  std::string blocked = kRoom;
  blocked.replace(blocked.find("start = 1.25 1.25 1.25"), 22, "start = 0.25 0.25 0.25");
  EXPECT_THROW(load_scenario(blocked), ValidationError);
  std::string outside = kRoom;
  outside.replace(outside.find("start = 1.25 1.25 1.25"), 22, "start = 9.25 1.25 1.25");
  EXPECT_THROW(load_scenario(outside), ValidationError);
  std::string bad_range = std::string(kRoom) + "planner.ground.n_samples = 0\n";
  EXPECT_THROW(load_scenario(bad_range), std::exception);
}

TEST(Scenario, BundledScenariosLoad) {
  for (const char* name : {"mezzanine", "blocked_corridor", "y_branch", "open_room"}) {
    const auto s = load_scenario_file(std::string(MARSUPIAL_SCENARIO_DIR) + "/" + name + ".scn");
    EXPECT_EQ(s.name, name);
    EXPECT_NO_THROW(validate_scenario(s));
  }
}
