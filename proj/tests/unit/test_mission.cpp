#include "marsupial/mission.hpp"
#include "marsupial/traversability.hpp"

#include <gtest/gtest.h>

using namespace marsupial;

namespace {

ScenarioSpec scenario(const std::string& name) {
  return load_scenario_file(std::string(MARSUPIAL_SCENARIO_DIR) + "/" + name + ".scn");
}

bool terminal_ok(const std::string& mode) { return mode == "Done" || mode == "Landed"; }

}  // namespace

TEST(Mission, DeterministicReplay) {
  const auto s = scenario("open_room");
  const auto a = Mission(s, 7).run();
  const auto b = Mission(s, 7).run();
  EXPECT_EQ(a.log, b.log);
  EXPECT_EQ(a.metrics.to_text(), b.metrics.to_text());
}

TEST(Mission, ClockAndLogOrdering) {
  const auto r = Mission(scenario("open_room"), 3).run();
  const auto& st = r.final_state;
  EXPECT_DOUBLE_EQ(st.time, st.steps * st.dt);
  for (std::size_t i = 1; i < st.event_log.size(); ++i) EXPECT_LE(st.event_log[i - 1].time, st.event_log[i].time);
  ASSERT_EQ(r.log.size(), st.event_log.size());
  for (std::size_t i = 0; i < r.log.size(); ++i) EXPECT_EQ(r.log[i], st.event_log[i].format());
  for (std::size_t i = 1; i < r.metrics.coverage_series.size(); ++i)
    EXPECT_LE(r.metrics.coverage_series[i - 1].second, r.metrics.coverage_series[i].second);
  EXPECT_EQ(r.metrics.exit_code, 0);
  EXPECT_EQ(r.metrics.outcome, "complete");
}

TEST(Mission, CarriedAerialRidesOnGround) {
  const auto s = scenario("open_room");
  Mission m(s, 2);
  int carried_steps = 0;
  while (!m.finished() && m.state().steps < 3000) {
    m.step();
    const auto& st = m.state();
    if (st.aerial.mode != AgentMode::Carried) continue;
    ++carried_steps;
    const Pose want = st.ground.pose.compose(s.config.mission.extrinsics);
    EXPECT_LT((st.aerial.pose.position - want.position).norm(), 1e-12);
    EXPECT_EQ(st.aerial.elapsed, 0.0);
  }
  EXPECT_GT(carried_steps, 0);
}

TEST(Mission, AgentsEndHomeWithinEndurance) {
  for (const auto team : {TeamConfig::GroundOnly, TeamConfig::AerialOnly, TeamConfig::Marsupial}) {
    const auto r = Mission(scenario("open_room"), 4, team).run();
    const auto& m = r.metrics;
    EXPECT_EQ(m.exit_code, 0) << to_string(team);
    if (team != TeamConfig::AerialOnly) {
      EXPECT_TRUE(terminal_ok(m.ground_mode));
      EXPECT_LT(m.ground_home_error, 0.3);
      EXPECT_LE(m.ground_elapsed, r.final_state.ground.robot.endurance);
    }
    if (team != TeamConfig::GroundOnly && m.aerial_elapsed > 0.0) {
      EXPECT_LT(m.aerial_home_error, 0.3);
      EXPECT_LE(m.aerial_elapsed, r.final_state.aerial.robot.endurance);
    }
  }
}

TEST(Mission, ShortEnduranceForcesEarlyHoming) {
  auto s = scenario("open_room");
  apply_setting(s, "robots.ground.endurance", "40");
  const auto r = Mission(s, 1, TeamConfig::GroundOnly).run();
  EXPECT_LE(r.metrics.ground_elapsed, 40.0);
  EXPECT_LT(r.metrics.ground_home_error, 0.3);
  bool homed_for_endurance = false;
  for (const auto& line : r.log)
    if (line.find("reason=endurance") != std::string::npos) homed_for_endurance = true;
  EXPECT_TRUE(homed_for_endurance);
}

TEST(Mission, CapExceededExitCode) {
  auto s = scenario("open_room");
  apply_setting(s, "mission.cap_factor", "0.001");
  const auto r = Mission(s, 1).run();
  EXPECT_EQ(r.metrics.exit_code, 3);
  EXPECT_EQ(r.metrics.outcome, "cap_exceeded");
}

TEST(Mission, CorridorBarrierIsNotGroundTraversable) {
  const auto s = scenario("blocked_corridor");
  const Pose before(13.0, 1.7, 0.9, 0.0), after(16.0, 1.7, 0.9, 0.0);
  EXPECT_FALSE(traversable(s.world, before, after, s.ground));
  EXPECT_TRUE(traversable(s.world, Pose(13.0, 1.7, 2.3, 0.0), Pose(16.0, 1.7, 2.3, 0.0), s.aerial));
}
