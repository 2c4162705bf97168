#include "marsupial/traversability.hpp"

#include <gtest/gtest.h>

using namespace marsupial;

namespace {

// Floor slab one voxel thick at z in [0, 0.1), free above. A raised block of
// height `step` covers x >= 2.
VoxelGrid step_world(double step, double res = 0.1) {
  VoxelGrid w(Vec3::Zero(), res, Index3{40, 20, 25}, VoxelState::Free);
  const int top = static_cast<int>(std::lround(step / res));
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 40; ++x) {
      w.set(Index3{x, y, 0}, VoxelState::Occupied);
      if (x >= 20)
        for (int z = 1; z <= top; ++z) w.set(Index3{x, y, z}, VoxelState::Occupied);
    }
  return w;
}

Pose on_floor(double x, double support, const RobotSpec& r) { return Pose(x, 1.0, support + r.sensor_height, 0.0); }

}  // namespace

TEST(Traversability, SupportHeightIsTopFace) {
  const RobotSpec r = RobotSpec::ground();
  const VoxelGrid w = step_world(0.2);
  const auto low = support_height(w, Vec3(1.0, 1.0, 0.75), r);
  const auto high = support_height(w, Vec3(3.0, 1.0, 0.75), r);
  ASSERT_TRUE(low && high);
  EXPECT_NEAR(*low, 0.1, 1e-12);
  EXPECT_NEAR(*high, 0.3, 1e-12);
  // Too far above anything.
  EXPECT_FALSE(support_height(w, Vec3(1.0, 1.0, 2.45), r));
}

TEST(Traversability, StepAdmissionIsExactlyTheThreshold) {
  RobotSpec r = RobotSpec::ground();
  for (int k = 0; k <= 5; ++k) {
    const double step = 0.1 * k;
    const VoxelGrid w = step_world(step);
    for (double limit : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}) {
      r.max_step_height = limit;
      const bool ok = traversable(w, on_floor(1.0, 0.1, r), on_floor(3.0, 0.1 + step, r), r);
      EXPECT_EQ(ok, step <= limit + 1e-9) << "step " << step << " limit " << limit;
    }
  }
}

TEST(Traversability, MonotoneInStepHeight) {
  RobotSpec r = RobotSpec::ground();
  const VoxelGrid w = step_world(0.3);
  bool seen = false;
  for (int i = 0; i <= 10; ++i) {
    r.max_step_height = 0.05 * i;
    const bool ok = traversable(w, on_floor(1.0, 0.1, r), on_floor(3.0, 0.4, r), r);
    if (seen) EXPECT_TRUE(ok);
    seen = seen || ok;
  }
  EXPECT_TRUE(seen);
}

TEST(Traversability, MeterLedgeBlocksGroundNotAerial) {
  const VoxelGrid w = step_world(1.0);
  const RobotSpec g = RobotSpec::ground();
  EXPECT_FALSE(traversable(w, on_floor(1.0, 0.1, g), on_floor(3.0, 1.1, g), g));
  const RobotSpec a = RobotSpec::aerial();
  EXPECT_TRUE(traversable(w, Pose(1.0, 1.0, 1.6, 0.0), Pose(3.0, 1.0, 1.6, 0.0), a));
  EXPECT_FALSE(traversable(w, Pose(1.0, 1.0, 0.6, 0.0), Pose(3.0, 1.0, 0.6, 0.0), a));
}

TEST(Traversability, UnknownBlocksWhenConfigured) {
  VoxelGrid w = step_world(0.0);
  w.set(w.index_of(Vec3(1.5, 1.0, 0.65)), VoxelState::Unknown);
  RobotSpec g = RobotSpec::ground();
  EXPECT_FALSE(traversable(w, on_floor(1.0, 0.1, g), on_floor(2.0, 0.1, g), g));
  g.unknown_is_obstacle = false;
  EXPECT_TRUE(traversable(w, on_floor(1.0, 0.1, g), on_floor(2.0, 0.1, g), g));
}

TEST(Traversability, AerialClearanceRadius) {
  VoxelGrid w(Vec3::Zero(), 0.1, Index3{30, 30, 30}, VoxelState::Free);
  w.set(Index3{15, 15, 15}, VoxelState::Occupied);
  RobotSpec a = RobotSpec::aerial();
  a.collision_radius = 0.2;
  // Voxel box spans [1.5, 1.6]; a pose at y = 1.85 clears it by 0.25.
  EXPECT_TRUE(can_occupy(w, Pose(1.55, 1.85, 1.55, 0.0), a));
  EXPECT_FALSE(can_occupy(w, Pose(1.55, 1.75, 1.55, 0.0), a));
  EXPECT_FALSE(can_occupy(w, Pose(-1.0, 1.0, 1.0, 0.0), a));
}
