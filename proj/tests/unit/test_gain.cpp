#include "marsupial/gain.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace marsupial;

namespace {

VoxelGrid random_map(Rng& rng, Index3 dims, double res, double p_occ, double p_free) {
  VoxelGrid m(Vec3(0.5, -1.0, 0.0), res, dims);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double u = rng.uniform();
    if (u < p_occ)
      m.set(m.unlinear(i), VoxelState::Occupied);
    else if (u < p_occ + p_free)
      m.set(m.unlinear(i), VoxelState::Free);
  }
  return m;
}

}  // namespace

TEST(Gain, LineOfSightMatchesRationalOracle) {
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const VoxelGrid m = random_map(rng, Index3{7, 6, 5}, 1.0, 0.2, 0.4);
    const Index3 from{static_cast<int>(rng.below(7)), static_cast<int>(rng.below(6)), static_cast<int>(rng.below(5))};
    for (std::size_t i = 0; i < m.size(); ++i) {
      const Index3 to = m.unlinear(i);
      EXPECT_EQ(line_of_sight(m, from, to), oracle::visible(m, from, to) || from == to);
    }
  }
}

TEST(Gain, GrazingCornersDoNotBlock) {
  VoxelGrid m(Vec3::Zero(), 1.0, Index3{3, 3, 1}, VoxelState::Free);
  m.set(Index3{1, 0, 0}, VoxelState::Occupied);
  m.set(Index3{0, 1, 0}, VoxelState::Occupied);
  // The diagonal from (0,0) to (2,2) passes through the shared corner only.
  EXPECT_TRUE(line_of_sight(m, Index3{0, 0, 0}, Index3{2, 2, 0}));
  m.set(Index3{1, 1, 0}, VoxelState::Occupied);
  EXPECT_FALSE(line_of_sight(m, Index3{0, 0, 0}, Index3{2, 2, 0}));
  // The target itself never blocks.
  EXPECT_TRUE(line_of_sight(m, Index3{0, 0, 0}, Index3{1, 0, 0}));
}

TEST(Gain, ViewConeMatchesAcosOracle) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    SensorSpec s{rng.uniform(10.0, 360.0), rng.uniform(5.0, 120.0), rng.uniform(1.0, 6.0), 1, 1};
    s.tilt = rng.uniform(-1.0, 1.0) * (90.0 - 0.5 * s.fov_v);
    if (rng.below(4) == 0) s.fov_h = 360.0;
    const double yaw = rng.uniform(-3.1, 3.1);
    for (int k = 0; k < 200; ++k) {
      const Index3 off{static_cast<int>(rng.below(13)) - 6, static_cast<int>(rng.below(13)) - 6,
                       static_cast<int>(rng.below(13)) - 6};
      if (off == Index3{0, 0, 0}) continue;
      EXPECT_EQ(in_view_cone(off, 0.5, yaw, s), oracle::in_cone(off, 0.5, yaw, s));
    }
  }
}

TEST(Gain, EvaluateMatchesExhaustiveCount) {
  Rng rng(13);
  for (int trial = 0; trial < 12; ++trial) {
    const VoxelGrid m = random_map(rng, Index3{12, 11, 8}, 0.4, 0.08, 0.3);
    SensorSpec s{trial % 2 ? 360.0 : 140.0, trial % 3 ? 60.0 : 180.0, 2.6, 1, 1};
    if (trial % 4 == 1) s.tilt = -20.0;
    const Pose p(m.origin() + Vec3(rng.uniform(0.5, 4.3), rng.uniform(0.5, 3.9), rng.uniform(0.5, 2.7)),
                 rng.uniform(-3.0, 3.0));
    const VolumetricGain g = evaluate_gain(m, p, s);
    EXPECT_EQ(g.unknown_voxels, oracle::gain_count(m, p, s));
    EXPECT_DOUBLE_EQ(g.volume, g.unknown_voxels * 0.4 * 0.4 * 0.4);
  }
}

TEST(Gain, OutsideMapThrows) {
  VoxelGrid m(Vec3::Zero(), 1.0, Index3{2, 2, 2});
  EXPECT_THROW(evaluate_gain(m, Pose(5, 5, 5, 0), SensorSpec{}), std::out_of_range);
}

TEST(Gain, KnownMapHasZeroGain) {
  VoxelGrid m(Vec3::Zero(), 0.5, Index3{10, 10, 10}, VoxelState::Free);
  EXPECT_EQ(evaluate_gain(m, Pose(2.5, 2.5, 2.5, 0), SensorSpec{}).unknown_voxels, 0);
}

TEST(Gain, RefreshRecomputesOnlyAfterNearbyWrites) {
  VoxelGrid m(Vec3::Zero(), 0.5, Index3{64, 16, 8});
  const SensorSpec s{360.0, 90.0, 2.0, 1, 1};
  Vertex v;
  v.pose = Pose(2.0, 4.0, 2.0, 0.0);
  EXPECT_TRUE(refresh_gain(m, v, s));
  const auto first = v.gain;
  EXPECT_FALSE(refresh_gain(m, v, s));
  m.set(Index3{60, 2, 2}, VoxelState::Free);  // far away
  EXPECT_FALSE(refresh_gain(m, v, s));
  EXPECT_EQ(v.gain, first);
  m.set(Index3{5, 8, 4}, VoxelState::Free);
  EXPECT_TRUE(refresh_gain(m, v, s));
  EXPECT_EQ(v.gain.unknown_voxels, first.unknown_voxels - 1);
  EXPECT_EQ(v.gain, evaluate_gain(m, v.pose, s));
}
