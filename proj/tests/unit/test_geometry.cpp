#include "marsupial/geometry.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace marsupial;

TEST(Geometry, WrapAngleRange) {
  for (double a = -20.0; a <= 20.0; a += 0.137) {
    const double w = wrap_angle(a);
    EXPECT_GT(w, -std::numbers::pi);
    EXPECT_LE(w, std::numbers::pi);
    EXPECT_NEAR(std::remainder(w - a, 2 * std::numbers::pi), 0.0, 1e-12);
  }
  EXPECT_DOUBLE_EQ(wrap_angle(-std::numbers::pi), std::numbers::pi);
}

TEST(Geometry, ComposeInverseRoundTrip) {
  const Pose a(1.0, -2.0, 0.5, 0.7), b(-0.3, 4.0, 1.0, -2.9);
  const Pose c = a.compose(b);
  const Pose back = a.inverse().compose(c);
  EXPECT_NEAR((back.position - b.position).norm(), 0.0, 1e-12);
  EXPECT_NEAR(wrap_angle(back.yaw - b.yaw), 0.0, 1e-12);
  const Vec3 p(3, 1, -2);
  EXPECT_NEAR((a.inverse_transform(a.transform(p)) - p).norm(), 0.0, 1e-12);
}
