// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <numbers>

#include "incsplat/codecs.hpp"
#include "incsplat/testkit.hpp"

using namespace incsplat;
using namespace incsplat::testkit;

TEST(Testkit, SameSeedSameScene) {
  for (const auto kind : {SceneKind::room, SceneKind::corridor, SceneKind::plane_field}) {
    const auto a = render_ground_truth(build_synthetic_scene(9, kind), Pose::identity(), default_intrinsics(32));
    const auto b = render_ground_truth(build_synthetic_scene(9, kind), Pose::identity(), default_intrinsics(32));
    EXPECT_EQ(encode_png(a.image), encode_png(b.image)) << to_string(kind);
    EXPECT_EQ(a.depth, b.depth);
  }
}

TEST(Testkit, DistinctSeedsDiffer) {
  const auto k = default_intrinsics(32);
  const auto a = render_ground_truth(build_synthetic_scene(1, SceneKind::room), Pose::identity(), k);
  const auto b = render_ground_truth(build_synthetic_scene(2, SceneKind::room), Pose::identity(), k);
  EXPECT_NE(encode_png(a.image), encode_png(b.image));
}

TEST(Testkit, RoomHasFloorCeilingAndWalls) {
  const auto room = build_synthetic_scene(3, SceneKind::room);
  EXPECT_GE(room.rects.size(), 5u);
  // Every panorama direction from the center hits a surface.
  for (const Pose& p : standard_trajectory(TrajectoryKind::panorama, 8)) {
    const auto v = render_ground_truth(room, p, default_intrinsics(16));
    EXPECT_EQ(v.surface.count(), 256u);
  }
}

TEST(Testkit, FrontoParallelPlaneDepthIsExact) {
  SyntheticScene s;
  s.rects.push_back(facing_plane(2.0, 10.0, 10.0, Texture{}));
  const auto v = render_ground_truth(s, Pose::identity(), default_intrinsics(32));
  for (float d : v.depth.data()) EXPECT_FLOAT_EQ(d, 2.0f);
  EXPECT_EQ(v.surface.count(), 1024u);
}

TEST(Testkit, CheckerAlternatesAtAnalyticPeriod) {
  Texture tex;
  tex.checkers.push_back({0.25, {0.2, 0.2, 0.2}});
  for (int i = 0; i < 8; ++i) {
    const double s = 0.25 * i + 0.125;
    const auto c = shade(tex, s, 0.1, 10, 10);
    EXPECT_NEAR(c[0], i % 2 == 0 ? 0.7 : 0.3, 1e-12);
  }
  // Image space: camera at unit distance, fx = 64, so one square spans 16 px.
  SyntheticScene scene;
  scene.rects.push_back(make_rect({0, -1, 1}, Vec3::UnitX(), Vec3::UnitY(), 2, 2, tex));
  const Intrinsics k{64, 64, 0.5, 32, 128, 64};
  const auto v = render_ground_truth(scene, Pose::identity(), k);
  for (int x = 0; x < 128; ++x) {
    const int square = x / 16;
    EXPECT_NEAR(v.image.at(x, 10, 0), (square + 4) % 2 == 0 ? 0.7 : 0.3, 1e-6) << x;
  }
}

TEST(Testkit, SpeckleIsDeterministicAndBounded) {
  const SpeckleLayer layer{0.1, {1, 1, 1}, 42};
  EXPECT_EQ(speckle_value(0.05, 0.05, layer, 0), speckle_value(0.09, 0.01, layer, 0));
  EXPECT_NE(speckle_value(0.05, 0.05, layer, 0), speckle_value(0.15, 0.05, layer, 0));
  for (int i = 0; i < 1000; ++i) {
    const double v = speckle_value(i * 0.037, i * 0.011, layer, i % 3);
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Testkit, DepthRoundTripsThroughPfm) {
  const auto v = render_ground_truth(build_synthetic_scene(4, SceneKind::corridor), Pose::identity(), default_intrinsics(32));
  EXPECT_EQ(decode_depth_pfm(encode_depth_pfm(v.depth)), v.depth);
}

TEST(Testkit, TrajectoryExamples) {
  const auto pano = standard_trajectory(TrajectoryKind::panorama, 4);
  const double yaws[] = {0, 90, 180, 270};
  for (int i = 0; i < 4; ++i) {
    const Vec3 f = pano[i].rotation * Vec3::UnitZ();
    const double yaw = std::atan2(f.x(), f.z()) * 180 / std::numbers::pi;
    EXPECT_NEAR(std::fmod(yaw + 360.0, 360.0), yaws[i], 1e-9);
  }
  const auto walk = standard_trajectory(TrajectoryKind::walk_forward, 2);
  EXPECT_NEAR((walk[1].translation - walk[0].translation).norm(), 0.2, 1e-12);
  const Vec3 center(1, 0, 2);
  for (const Pose& p : standard_trajectory(TrajectoryKind::orbit, 7, center, 1.5)) {
    EXPECT_NEAR((p.translation - center).norm(), 1.5, 1e-6);
    const Vec3 f = p.rotation * Vec3::UnitZ();
    EXPECT_NEAR(f.dot((center - p.translation).normalized()), 1.0, 1e-9);
  }
  EXPECT_THROW(standard_trajectory(TrajectoryKind::panorama, 0), Error);
}

TEST(Testkit, ParseNames) {
  EXPECT_EQ(parse_scene_kind("corridor"), SceneKind::corridor);
  EXPECT_EQ(parse_trajectory_kind("walk"), TrajectoryKind::walk_forward);
  EXPECT_THROW(parse_scene_kind("castle"), Error);
  const Intrinsics k = default_intrinsics(128, 90.0);
  EXPECT_NEAR(k.fx, 64.0, 1e-12);
  EXPECT_EQ(k.cx, 64.0);
}
