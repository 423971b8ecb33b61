// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "incsplat/gaussians.hpp"
#include "incsplat/ply.hpp"
#include "incsplat/testkit.hpp"
#include "oracles.hpp"

using namespace incsplat;

namespace {

GaussianSet random_gaussians(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-5.0f, 5.0f), p(0.01f, 1.0f);
  std::normal_distribution<double> q(0, 1);
  GaussianSet g;
  for (std::size_t i = 0; i < n; ++i) {
    double qv[4], norm = 0;
    for (double& v : qv) v = q(rng), norm += v * v;
    norm = std::sqrt(norm);
    g.push_back({u(rng), u(rng), u(rng)}, p(rng),
                {static_cast<float>(qv[0] / norm), static_cast<float>(qv[1] / norm), static_cast<float>(qv[2] / norm),
                 static_cast<float>(qv[3] / norm)},
                p(rng), {p(rng), p(rng), p(rng)}, static_cast<std::int32_t>(rng() % 1000));
  }
  return g;
}

LocalGaussians decode_view(const testkit::GroundTruthView& view, const Pose& pose, const Intrinsics& k, int step) {
  return decode_gaussians(view.image, view.depth, Raster<float>(k.width, k.height, 1, 1.0f), pose, k, step);
}

}  // namespace

TEST(Decode, SinglePixelExample) {
  const Intrinsics k{100, 100, 0.5, 0.5, 1, 1};
  const ImageRGB img(1, 1, 0.25f);
  const auto local = decode_gaussians(img, DepthMap(1, 1, 2.0f), Raster<float>(1, 1, 1, 0.0f), Pose::identity(), k, 3);
  ASSERT_EQ(local.size(), 1u);
  const auto& g = local.gaussians;
  EXPECT_FLOAT_EQ(g.scale[0], 0.02f);
  EXPECT_FLOAT_EQ(g.center[0][0], 0.0f);
  EXPECT_FLOAT_EQ(g.center[0][2], 2.0f);
  EXPECT_FLOAT_EQ(g.opacity[0], 0.1f);
  EXPECT_EQ(g.rotation[0], (Quat{1, 0, 0, 0}));
  EXPECT_EQ(g.color[0], (Float3{0.25f, 0.25f, 0.25f}));
  EXPECT_EQ(g.source_step[0], 3);
  EXPECT_EQ(g.check(), "");
}

TEST(Decode, OpacityClampsAtBothEnds) {
  const Intrinsics k{10, 10, 1.5, 0.5, 3, 1};
  Raster<float> conf(3, 1, 1);
  conf.data() = {0.0f, 0.5f, 1.0f};
  const auto local = decode_gaussians(ImageRGB(3, 1), DepthMap(3, 1, 1.0f), conf, Pose::identity(), k, 0);
  EXPECT_FLOAT_EQ(local.gaussians.opacity[0], 0.1f);
  EXPECT_FLOAT_EQ(local.gaussians.opacity[1], 0.5f);
  EXPECT_FLOAT_EQ(local.gaussians.opacity[2], 0.95f);
}

TEST(Decode, CentersReprojectToPixelCenters) {
  std::mt19937_64 rng(1);
  const Intrinsics k = testkit::default_intrinsics(32, 70.0);
  std::uniform_real_distribution<float> ud(0.2f, 30.0f);
  DepthMap d(32, 32);
  for (auto& v : d.data()) v = ud(rng);
  const Pose pose = oracle::random_pose(rng);
  const auto local = decode_gaussians(ImageRGB(32, 32), d, Raster<float>(32, 32, 1, 0.5f), pose, k, 1);
  ASSERT_EQ(local.size(), 1024u);
  for (std::size_t i = 0; i < local.size(); ++i) {
    const auto& c = local.gaussians.center[i];
    const auto p = project_point(pose, k, Vec3(c[0], c[1], c[2]));
    ASSERT_TRUE(p.has_value());
    EXPECT_NEAR(p->u, local.pixel_x[i] + 0.5, 1e-4);
    EXPECT_NEAR(p->v, local.pixel_y[i] + 0.5, 1e-4);
    EXPECT_NEAR(p->depth, local.depth[i], 1e-5 * local.depth[i]);
  }
}

TEST(Decode, SentinelDepthIsError) {
  DepthMap d(2, 2, 1.0f);
  d.at(0, 1) = DepthMap::kUnknown;
  const Intrinsics k{2, 2, 1, 1, 2, 2};
  EXPECT_THROW(decode_gaussians(ImageRGB(2, 2), d, Raster<float>(2, 2, 1), Pose::identity(), k, 0), IncompleteDepthError);
  Mask only(2, 2, true);
  only.set(0, 1, false);
  EXPECT_EQ(decode_gaussians(ImageRGB(2, 2), d, Raster<float>(2, 2, 1), Pose::identity(), k, 0, {}, &only).size(), 3u);
  EXPECT_THROW(decode_gaussians(ImageRGB(3, 2), d, Raster<float>(2, 2, 1), Pose::identity(), k, 0), SizeError);
}

TEST(Fusion, EmptyGlobalTakesAllLocals) {
  const Intrinsics k{8, 8, 4, 4, 8, 8};
  const auto local = decode_gaussians(ImageRGB(8, 8), DepthMap(8, 8, 2.0f), Raster<float>(8, 8, 1), Pose::identity(), k, 0);
  const GaussianSet out = fuse_incremental(GaussianSet{}, local, Pose::identity(), k, 0.05);
  EXPECT_EQ(out, local.gaussians);
}

TEST(Fusion, ToleranceArithmeticExample) {
  const Intrinsics k{10, 10, 5, 5, 10, 10};
  const Vec3 at = unproject_pixel(Pose::identity(), k, 5.5, 5.5, 2.05);
  GaussianSet global;
  global.push_back({float(at.x()), float(at.y()), float(at.z())}, 0.1f, {1, 0, 0, 0}, 0.5f, {0, 0, 0}, 0);
  LocalGaussians local;
  local.gaussians.push_back({0, 0, 2}, 0.1f, {1, 0, 0, 0}, 0.5f, {1, 1, 1}, 1);
  local.pixel_x = {5};
  local.pixel_y = {5};
  local.depth = {2.0f};
  EXPECT_EQ(fuse_incremental(global, local, Pose::identity(), k, 0.05).size(), 1u);
  // Just outside the tolerance band the local survives.
  local.depth = {1.9f};
  EXPECT_EQ(fuse_incremental(global, local, Pose::identity(), k, 0.05).size(), 2u);
  local.pixel_x = {6};
  local.depth = {2.0f};
  EXPECT_EQ(fuse_incremental(global, local, Pose::identity(), k, 0.05).size(), 2u);
}

TEST(Fusion, MatchesDoubleLoopOracle) {
  std::mt19937_64 rng(2);
  const Intrinsics k{12, 12, 8, 8, 16, 16};
  const auto scene = testkit::build_synthetic_scene(5, testkit::SceneKind::room);
  for (int trial = 0; trial < 10; ++trial) {
    const Pose a = Pose::from_yaw_pitch(0.3 * trial, 0.0);
    const Pose b = Pose::from_yaw_pitch(0.3 * trial + 0.2, 0.05 * trial);
    // 16x16 views give 256 locals; the global holds another 256.
    GaussianSet global = decode_view(testkit::render_ground_truth(scene, a, k), a, k, 0).gaussians;
    const auto local = decode_view(testkit::render_ground_truth(scene, b, k), b, k, 1);
    for (const double delta : {0.0, 0.01, 0.05, 0.2}) {
      const GaussianSet ref = oracle::fuse(global, local, b, k, delta);
      EXPECT_EQ(fuse_incremental(global, local, b, k, delta), ref);
    }
  }
  // Random locals against random globals, including points behind the camera.
  for (int trial = 0; trial < 10; ++trial) {
    const GaussianSet global = random_gaussians(250, 100 + trial);
    LocalGaussians local;
    local.gaussians = random_gaussians(250, 200 + trial);
    std::uniform_int_distribution<int> px(0, 15);
    std::uniform_real_distribution<float> d(0.5f, 6.0f);
    for (std::size_t i = 0; i < 250; ++i) {
      local.pixel_x.push_back(px(rng));
      local.pixel_y.push_back(px(rng));
      local.depth.push_back(d(rng));
    }
    const Pose pose = oracle::random_pose(rng, 0.5, 0.5);
    EXPECT_EQ(fuse_incremental(global, local, pose, k, 0.3), oracle::fuse(global, local, pose, k, 0.3));
  }
}

TEST(Fusion, IdempotentAndDeltaZeroAddsAll) {
  const Intrinsics k = testkit::default_intrinsics(64);
  const auto scene = testkit::build_synthetic_scene(3, testkit::SceneKind::room);
  const Pose pose = Pose::from_yaw_pitch(0.4, 0.1);
  const auto view = testkit::render_ground_truth(scene, pose, k);
  GaussianSet global;
  const auto local = decode_view(view, pose, k, 0);
  EXPECT_EQ(fuse_into(global, local, pose, k, 0.05), 4096u);
  const GaussianSet before = global;
  EXPECT_EQ(fuse_into(global, local, pose, k, 0.05), 0u);
  EXPECT_EQ(global, before);
  EXPECT_EQ(fuse_into(global, local, pose, k, 0.0), 4096u);
  EXPECT_EQ(global.size(), 8192u);
}

TEST(Fusion, NeverMutatesGlobalsAndThreadIndependent) {
  const Intrinsics k = testkit::default_intrinsics(32);
  const auto scene = testkit::build_synthetic_scene(4, testkit::SceneKind::room);
  const Pose a = Pose::identity(), b = Pose::from_yaw_pitch(0.3, 0.0);
  const GaussianSet global = decode_view(testkit::render_ground_truth(scene, a, k), a, k, 0).gaussians;
  const auto local = decode_view(testkit::render_ground_truth(scene, b, k), b, k, 1);
  const GaussianSet one = fuse_incremental(global, local, b, k, 0.05, 1);
  const GaussianSet four = fuse_incremental(global, local, b, k, 0.05, 4);
  EXPECT_EQ(one, four);
  ASSERT_GE(one.size(), global.size());
  EXPECT_LE(one.size() - global.size(), 1024u);
  for (std::size_t i = 0; i < global.size(); ++i) EXPECT_EQ(one.center[i], global.center[i]);
}

TEST(Fusion, LocalPixelOutsideImageIsSizeError) {
  LocalGaussians local;
  local.gaussians.push_back({0, 0, 1}, 0.1f, {1, 0, 0, 0}, 0.5f, {0, 0, 0}, 0);
  local.pixel_x = {9};
  local.pixel_y = {0};
  local.depth = {1.0f};
  EXPECT_THROW(fuse_incremental(GaussianSet{}, local, Pose::identity(), Intrinsics{4, 4, 2, 2, 4, 4}, 0.05), SizeError);
}

TEST(Ply, RoundTripsBitExact) {
  for (const std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{10000}}) {
    const GaussianSet g = random_gaussians(n, n + 1);
    const Bytes bytes = encode_ply(g);
    const GaussianSet back = decode_ply(bytes);
    EXPECT_EQ(back, g);
    EXPECT_EQ(encode_ply(back), bytes);
  }
}

TEST(Ply, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "incsplat_ply_test.ply";
  const GaussianSet g = random_gaussians(17, 9);
  save_ply(path, g);
  EXPECT_EQ(load_ply(path), g);
  std::filesystem::remove(path);
}

TEST(Ply, MissingPropertyNamesIt) {
  std::string text = "ply\nformat binary_little_endian 1.0\nelement vertex 0\nproperty float x\nproperty float y\n"
                     "property float z\nproperty float scale\nproperty float qw\nproperty float qx\nproperty float qy\n"
                     "property float qz\nproperty float red\nproperty float green\nproperty float blue\n"
                     "property int source_step\nend_header\n";
  try {
    decode_ply(Bytes(text.begin(), text.end()));
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.component(), "opacity");
  }
}

TEST(Ply, AcceptsReorderedAndWiderTypes) {
  // double x first and an extra uchar property the reader must skip.
  std::string header = "ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty uchar pad\n"
                       "property double x\nproperty float y\nproperty float z\nproperty float scale\nproperty float qw\n"
                       "property float qx\nproperty float qy\nproperty float qz\nproperty float opacity\n"
                       "property float red\nproperty float green\nproperty float blue\nproperty short source_step\n"
                       "end_header\n";
  Bytes b(header.begin(), header.end());
  b.push_back(7);
  const auto put = [&b](auto v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    b.insert(b.end(), p, p + sizeof(v));
  };
  put(1.5);
  for (float v : {2.0f, 3.0f, 0.1f, 1.0f, 0.0f, 0.0f, 0.0f, 0.5f, 0.2f, 0.3f, 0.4f}) put(v);
  put(std::int16_t{-2});
  const GaussianSet g = decode_ply(b);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g.center[0], (Float3{1.5f, 2.0f, 3.0f}));
  EXPECT_EQ(g.source_step[0], -2);
  EXPECT_FLOAT_EQ(g.color[0][2], 0.4f);
}

TEST(Ply, MalformedInputIsParseError) {
  const Bytes good = encode_ply(random_gaussians(3, 4));
  EXPECT_THROW(decode_ply(Bytes(good.begin(), good.end() - 1)), ParseError);
  std::string ascii = "ply\nformat ascii 1.0\nend_header\n";
  EXPECT_THROW(decode_ply(Bytes(ascii.begin(), ascii.end())), ParseError);
  EXPECT_THROW(decode_ply(Bytes{'x'}), ParseError);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    Bytes b = good;
    b[rng() % 200] = static_cast<std::uint8_t>(rng());
    try {
      decode_ply(b);
    } catch (const Error&) {
    }
  }
}

TEST(GaussianSet, CheckReportsViolations) {
  GaussianSet g = random_gaussians(3, 6);
  EXPECT_EQ(g.check(), "");
  g.opacity[1] = 0.0f;
  EXPECT_NE(g.check(), "");
  g = random_gaussians(3, 6);
  g.rotation[2] = {1, 1, 0, 0};
  EXPECT_NE(g.check(), "");
  g = random_gaussians(3, 6);
  g.scale.pop_back();
  EXPECT_EQ(g.check(), "array lengths differ");
}
