// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "incsplat/features.hpp"

using namespace incsplat;

namespace {

ImageRGB textured_patch(int size, int lo, int hi, int shift_x, std::uint64_t seed) {
  ImageRGB img(size, size, 0.5f);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int y = lo; y < hi; ++y)
    for (int x = lo; x < hi; ++x)
      for (int c = 0; c < 3; ++c) img.at(x + shift_x, y, c) = u(rng);
  return img;
}

}  // namespace

TEST(Features, OutputShapes) {
  const auto f = extract_features(ImageRGB(64, 32, 0.2f));
  EXPECT_EQ(f.matching.width(), 16);
  EXPECT_EQ(f.matching.height(), 8);
  EXPECT_EQ(f.matching.channels(), kMatchingChannels);
  EXPECT_EQ(f.image.channels(), kImageFeatureChannels);
  EXPECT_EQ(f.image.width(), 16);
}

TEST(Features, RejectsIndivisibleSize) {
  EXPECT_THROW(extract_features(ImageRGB(30, 32)), SizeError);
  EXPECT_THROW(extract_features(ImageRGB(32, 18)), SizeError);
  EXPECT_THROW(extract_features(ImageRGB(0, 0)), SizeError);
}

TEST(Features, ConstantGrayHasZeroGradients) {
  const ImageRGB gray(32, 32, 0.4f);
  const FeatureMap raw = raw_matching_channels(downscale_image(gray, 4));
  const FeatureMap f = extract_features(gray).matching;
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      EXPECT_EQ(raw.at(x, y, 1), 0.0f);
      EXPECT_EQ(raw.at(x, y, 2), 0.0f);
      EXPECT_EQ(f.at(x, y, 1), 0.0f);
      EXPECT_EQ(f.at(x, y, 2), 0.0f);
    }
  }
}

TEST(Features, HorizontalFlipNegatesRawDx) {
  const ImageRGB img = textured_patch(64, 0, 64, 0, 1);
  ImageRGB flipped(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      for (int c = 0; c < 3; ++c) flipped.at(63 - x, y, c) = img.at(x, y, c);
  const FeatureMap a = raw_matching_channels(downscale_image(img, 4));
  const FeatureMap b = raw_matching_channels(downscale_image(flipped, 4));
  const int w = a.width();
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      EXPECT_FLOAT_EQ(b.at(w - 1 - x, y, 1), -a.at(x, y, 1));
      EXPECT_FLOAT_EQ(b.at(w - 1 - x, y, 2), a.at(x, y, 2));
      EXPECT_FLOAT_EQ(b.at(w - 1 - x, y, 0), a.at(x, y, 0));
    }
  }
}

TEST(Features, Deterministic) {
  const ImageRGB img = textured_patch(64, 0, 64, 0, 2);
  const auto a = extract_features(img);
  const auto b = extract_features(img);
  EXPECT_EQ(a.matching, b.matching);
  EXPECT_EQ(a.image, b.image);
}

TEST(Features, PixelVectorsHaveUnitNorm) {
  const FeatureMap f = extract_features(textured_patch(64, 0, 64, 0, 3)).matching;
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      double n = 0;
      for (int c = 0; c < f.channels(); ++c) n += f.at(x, y, c) * f.at(x, y, c);
      EXPECT_NEAR(std::sqrt(n), 1.0, 1e-5);
    }
  }
}

TEST(Features, ConstantImageGivesZeroVectors) {
  const FeatureMap f = extract_features(ImageRGB(16, 16, 0.7f)).matching;
  for (float v : f.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Features, FourPixelShiftMovesOneFeaturePixel) {
  const ImageRGB a = textured_patch(128, 40, 88, 0, 4);
  const ImageRGB b = textured_patch(128, 40, 88, 4, 4);
  const FeatureMap fa = extract_features(a).matching;
  const FeatureMap fb = extract_features(b).matching;
  for (int y = 2; y < fa.height() - 2; ++y)
    for (int x = 2; x < fa.width() - 3; ++x)
      for (int c = 0; c < fa.channels(); ++c) ASSERT_NEAR(fb.at(x + 1, y, c), fa.at(x, y, c), 1e-6);
}

TEST(Features, ImageChannelsAreQuarterResColorAndLuma) {
  const ImageRGB img = textured_patch(16, 0, 16, 0, 5);
  const auto f = extract_features(img);
  double r = 0, g = 0, b = 0;
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i) r += img.at(4 + i, j, 0), g += img.at(4 + i, j, 1), b += img.at(4 + i, j, 2);
  EXPECT_NEAR(f.image.at(1, 0, 0), r / 16, 1e-6);
  EXPECT_NEAR(f.image.at(1, 0, 3), luma(r / 16, g / 16, b / 16), 1e-6);
}
