// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>

#include "incsplat/codecs.hpp"

using namespace incsplat;

namespace {

ImageRGB random_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ImageRGB img(w, h);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

template <typename Fn>
void expect_parse_error_or_ok(Fn&& fn) {
  try {
    fn();
  } catch (const ParseError&) {
  } catch (const SchemaError&) {
  } catch (const SizeError&) {
  }
}

}  // namespace

TEST(PngCodec, BlackRoundTripsExactly) {
  const ImageRGB black(7, 5);
  EXPECT_EQ(decode_png(encode_png(black)), black);
}

TEST(PngCodec, GradientRoundTripsExactly) {
  ImageRGB img(256, 2);
  for (int x = 0; x < 256; ++x)
    for (int c = 0; c < 3; ++c) img.at(x, 0, c) = img.at(x, 1, c) = x / 255.0f;
  EXPECT_EQ(decode_png(encode_png(img)), img);
}

TEST(PngCodec, RandomRoundTripsWithinQuantization) {
  const ImageRGB img = random_image(33, 17, 1);
  const ImageRGB back = decode_png(encode_png(img));
  ASSERT_TRUE(back.same_size(img));
  for (std::size_t i = 0; i < img.data().size(); ++i) {
    const float q = std::round(img.data()[i] * 255.0f) / 255.0f;
    ASSERT_NEAR(back.data()[i], q, 1e-6);
    ASSERT_LE(std::abs(back.data()[i] - img.data()[i]), 0.5f / 255.0f + 1e-6f);
  }
}

TEST(PngCodec, ClampsOutOfRangeValues) {
  ImageRGB img(1, 1);
  img.at(0, 0, 0) = -1.0f;
  img.at(0, 0, 1) = 2.0f;
  img.at(0, 0, 2) = std::numeric_limits<float>::quiet_NaN();
  const ImageRGB back = decode_png(encode_png(img));
  EXPECT_EQ(back.at(0, 0, 0), 0.0f);
  EXPECT_EQ(back.at(0, 0, 1), 1.0f);
}

TEST(PngCodec, CorruptInputReportsOffset) {
  Bytes bytes = encode_png(random_image(8, 8, 2));
  try {
    decode_png(std::span<const std::uint8_t>(bytes.data(), 4));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
  Bytes crc = bytes;
  crc[20] ^= 0xFF;  // inside IHDR payload
  try {
    decode_png(crc);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 8u);
  }
  Bytes truncated(bytes.begin(), bytes.end() - 6);
  EXPECT_THROW(decode_png(truncated), ParseError);
}

TEST(PngCodec, FuzzedInputsNeverCrash) {
  const Bytes good = encode_png(random_image(16, 16, 3));
  std::mt19937_64 rng(4);
  for (int i = 0; i < 2000; ++i) {
    Bytes b = good;
    const int flips = 1 + static_cast<int>(rng() % 8);
    for (int k = 0; k < flips; ++k) b[rng() % b.size()] = static_cast<std::uint8_t>(rng());
    if (rng() % 4 == 0) b.resize(rng() % b.size());
    expect_parse_error_or_ok([&] { decode_png(b); });
  }
}

TEST(PfmCodec, SentinelMapRoundTrips) {
  const DepthMap d(9, 4);
  EXPECT_EQ(decode_depth_pfm(encode_depth_pfm(d)), d);
}

TEST(PfmCodec, SinglePixelBitExact) {
  DepthMap d(1, 1, 3.25f);
  const DepthMap back = decode_depth_pfm(encode_depth_pfm(d));
  EXPECT_EQ(back.at(0, 0), 3.25f);
}

TEST(PfmCodec, RandomMapBitExact) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(0.01f, 50.0f);
  DepthMap d(31, 23);
  for (auto& v : d.data()) v = rng() % 5 == 0 ? DepthMap::kUnknown : u(rng);
  const Bytes bytes = encode_depth_pfm(d);
  const DepthMap back = decode_depth_pfm(bytes);
  EXPECT_EQ(std::memcmp(back.data().data(), d.data().data(), d.data().size() * 4), 0);
  EXPECT_EQ(encode_depth_pfm(back), bytes);
}

TEST(PfmCodec, ThreeChannelAndBigEndian) {
  Raster<float> r(2, 1, 3);
  for (int i = 0; i < 6; ++i) r.data()[i] = static_cast<float>(i) + 0.5f;
  EXPECT_EQ(decode_pfm(encode_pfm(r)), r);

  const std::string header = "Pf\n1 1\n1.0\n";
  Bytes be(header.begin(), header.end());
  const std::uint32_t bits = std::bit_cast<std::uint32_t>(2.5f);
  for (int k = 3; k >= 0; --k) be.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
  EXPECT_EQ(decode_pfm(be).at(0, 0), 2.5f);
}

TEST(PfmCodec, MalformedHeaderIsParseError) {
  const auto bytes_of = [](const std::string& s) { return Bytes(s.begin(), s.end()); };
  try {
    decode_pfm(bytes_of("P6\n1 1\n-1\n"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
  try {
    decode_pfm(bytes_of("Pf\n1 x\n-1\n"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 5u);
  }
  EXPECT_THROW(decode_pfm(bytes_of("Pf\n1 1\n0\n....")), ParseError);
  EXPECT_THROW(decode_pfm(bytes_of("Pf\n2 2\n-1\n....")), ParseError);
  EXPECT_THROW(decode_depth_pfm(encode_pfm(Raster<float>(1, 1, 3))), ParseError);
}

TEST(PfmCodec, FuzzedInputsNeverCrash) {
  const Bytes good = encode_depth_pfm(DepthMap(4, 4, 1.0f));
  std::mt19937_64 rng(6);
  for (int i = 0; i < 2000; ++i) {
    Bytes b = good;
    for (int k = 0; k < 3; ++k) b[rng() % 16] = static_cast<std::uint8_t>(rng());
    if (rng() % 3 == 0) b.resize(rng() % b.size());
    expect_parse_error_or_ok([&] { decode_pfm(b); });
  }
}

TEST(Codecs, FileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "incsplat_codec_test";
  std::filesystem::create_directories(dir);
  const ImageRGB img = random_image(8, 4, 7);
  save_png(dir / "a.png", img);
  EXPECT_EQ(encode_png(load_png(dir / "a.png")), encode_png(img));
  DepthMap d(3, 3, 1.5f);
  save_depth_pfm(dir / "a.pfm", d);
  EXPECT_EQ(load_depth_pfm(dir / "a.pfm"), d);
  EXPECT_THROW(read_file(dir / "missing.png"), Error);
  std::filesystem::remove_all(dir);
}

TEST(Codecs, MaskImageRoundTrip) {
  Mask m(5, 3);
  m.set(1, 2, true);
  m.set(4, 0, true);
  EXPECT_EQ(mask_from_image(decode_png(encode_png(image_from_mask(m)))), m);
}
