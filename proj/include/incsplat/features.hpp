// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "incsplat/errors.hpp"
#include "incsplat/imaging.hpp"

namespace incsplat {

// Fixed hand-designed descriptor used in place of a learned backbone.
// Matching channels, in order: luma, d/dx luma, d/dy luma, 3x3 luma std, R, G, B,
// two-level binomial (pyramid) luma.
inline constexpr int kMatchingChannels = 8;
inline constexpr int kImageFeatureChannels = 4;
inline constexpr int kFeatureDownscale = 4;

struct FeaturePair {
  FeatureMap matching;  // standardized per channel, then unit length per pixel
  FeatureMap image;     // low-res R, G, B, luma; not normalized
};

namespace detail {

inline float clamped(const Raster<float>& r, int x, int y, int c = 0) {
  return r.at(std::clamp(x, 0, r.width() - 1), std::clamp(y, 0, r.height() - 1), c);
}

// [1 2 1] / 4 separable blur with edge clamping.
inline Raster<float> binomial_blur(const Raster<float>& in) {
  Raster<float> tmp(in.width(), in.height(), 1), out(in.width(), in.height(), 1);
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x)
      tmp.at(x, y) = static_cast<float>(
          (static_cast<double>(clamped(in, x - 1, y)) + 2.0 * in.at(x, y) + clamped(in, x + 1, y)) * 0.25);
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x)
      out.at(x, y) = static_cast<float>(
          (static_cast<double>(clamped(tmp, x, y - 1)) + 2.0 * tmp.at(x, y) + clamped(tmp, x, y + 1)) * 0.25);
  return out;
}

}  // namespace detail

// Unnormalized matching channels computed on an already downscaled image.
inline FeatureMap raw_matching_channels(const ImageRGB& low) {
  const int w = low.width();
  const int h = low.height();
  Raster<float> lum(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      lum.at(x, y) = static_cast<float>(luma(low.at(x, y, 0), low.at(x, y, 1), low.at(x, y, 2)));
  const Raster<float> pyramid = detail::binomial_blur(detail::binomial_blur(lum));

  FeatureMap raw(w, h, kMatchingChannels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double l = lum.at(x, y);
      double sum = 0.0, sum_sq = 0.0;
      for (int j = -1; j <= 1; ++j) {
        for (int i = -1; i <= 1; ++i) {
          const double v = detail::clamped(lum, x + i, y + j);
          sum += v;
          sum_sq += v * v;
        }
      }
      const double mean = sum / 9.0;
      const auto px = raw.pixel(x, y);
      px[0] = static_cast<float>(l);
      px[1] = static_cast<float>(0.5 * (static_cast<double>(detail::clamped(lum, x + 1, y)) - detail::clamped(lum, x - 1, y)));
      px[2] = static_cast<float>(0.5 * (static_cast<double>(detail::clamped(lum, x, y + 1)) - detail::clamped(lum, x, y - 1)));
      px[3] = static_cast<float>(std::sqrt(std::max(0.0, sum_sq / 9.0 - mean * mean)));
      px[4] = low.at(x, y, 0);
      px[5] = low.at(x, y, 1);
      px[6] = low.at(x, y, 2);
      px[7] = pyramid.at(x, y);
    }
  }
  return raw;
}

// Standardizes every channel over the image (zero-variance channels become 0), then scales
// each pixel vector to unit length (all-zero vectors stay zero).
inline FeatureMap normalize_features(const FeatureMap& raw) {
  const int c_count = raw.channels();
  const auto n = static_cast<double>(raw.pixel_count());
  std::vector<double> mean(c_count, 0.0), inv_std(c_count, 0.0);
  for (int c = 0; c < c_count; ++c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < raw.pixel_count(); ++i) sum += raw.data()[i * c_count + c];
    mean[c] = sum / n;
    double var = 0.0;
    for (std::size_t i = 0; i < raw.pixel_count(); ++i) {
      const double d = raw.data()[i * c_count + c] - mean[c];
      var += d * d;
    }
    const double sd = std::sqrt(var / n);
    inv_std[c] = sd > 1e-8 ? 1.0 / sd : 0.0;
  }
  FeatureMap out(raw.width(), raw.height(), c_count);
  std::vector<double> v(c_count);
  for (std::size_t i = 0; i < raw.pixel_count(); ++i) {
    double norm_sq = 0.0;
    for (int c = 0; c < c_count; ++c) {
      v[c] = (raw.data()[i * c_count + c] - mean[c]) * inv_std[c];
      norm_sq += v[c] * v[c];
    }
    const double norm = std::sqrt(norm_sq);
    const double scale = norm > 1e-8 ? 1.0 / norm : 0.0;
    for (int c = 0; c < c_count; ++c) out.data()[i * c_count + c] = static_cast<float>(v[c] * scale);
  }
  return out;
}

inline ImageRGB downscale_image(const ImageRGB& img, int factor) {
  ImageRGB out = img;
  for (int f = factor; f > 1; f /= 2) out = resize_half(out);
  return out;
}

inline FeaturePair extract_features(const ImageRGB& img) {
  if (img.width() % kFeatureDownscale != 0 || img.height() % kFeatureDownscale != 0 || img.empty()) {
    throw SizeError("extract_features: image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                    " is not divisible by " + std::to_string(kFeatureDownscale));
  }
  const ImageRGB low = downscale_image(img, kFeatureDownscale);
  FeaturePair out;
  out.matching = normalize_features(raw_matching_channels(low));
  out.image = FeatureMap(low.width(), low.height(), kImageFeatureChannels);
  for (int y = 0; y < low.height(); ++y) {
    for (int x = 0; x < low.width(); ++x) {
      const auto px = out.image.pixel(x, y);
      px[0] = low.at(x, y, 0);
      px[1] = low.at(x, y, 1);
      px[2] = low.at(x, y, 2);
      px[3] = static_cast<float>(luma(low.at(x, y, 0), low.at(x, y, 1), low.at(x, y, 2)));
    }
  }
  return out;
}

}  // namespace incsplat
