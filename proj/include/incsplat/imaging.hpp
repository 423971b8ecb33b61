// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "incsplat/errors.hpp"

namespace incsplat {

// Row-major H x W x C interleaved raster.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, int channels, T fill = T{})
      : width_(width), height_(height), channels_(channels) {
    if (width < 0 || height < 0 || channels <= 0) throw SizeError("raster dimensions must be non-negative");
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  std::size_t index(int x, int y, int c = 0) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  T& at(int x, int y, int c = 0) noexcept { return data_[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const noexcept { return data_[index(x, y, c)]; }

  std::span<T> pixel(int x, int y) noexcept { return {data_.data() + index(x, y), static_cast<std::size_t>(channels_)}; }
  std::span<const T> pixel(int x, int y) const noexcept {
    return {data_.data() + index(x, y), static_cast<std::size_t>(channels_)};
  }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  bool same_size(const Raster<T>& o) const noexcept { return width_ == o.width_ && height_ == o.height_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

// Linear RGB in [0, 1].
class ImageRGB : public Raster<float> {
 public:
  ImageRGB() : Raster<float>(0, 0, 3) {}
  ImageRGB(int width, int height, float fill = 0.0f) : Raster<float>(width, height, 3, fill) {}
};

// Scene-unit depths; 0 marks an unknown pixel.
class DepthMap : public Raster<float> {
 public:
  static constexpr float kUnknown = 0.0f;

  DepthMap() : Raster<float>(0, 0, 1) {}
  DepthMap(int width, int height, float fill = kUnknown) : Raster<float>(width, height, 1, fill) {}

  bool known(int x, int y) const noexcept { return at(x, y) != kUnknown; }
  bool complete() const noexcept {
    return std::none_of(data().begin(), data().end(), [](float d) { return d == kUnknown; });
  }
};

// true (1) marks a valid / known pixel.
class Mask : public Raster<std::uint8_t> {
 public:
  Mask() : Raster<std::uint8_t>(0, 0, 1) {}
  Mask(int width, int height, bool fill = false) : Raster<std::uint8_t>(width, height, 1, fill ? 1 : 0) {}

  bool test(int x, int y) const noexcept { return at(x, y) != 0; }
  void set(int x, int y, bool v) noexcept { at(x, y) = v ? 1 : 0; }
  std::size_t count() const noexcept {
    return static_cast<std::size_t>(std::count(data().begin(), data().end(), std::uint8_t{1}));
  }
};

class FeatureMap : public Raster<float> {
 public:
  FeatureMap() : Raster<float>(0, 0, 1) {}
  FeatureMap(int width, int height, int channels, float fill = 0.0f)
      : Raster<float>(width, height, channels, fill) {}
};

// Bilinear sample in pixel-index coordinates: (x, y) = (i, j) lands exactly on pixel (i, j).
// Writes raster.channels() values into `out`. Returns false when a neighbor that carries
// weight falls outside the raster, in which case `out` is zero-filled.
template <typename T>
bool bilinear_sample(const Raster<T>& raster, double x, double y, std::span<double> out) {
  const double fx0 = std::floor(x);
  const double fy0 = std::floor(y);
  const int x0 = static_cast<int>(fx0);
  const int y0 = static_cast<int>(fy0);
  const double tx = x - fx0;
  const double ty = y - fy0;
  const int x1 = tx > 0.0 ? x0 + 1 : x0;
  const int y1 = ty > 0.0 ? y0 + 1 : y0;
  const int c = raster.channels();
  if (!(x >= -1.0 && y >= -1.0 && x < 1e9 && y < 1e9) || x0 < 0 || y0 < 0 || x1 >= raster.width() || y1 >= raster.height()) {
    std::fill(out.begin(), out.begin() + c, 0.0);
    return false;
  }
  const double w00 = (1.0 - tx) * (1.0 - ty);
  const double w10 = tx * (1.0 - ty);
  const double w01 = (1.0 - tx) * ty;
  const double w11 = tx * ty;
  for (int k = 0; k < c; ++k) {
    out[k] = w00 * raster.at(x0, y0, k) + w10 * raster.at(x1, y0, k) + w01 * raster.at(x0, y1, k) +
             w11 * raster.at(x1, y1, k);
  }
  return true;
}

// Depth variant: any weighted neighbor that is unknown also invalidates the sample.
inline std::optional<double> bilinear_sample(const DepthMap& depth, double x, double y) {
  const double fx0 = std::floor(x);
  const double fy0 = std::floor(y);
  const int x0 = static_cast<int>(fx0);
  const int y0 = static_cast<int>(fy0);
  const int x1 = x - fx0 > 0.0 ? x0 + 1 : x0;
  const int y1 = y - fy0 > 0.0 ? y0 + 1 : y0;
  if (!(x >= -1.0 && y >= -1.0 && x < 1e9 && y < 1e9) || x0 < 0 || y0 < 0 || x1 >= depth.width() || y1 >= depth.height()) {
    return std::nullopt;
  }
  if (!depth.known(x0, y0) || !depth.known(x1, y0) || !depth.known(x0, y1) || !depth.known(x1, y1)) {
    return std::nullopt;
  }
  double v = 0.0;
  if (!bilinear_sample(static_cast<const Raster<float>&>(depth), x, y, std::span<double>(&v, 1))) {
    return std::nullopt;
  }
  return v;
}

// 2x2 box average; odd trailing rows/columns are dropped.
template <typename RasterT>
RasterT resize_half(const RasterT& img) {
  if (img.width() < 2 || img.height() < 2) {
    throw SizeError("resize_half needs at least 2x2, got " + std::to_string(img.width()) + "x" +
                    std::to_string(img.height()));
  }
  RasterT out;
  const int w = img.width() / 2;
  const int h = img.height() / 2;
  Raster<float> tmp(w, h, img.channels());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        const double s = static_cast<double>(img.at(2 * x, 2 * y, c)) + img.at(2 * x + 1, 2 * y, c) +
                         img.at(2 * x, 2 * y + 1, c) + img.at(2 * x + 1, 2 * y + 1, c);
        tmp.at(x, y, c) = static_cast<float>(s * 0.25);
      }
    }
  }
  static_cast<Raster<float>&>(out) = std::move(tmp);
  return out;
}

// factor x factor box average over known depths; a block with no known depth stays unknown.
inline DepthMap downsample_depth(const DepthMap& depth, int factor) {
  if (factor < 1 || depth.width() % factor != 0 || depth.height() % factor != 0) {
    throw SizeError("downsample_depth: dimensions not divisible by " + std::to_string(factor));
  }
  DepthMap out(depth.width() / factor, depth.height() / factor);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      double sum = 0.0;
      int n = 0;
      for (int j = 0; j < factor; ++j) {
        for (int i = 0; i < factor; ++i) {
          const float d = depth.at(x * factor + i, y * factor + j);
          if (d != DepthMap::kUnknown) {
            sum += d;
            ++n;
          }
        }
      }
      out.at(x, y) = n > 0 ? static_cast<float>(sum / n) : DepthMap::kUnknown;
    }
  }
  return out;
}

// Bilinear upsample of a coarse grid by an integer factor with pixel centers aligned
// (fine center x + 0.5 maps to coarse continuous coordinate (x + 0.5) / factor) and edge clamping.
inline std::vector<double> upsample_bilinear(std::span<const double> coarse, int cw, int ch, int factor) {
  const int fw = cw * factor;
  const int fh = ch * factor;
  std::vector<double> fine(static_cast<std::size_t>(fw) * fh);
  for (int y = 0; y < fh; ++y) {
    const double sy = std::clamp((y + 0.5) / factor - 0.5, 0.0, static_cast<double>(ch - 1));
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, ch - 1);
    const double ty = sy - y0;
    for (int x = 0; x < fw; ++x) {
      const double sx = std::clamp((x + 0.5) / factor - 0.5, 0.0, static_cast<double>(cw - 1));
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, cw - 1);
      const double tx = sx - x0;
      const auto at = [&](int xx, int yy) { return coarse[static_cast<std::size_t>(yy) * cw + xx]; };
      fine[static_cast<std::size_t>(y) * fw + x] =
          (1.0 - ty) * ((1.0 - tx) * at(x0, y0) + tx * at(x1, y0)) + ty * ((1.0 - tx) * at(x0, y1) + tx * at(x1, y1));
    }
  }
  return fine;
}

inline double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

// Peak signal-to-noise ratio for [0, 1] images.
inline double psnr(const ImageRGB& a, const ImageRGB& b) {
  if (!a.same_size(b)) throw SizeError("psnr: image sizes differ");
  double se = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - b.data()[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.data().size());
  if (mse <= 0.0) return 100.0;
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace incsplat
