// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Depth-guided plane sweep: candidate depths around a guide map, warping of neighbor
// features onto each candidate plane, correlation volume, and soft-argmax regression.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "incsplat/errors.hpp"
#include "incsplat/features.hpp"
#include "incsplat/geometry.hpp"
#include "incsplat/imaging.hpp"
#include "incsplat/parallel.hpp"

namespace incsplat {

// Per pixel, `count` linearly spaced depths spanning [(1 - offset) D, (1 + offset) D].
class DepthCandidates {
 public:
  DepthCandidates() = default;
  DepthCandidates(int width, int height, int count, double offset)
      : width_(width), height_(height), count_(count), offset_(offset),
        values_(static_cast<std::size_t>(width) * height * count, 0.0) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int count() const noexcept { return count_; }
  double offset() const noexcept { return offset_; }

  double& at(int s, int x, int y) noexcept { return values_[(static_cast<std::size_t>(y) * width_ + x) * count_ + s]; }
  double at(int s, int x, int y) const noexcept { return values_[(static_cast<std::size_t>(y) * width_ + x) * count_ + s]; }

  std::span<const double> pixel(int x, int y) const noexcept {
    return {values_.data() + (static_cast<std::size_t>(y) * width_ + x) * count_, static_cast<std::size_t>(count_)};
  }

  // Depth of candidate `s` at every pixel, row-major.
  std::vector<double> plane(int s) const {
    std::vector<double> out(static_cast<std::size_t>(width_) * height_);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = values_[i * count_ + s];
    return out;
  }

  double spacing(int x, int y) const noexcept { return count_ > 1 ? at(1, x, y) - at(0, x, y) : 0.0; }

 private:
  int width_ = 0;
  int height_ = 0;
  int count_ = 0;
  double offset_ = 0.0;
  std::vector<double> values_;
};

// count x height x width correlation scores, slice-major.
class CostVolume {
 public:
  CostVolume() = default;
  CostVolume(int width, int height, int count)
      : width_(width), height_(height), count_(count),
        scores_(static_cast<std::size_t>(width) * height * count, 0.0) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int count() const noexcept { return count_; }

  double& at(int s, int x, int y) noexcept { return scores_[(static_cast<std::size_t>(s) * height_ + y) * width_ + x]; }
  double at(int s, int x, int y) const noexcept { return scores_[(static_cast<std::size_t>(s) * height_ + y) * width_ + x]; }

  std::span<double> slice(int s) noexcept {
    return {scores_.data() + static_cast<std::size_t>(s) * width_ * height_, static_cast<std::size_t>(width_) * height_};
  }
  std::span<const double> slice(int s) const noexcept {
    return {scores_.data() + static_cast<std::size_t>(s) * width_ * height_, static_cast<std::size_t>(width_) * height_};
  }

  const std::vector<double>& scores() const noexcept { return scores_; }

 private:
  int width_ = 0;
  int height_ = 0;
  int count_ = 0;
  std::vector<double> scores_;
};

inline DepthCandidates make_depth_candidates(const DepthMap& guide, double offset, int count) {
  if (count < 2) throw Error("make_depth_candidates: need at least 2 candidates");
  if (!(offset > 0.0 && offset < 1.0)) throw Error("make_depth_candidates: offset must be in (0, 1)");
  DepthCandidates out(guide.width(), guide.height(), count, offset);
  for (int y = 0; y < guide.height(); ++y) {
    for (int x = 0; x < guide.width(); ++x) {
      const double d = guide.at(x, y);
      if (!(d > 0.0) || !std::isfinite(d)) {
        throw IncompleteDepthError("make_depth_candidates: guide depth unknown at (" + std::to_string(x) + ", " +
                                   std::to_string(y) + ")");
      }
      for (int s = 0; s < count; ++s) {
        const double t = static_cast<double>(s) / (count - 1);
        out.at(s, x, y) = d * ((1.0 - offset) + 2.0 * offset * t);
      }
    }
  }
  return out;
}

struct WarpedFeatures {
  FeatureMap features;  // zero where invalid
  Mask valid;
};

// Samples `source` (seen from `source_pose`) at the points where the rays of the current
// view's feature pixels meet the per-pixel depths in `plane_depths`.
inline WarpedFeatures warp_feature_to_view(const FeatureMap& source, const Pose& source_pose,
                                           const Pose& current_pose, const Intrinsics& feature_intr,
                                           std::span<const double> plane_depths) {
  const int w = feature_intr.width;
  const int h = feature_intr.height;
  if (plane_depths.size() != static_cast<std::size_t>(w) * h) throw SizeError("warp: plane size mismatch");
  const Pose current_to_source = source_pose.inverse().compose(current_pose);
  WarpedFeatures out{FeatureMap(w, h, source.channels()), Mask(w, h)};
  std::vector<double> sample(source.channels());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double d = plane_depths[static_cast<std::size_t>(y) * w + x];
      const Vec3 p = current_to_source.to_world(unproject_to_camera(feature_intr, x + 0.5, y + 0.5, d));
      if (!(p.z() > 0.0)) continue;
      const double u = feature_intr.fx * p.x() / p.z() + feature_intr.cx;
      const double v = feature_intr.fy * p.y() / p.z() + feature_intr.cy;
      if (!bilinear_sample(source, u - 0.5, v - 0.5, sample)) continue;
      out.valid.set(x, y, true);
      const auto dst = out.features.pixel(x, y);
      for (int c = 0; c < source.channels(); ++c) dst[c] = static_cast<float>(sample[c]);
    }
  }
  return out;
}

inline WarpedFeatures warp_feature_to_view(const FeatureMap& source, const Pose& source_pose,
                                           const Pose& current_pose, const Intrinsics& feature_intr,
                                           double plane_depth) {
  const std::vector<double> plane(static_cast<std::size_t>(feature_intr.width) * feature_intr.height, plane_depth);
  return warp_feature_to_view(source, source_pose, current_pose, feature_intr, plane);
}

struct NeighborView {
  Pose pose;
  const FeatureMap* features = nullptr;
};

// Mean dot product between the current features and each neighbor warped onto every
// candidate plane. Neighbors invalid at a pixel are skipped there; no valid neighbor gives 0.
// `observed`, when given, marks the pixels where at least one neighbor is valid for some candidate.
inline CostVolume correlate(const FeatureMap& current, std::span<const NeighborView> neighbors,
                            const Pose& current_pose, const Intrinsics& feature_intr,
                            const DepthCandidates& candidates, int threads = 0, Mask* observed = nullptr) {
  if (neighbors.empty()) throw EmptyNeighborError("cost volume needs at least one neighbor view");
  const int w = current.width();
  const int h = current.height();
  if (feature_intr.width != w || feature_intr.height != h || candidates.width() != w || candidates.height() != h) {
    throw SizeError("cost volume: feature, intrinsics and candidate sizes differ");
  }
  for (const auto& n : neighbors) {
    if (n.features == nullptr || n.features->width() != w || n.features->height() != h ||
        n.features->channels() != current.channels()) {
      throw SizeError("cost volume: neighbor features do not match the current view");
    }
  }
  CostVolume volume(w, h, candidates.count());
  const int channels = current.channels();
  std::vector<std::vector<std::uint8_t>> seen(static_cast<std::size_t>(candidates.count()));
  parallel_for(static_cast<std::size_t>(candidates.count()), threads, [&](std::size_t si) {
    const int s = static_cast<int>(si);
    const std::vector<double> plane = candidates.plane(s);
    std::vector<double> sum(static_cast<std::size_t>(w) * h, 0.0);
    std::vector<int> valid(static_cast<std::size_t>(w) * h, 0);
    for (const auto& n : neighbors) {
      const WarpedFeatures warped = warp_feature_to_view(*n.features, n.pose, current_pose, feature_intr, plane);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (!warped.valid.test(x, y)) continue;
          const auto a = current.pixel(x, y);
          const auto b = warped.features.pixel(x, y);
          double dot = 0.0;
          for (int c = 0; c < channels; ++c) dot += static_cast<double>(a[c]) * b[c];
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          sum[i] += dot;
          ++valid[i];
        }
      }
    }
    auto out = volume.slice(s);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = valid[i] > 0 ? sum[i] / valid[i] : 0.0;
    if (observed != nullptr) {
      seen[si].resize(valid.size());
      for (std::size_t i = 0; i < valid.size(); ++i) seen[si][i] = valid[i] > 0 ? 1 : 0;
    }
  });
  if (observed != nullptr) {
    *observed = Mask(w, h);
    for (const auto& slice : seen)
      for (std::size_t i = 0; i < slice.size(); ++i) observed->data()[i] |= slice[i];
  }
  return volume;
}

// 3x3 box mean per depth slice over in-bounds pixels.
inline CostVolume smooth_slices(const CostVolume& in, int threads = 0) {
  CostVolume out(in.width(), in.height(), in.count());
  parallel_for(static_cast<std::size_t>(in.count()), threads, [&](std::size_t si) {
    const int s = static_cast<int>(si);
    for (int y = 0; y < in.height(); ++y) {
      for (int x = 0; x < in.width(); ++x) {
        double sum = 0.0;
        int n = 0;
        for (int j = std::max(0, y - 1); j <= std::min(in.height() - 1, y + 1); ++j) {
          for (int i = std::max(0, x - 1); i <= std::min(in.width() - 1, x + 1); ++i) {
            sum += in.at(s, i, j);
            ++n;
          }
        }
        out.at(s, x, y) = sum / n;
      }
    }
  });
  return out;
}

inline CostVolume build_cost_volume(const FeatureMap& current, std::span<const NeighborView> neighbors,
                                    const Pose& current_pose, const Intrinsics& feature_intr,
                                    const DepthCandidates& candidates, int threads = 0, Mask* observed = nullptr) {
  return smooth_slices(correlate(current, neighbors, current_pose, feature_intr, candidates, threads, observed),
                       threads);
}

// Feature-resolution soft-argmax output.
struct LowResDepth {
  int width = 0;
  int height = 0;
  std::vector<double> depth;
  std::vector<double> confidence;
};

inline LowResDepth soft_argmax_depth(const CostVolume& volume, const DepthCandidates& candidates, double temperature) {
  if (!(temperature > 0.0)) throw Error("depth regression: temperature must be positive");
  if (volume.width() != candidates.width() || volume.height() != candidates.height() ||
      volume.count() != candidates.count()) {
    throw SizeError("depth regression: volume and candidates differ in shape");
  }
  const int w = volume.width();
  const int h = volume.height();
  const int n = volume.count();
  LowResDepth out{w, h, std::vector<double>(static_cast<std::size_t>(w) * h), std::vector<double>(static_cast<std::size_t>(w) * h)};
  std::vector<double> weight(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double best = volume.at(0, x, y);
      for (int s = 1; s < n; ++s) best = std::max(best, volume.at(s, x, y));
      double total = 0.0;
      for (int s = 0; s < n; ++s) {
        weight[s] = std::exp((volume.at(s, x, y) - best) / temperature);
        total += weight[s];
      }
      double depth = 0.0, peak = 0.0;
      for (int s = 0; s < n; ++s) {
        const double p = weight[s] / total;
        depth += p * candidates.at(s, x, y);
        peak = std::max(peak, p);
      }
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      out.depth[i] = depth;
      out.confidence[i] = peak;
    }
  }
  return out;
}

struct DepthEstimate {
  DepthMap depth;
  Raster<float> confidence;
};

// Upsamples a feature-resolution estimate by `factor` with bilinear interpolation.
inline DepthEstimate upsample_estimate(const LowResDepth& low, int factor) {
  const auto depth = upsample_bilinear(low.depth, low.width, low.height, factor);
  const auto conf = upsample_bilinear(low.confidence, low.width, low.height, factor);
  DepthEstimate out{DepthMap(low.width * factor, low.height * factor),
                    Raster<float>(low.width * factor, low.height * factor, 1)};
  for (std::size_t i = 0; i < depth.size(); ++i) {
    out.depth.data()[i] = static_cast<float>(depth[i]);
    out.confidence.data()[i] = static_cast<float>(std::clamp(conf[i], 0.0, 1.0));
  }
  return out;
}

inline DepthEstimate regress_depth_and_confidence(const CostVolume& volume, const DepthCandidates& candidates,
                                                  double temperature, int factor = kFeatureDownscale) {
  return upsample_estimate(soft_argmax_depth(volume, candidates, temperature), factor);
}

}  // namespace incsplat
