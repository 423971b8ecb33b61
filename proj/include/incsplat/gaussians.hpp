// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "incsplat/errors.hpp"
#include "incsplat/geometry.hpp"
#include "incsplat/imaging.hpp"
#include "incsplat/parallel.hpp"

namespace incsplat {

using Float3 = std::array<float, 3>;
using Quat = std::array<float, 4>;  // w, x, y, z

// Structure-of-arrays Gaussian scene.
struct GaussianSet {
  std::vector<Float3> center;
  std::vector<float> scale;  // isotropic standard deviation, scene units
  std::vector<Quat> rotation;
  std::vector<float> opacity;
  std::vector<Float3> color;
  std::vector<std::int32_t> source_step;

  std::size_t size() const noexcept { return center.size(); }
  bool empty() const noexcept { return center.empty(); }

  void reserve(std::size_t n) {
    center.reserve(n);
    scale.reserve(n);
    rotation.reserve(n);
    opacity.reserve(n);
    color.reserve(n);
    source_step.reserve(n);
  }

  void push_back(const Float3& c, float s, const Quat& q, float o, const Float3& rgb, std::int32_t step) {
    center.push_back(c);
    scale.push_back(s);
    rotation.push_back(q);
    opacity.push_back(o);
    color.push_back(rgb);
    source_step.push_back(step);
  }

  void append(const GaussianSet& other, std::size_t i) {
    push_back(other.center[i], other.scale[i], other.rotation[i], other.opacity[i], other.color[i],
              other.source_step[i]);
  }

  // Empty string when every invariant holds, otherwise a description of the first violation.
  std::string check() const {
    const std::size_t n = center.size();
    if (scale.size() != n || rotation.size() != n || opacity.size() != n || color.size() != n || source_step.size() != n) {
      return "array lengths differ";
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = center[i];
      if (!std::isfinite(c[0]) || !std::isfinite(c[1]) || !std::isfinite(c[2])) return "non-finite center at " + std::to_string(i);
      if (!(scale[i] > 0.0f)) return "non-positive scale at " + std::to_string(i);
      if (!(opacity[i] > 0.0f && opacity[i] <= 1.0f)) return "opacity outside (0, 1] at " + std::to_string(i);
      const auto& q = rotation[i];
      const double qn = std::sqrt(double{q[0]} * q[0] + double{q[1]} * q[1] + double{q[2]} * q[2] + double{q[3]} * q[3]);
      if (std::abs(qn - 1.0) > 1e-5) return "non-unit quaternion at " + std::to_string(i);
    }
    return {};
  }

  friend bool operator==(const GaussianSet&, const GaussianSet&) = default;
};

// Gaussians decoded from one view, each remembering the pixel and depth it came from.
struct LocalGaussians {
  GaussianSet gaussians;
  std::vector<std::int32_t> pixel_x;
  std::vector<std::int32_t> pixel_y;
  std::vector<float> depth;

  std::size_t size() const noexcept { return gaussians.size(); }
};

struct DecodeParams {
  double k_scale = 1.0;
  float min_opacity = 0.1f;
  float max_opacity = 0.95f;
};

// One Gaussian per pixel (or per pixel where `only` is set): center at the unprojected pixel
// center, the pixel's color, a one-pixel footprint scale, identity rotation, and opacity
// from the clamped confidence.
inline LocalGaussians decode_gaussians(const ImageRGB& image, const DepthMap& depth, const Raster<float>& confidence,
                                       const Pose& pose, const Intrinsics& intr, std::int32_t step,
                                       const DecodeParams& params = {}, const Mask* only = nullptr) {
  const int w = image.width();
  const int h = image.height();
  if (depth.width() != w || depth.height() != h || confidence.width() != w || confidence.height() != h ||
      intr.width != w || intr.height != h) {
    throw SizeError("decode_gaussians: image, depth, confidence and intrinsics sizes differ");
  }
  if (only != nullptr && (only->width() != w || only->height() != h)) throw SizeError("decode_gaussians: mask size differs");
  LocalGaussians out;
  out.gaussians.reserve(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (only != nullptr && !only->test(x, y)) continue;
      const float d = depth.at(x, y);
      if (!(d > 0.0f) || !std::isfinite(d)) {
        throw IncompleteDepthError("decode_gaussians: unknown depth at (" + std::to_string(x) + ", " +
                                   std::to_string(y) + ")");
      }
      const Vec3 c = unproject_pixel(pose, intr, x + 0.5, y + 0.5, d);
      const float opacity = std::clamp(confidence.at(x, y), params.min_opacity, params.max_opacity);
      out.gaussians.push_back({static_cast<float>(c.x()), static_cast<float>(c.y()), static_cast<float>(c.z())},
                              static_cast<float>(d * params.k_scale / intr.fx), Quat{1.0f, 0.0f, 0.0f, 0.0f},
                              opacity, {image.at(x, y, 0), image.at(x, y, 1), image.at(x, y, 2)}, step);
      out.pixel_x.push_back(x);
      out.pixel_y.push_back(y);
      out.depth.push_back(d);
    }
  }
  return out;
}

// Per-pixel index of projected global Gaussians: for every pixel, the camera depths of the
// Gaussians whose floored projection lands there.
class ProjectedIndex {
 public:
  ProjectedIndex(const GaussianSet& global, const Pose& pose, const Intrinsics& intr)
      : width_(intr.width), height_(intr.height), offsets_(static_cast<std::size_t>(intr.width) * intr.height + 1, 0) {
    std::vector<std::int64_t> pixel_of(global.size(), -1);
    std::vector<double> depth_of(global.size(), 0.0);
    for (std::size_t j = 0; j < global.size(); ++j) {
      const auto& c = global.center[j];
      const auto p = project_point(pose, intr, Vec3(c[0], c[1], c[2]));
      if (!p) continue;
      const double fx = std::floor(p->u);
      const double fy = std::floor(p->v);
      if (fx < 0.0 || fy < 0.0 || fx >= width_ || fy >= height_) continue;
      pixel_of[j] = static_cast<std::int64_t>(fy) * width_ + static_cast<std::int64_t>(fx);
      depth_of[j] = p->depth;
      ++offsets_[static_cast<std::size_t>(pixel_of[j]) + 1];
    }
    for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
    depths_.resize(offsets_.back());
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t j = 0; j < global.size(); ++j) {
      if (pixel_of[j] < 0) continue;
      depths_[cursor[static_cast<std::size_t>(pixel_of[j])]++] = depth_of[j];
    }
  }

  std::span<const double> at(int x, int y) const {
    const std::size_t i = static_cast<std::size_t>(y) * width_ + x;
    return {depths_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }

 private:
  int width_;
  int height_;
  std::vector<std::size_t> offsets_;
  std::vector<double> depths_;
};

// Indices of local Gaussians that have no global Gaussian on the same pixel within the
// relative depth tolerance |d_local - d_global| < delta * d_local.
inline std::vector<std::size_t> novel_local_indices(const GaussianSet& global, const LocalGaussians& local,
                                                    const Pose& pose, const Intrinsics& intr, double delta,
                                                    int threads = 0) {
  if (local.pixel_x.size() != local.size() || local.pixel_y.size() != local.size() || local.depth.size() != local.size()) {
    throw SizeError("fuse: local Gaussians lack pixel origins");
  }
  for (std::size_t i = 0; i < local.size(); ++i) {
    if (local.pixel_x[i] < 0 || local.pixel_y[i] < 0 || local.pixel_x[i] >= intr.width || local.pixel_y[i] >= intr.height) {
      throw SizeError("fuse: local pixel (" + std::to_string(local.pixel_x[i]) + ", " + std::to_string(local.pixel_y[i]) +
                      ") outside the " + std::to_string(intr.width) + "x" + std::to_string(intr.height) + " image");
    }
  }
  const ProjectedIndex index(global, pose, intr);
  std::vector<std::uint8_t> redundant(local.size(), 0);
  parallel_for(local.size(), threads, [&](std::size_t i) {
    const double d_local = local.depth[i];
    for (const double d_global : index.at(local.pixel_x[i], local.pixel_y[i])) {
      if (std::abs(d_local - d_global) < delta * d_local) {
        redundant[i] = 1;
        return;
      }
    }
  });
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < local.size(); ++i)
    if (!redundant[i]) keep.push_back(i);
  return keep;
}

// Appends the non-redundant locals to `global`; existing entries are left untouched.
// Returns the number of Gaussians added.
inline std::size_t fuse_into(GaussianSet& global, const LocalGaussians& local, const Pose& pose,
                             const Intrinsics& intr, double delta, int threads = 0) {
  const auto keep = novel_local_indices(global, local, pose, intr, delta, threads);
  global.reserve(global.size() + keep.size());
  for (const std::size_t i : keep) global.append(local.gaussians, i);
  return keep.size();
}

inline GaussianSet fuse_incremental(const GaussianSet& global, const LocalGaussians& local, const Pose& pose,
                                    const Intrinsics& intr, double delta, int threads = 0) {
  GaussianSet out = global;
  fuse_into(out, local, pose, intr, delta, threads);
  return out;
}

}  // namespace incsplat
