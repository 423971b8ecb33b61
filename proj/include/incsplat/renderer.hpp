// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Tile-binned CPU splat rasterizer for isotropic Gaussians.
//
// Screen covariance per axis is (scale * f / z)^2 + 0.3^2; each splat influences pixels
// within 3 sigma. Per pixel, splats are composited front to back in (camera depth, index)
// order with weight w = min(0.99, opacity * exp(-r^2 / 2)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "incsplat/gaussians.hpp"
#include "incsplat/geometry.hpp"
#include "incsplat/imaging.hpp"
#include "incsplat/parallel.hpp"

namespace incsplat {

struct RenderOutput {
  ImageRGB color;
  DepthMap depth;       // alpha-weighted expected depth; unknown where alpha < tau
  Raster<float> alpha;  // accumulated opacity in [0, 1]
};

struct RasterSettings {
  double low_pass = 0.3;  // screen-space std added to every splat, pixels
  double cutoff_sigma = 3.0;
  double max_weight = 0.99;
  double near_plane = 1e-3;
  int tile_size = 16;
  int threads = 0;
};

namespace detail {

struct ProjectedSplat {
  double u, v, z;
  double inv_var_x, inv_var_y;
  double opacity;
  Float3 color;
};

}  // namespace detail

inline RenderOutput render_view(const GaussianSet& g, const Pose& pose, const Intrinsics& intr, double tau,
                                const RasterSettings& settings = {}) {
  const int w = intr.width;
  const int h = intr.height;
  const int ts = settings.tile_size;
  const int tiles_x = (w + ts - 1) / ts;
  const int tiles_y = (h + ts - 1) / ts;

  std::vector<detail::ProjectedSplat> splats(g.size());
  std::vector<std::vector<std::uint32_t>> tiles(static_cast<std::size_t>(tiles_x) * tiles_y);
  const double cutoff_sq = settings.cutoff_sigma * settings.cutoff_sigma;
  const double low_pass_sq = settings.low_pass * settings.low_pass;

  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& c = g.center[i];
    const Vec3 p = pose.to_camera(Vec3(c[0], c[1], c[2]));
    if (!(p.z() > settings.near_plane)) continue;
    const double sx = g.scale[i] * intr.fx / p.z();
    const double sy = g.scale[i] * intr.fy / p.z();
    const double var_x = sx * sx + low_pass_sq;
    const double var_y = sy * sy + low_pass_sq;
    const double u = intr.fx * p.x() / p.z() + intr.cx;
    const double v = intr.fy * p.y() / p.z() + intr.cy;
    const double rx = settings.cutoff_sigma * std::sqrt(var_x);
    const double ry = settings.cutoff_sigma * std::sqrt(var_y);
    // Pixels whose centers (px + 0.5) fall inside the bounding box.
    const double x_lo = std::ceil(u - rx - 0.5), x_hi = std::floor(u + rx - 0.5);
    const double y_lo = std::ceil(v - ry - 0.5), y_hi = std::floor(v + ry - 0.5);
    if (x_hi < 0.0 || y_hi < 0.0 || x_lo > w - 1 || y_lo > h - 1 || x_lo > x_hi || y_lo > y_hi) continue;
    splats[i] = {u, v, p.z(), 1.0 / var_x, 1.0 / var_y, g.opacity[i], g.color[i]};
    const int tx0 = static_cast<int>(std::max(0.0, x_lo)) / ts;
    const int tx1 = static_cast<int>(std::min<double>(w - 1, x_hi)) / ts;
    const int ty0 = static_cast<int>(std::max(0.0, y_lo)) / ts;
    const int ty1 = static_cast<int>(std::min<double>(h - 1, y_hi)) / ts;
    for (int ty = ty0; ty <= ty1; ++ty)
      for (int tx = tx0; tx <= tx1; ++tx) tiles[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(static_cast<std::uint32_t>(i));
  }

  RenderOutput out{ImageRGB(w, h), DepthMap(w, h), Raster<float>(w, h, 1)};
  parallel_for(tiles.size(), settings.threads, [&](std::size_t t) {
    auto& list = tiles[t];
    std::sort(list.begin(), list.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (splats[a].z != splats[b].z) return splats[a].z < splats[b].z;
      return a < b;
    });
    const int tx = static_cast<int>(t % tiles_x);
    const int ty = static_cast<int>(t / tiles_x);
    for (int y = ty * ts; y < std::min(h, (ty + 1) * ts); ++y) {
      for (int x = tx * ts; x < std::min(w, (tx + 1) * ts); ++x) {
        const double pu = x + 0.5;
        const double pv = y + 0.5;
        double transmittance = 1.0;
        double alpha = 0.0, depth = 0.0, r = 0.0, gr = 0.0, b = 0.0;
        for (const std::uint32_t i : list) {
          const auto& s = splats[i];
          const double du = pu - s.u;
          const double dv = pv - s.v;
          const double r2 = du * du * s.inv_var_x + dv * dv * s.inv_var_y;
          if (r2 > cutoff_sq) continue;
          const double weight = std::min(settings.max_weight, s.opacity * std::exp(-0.5 * r2));
          const double contrib = transmittance * weight;
          r += contrib * s.color[0];
          gr += contrib * s.color[1];
          b += contrib * s.color[2];
          depth += contrib * s.z;
          alpha += contrib;
          transmittance *= 1.0 - weight;
        }
        alpha = std::clamp(alpha, 0.0, 1.0);
        out.color.at(x, y, 0) = static_cast<float>(std::clamp(r, 0.0, 1.0));
        out.color.at(x, y, 1) = static_cast<float>(std::clamp(gr, 0.0, 1.0));
        out.color.at(x, y, 2) = static_cast<float>(std::clamp(b, 0.0, 1.0));
        // Coverage is decided on the stored alpha so the depth holes match make_hole_mask.
        const float stored_alpha = static_cast<float>(alpha);
        out.alpha.at(x, y) = stored_alpha;
        out.depth.at(x, y) =
            stored_alpha >= tau && alpha > 0.0 ? static_cast<float>(depth / alpha) : DepthMap::kUnknown;
      }
    }
  });
  return out;
}

}  // namespace incsplat
