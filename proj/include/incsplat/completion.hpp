// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Deterministic hole filling for color (push-pull pyramid) and depth (harmonic
// interpolation with the known pixels as Dirichlet boundary).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "incsplat/errors.hpp"
#include "incsplat/imaging.hpp"
#include "incsplat/parallel.hpp"
#include "incsplat/renderer.hpp"

namespace incsplat {

struct CompletionInput {
  ImageRGB rgb;
  DepthMap depth;
  Mask known;
};

// Known wherever the render's accumulated alpha reaches tau.
inline Mask make_hole_mask(const RenderOutput& render, double tau) {
  Mask m(render.alpha.width(), render.alpha.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) m.set(x, y, render.alpha.at(x, y) >= tau);
  return m;
}

namespace detail {

struct Level {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> value;
  std::vector<double> weight;  // number of known base pixels aggregated here

  double& v(int x, int y, int c) { return value[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  double v(int x, int y, int c) const { return value[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  double& wt(int x, int y) { return weight[static_cast<std::size_t>(y) * width + x]; }
  double wt(int x, int y) const { return weight[static_cast<std::size_t>(y) * width + x]; }

  bool complete() const {
    return std::all_of(weight.begin(), weight.end(), [](double w) { return w > 0.0; });
  }
};

// Fills every pixel with zero weight. Weights are integer counts, so averaging a constant
// field reproduces the constant bit-exactly.
inline void push_pull(Level& base) {
  std::vector<Level> pyramid;
  pyramid.push_back(std::move(base));
  while (!pyramid.back().complete() && (pyramid.back().width > 1 || pyramid.back().height > 1)) {
    const Level& fine = pyramid.back();
    Level coarse{(fine.width + 1) / 2, (fine.height + 1) / 2, fine.channels, {}, {}};
    coarse.value.assign(static_cast<std::size_t>(coarse.width) * coarse.height * coarse.channels, 0.0);
    coarse.weight.assign(static_cast<std::size_t>(coarse.width) * coarse.height, 0.0);
    for (int y = 0; y < coarse.height; ++y) {
      for (int x = 0; x < coarse.width; ++x) {
        double total = 0.0;
        for (int j = 0; j < 2; ++j) {
          for (int i = 0; i < 2; ++i) {
            const int fx = 2 * x + i, fy = 2 * y + j;
            if (fx >= fine.width || fy >= fine.height || fine.wt(fx, fy) <= 0.0) continue;
            total += fine.wt(fx, fy);
            for (int c = 0; c < fine.channels; ++c) coarse.v(x, y, c) += fine.wt(fx, fy) * fine.v(fx, fy, c);
          }
        }
        coarse.wt(x, y) = total;
        if (total > 0.0)
          for (int c = 0; c < coarse.channels; ++c) coarse.v(x, y, c) /= total;
      }
    }
    pyramid.push_back(std::move(coarse));
  }
  for (std::size_t l = pyramid.size() - 1; l-- > 0;) {
    Level& fine = pyramid[l];
    const Level& coarse = pyramid[l + 1];
    for (int y = 0; y < fine.height; ++y) {
      const double sy = std::clamp((y + 0.5) / 2.0 - 0.5, 0.0, static_cast<double>(coarse.height - 1));
      const int y0 = static_cast<int>(sy);
      const int y1 = std::min(y0 + 1, coarse.height - 1);
      const double ty = sy - y0;
      for (int x = 0; x < fine.width; ++x) {
        if (fine.wt(x, y) > 0.0) continue;
        const double sx = std::clamp((x + 0.5) / 2.0 - 0.5, 0.0, static_cast<double>(coarse.width - 1));
        const int x0 = static_cast<int>(sx);
        const int x1 = std::min(x0 + 1, coarse.width - 1);
        const double tx = sx - x0;
        for (int c = 0; c < fine.channels; ++c) {
          fine.v(x, y, c) = (1.0 - ty) * ((1.0 - tx) * coarse.v(x0, y0, c) + tx * coarse.v(x1, y0, c)) +
                            ty * ((1.0 - tx) * coarse.v(x0, y1, c) + tx * coarse.v(x1, y1, c));
        }
      }
    }
  }
  base = std::move(pyramid.front());
}

inline void check_completion_input(const Raster<float>& values, const Mask& known) {
  if (values.width() != known.width() || values.height() != known.height()) {
    throw SizeError("completion: mask size differs from the raster");
  }
}

}  // namespace detail

// Push-pull fill of the unknown pixels of a float raster. All-unknown input gets `fallback`.
inline Raster<float> push_pull_fill(const Raster<float>& values, const Mask& known, float fallback) {
  detail::check_completion_input(values, known);
  const int c_count = values.channels();
  Raster<float> out = values;
  if (known.count() == 0) {
    std::fill(out.data().begin(), out.data().end(), fallback);
    return out;
  }
  detail::Level base{values.width(), values.height(), c_count, {}, {}};
  base.value.resize(values.data().size());
  base.weight.resize(values.pixel_count());
  for (std::size_t i = 0; i < values.pixel_count(); ++i) {
    const bool k = known.data()[i] != 0;
    base.weight[i] = k ? 1.0 : 0.0;
    for (int c = 0; c < c_count; ++c) base.value[i * c_count + c] = k ? values.data()[i * c_count + c] : 0.0;
  }
  detail::push_pull(base);
  for (std::size_t i = 0; i < values.pixel_count(); ++i) {
    if (known.data()[i]) continue;
    for (int c = 0; c < c_count; ++c) out.data()[i * c_count + c] = static_cast<float>(base.value[i * c_count + c]);
  }
  return out;
}

// Known pixels are kept bit-exactly; prompts do not influence this fill.
inline ImageRGB inpaint_color(const CompletionInput& input) {
  ImageRGB out;
  static_cast<Raster<float>&>(out) = push_pull_fill(input.rgb, input.known, 0.5f);
  return out;
}

struct HarmonicSettings {
  double tolerance = 1e-4;
  int max_sweeps = 10000;
  double bootstrap_depth = 2.0;
  int threads = 0;
};

struct HarmonicReport {
  int sweeps = 0;
  std::vector<double> residuals;  // max |mean(neighbors) - value| after each full sweep
};

// Red-black Gauss-Seidel solve of the discrete Laplace equation over the unknown pixels,
// starting from the push-pull fill. Neighbors outside the image are omitted from the mean.
inline DepthMap complete_depth(const CompletionInput& input, const HarmonicSettings& settings = {},
                               HarmonicReport* report = nullptr) {
  const DepthMap& depth = input.depth;
  const Mask& known = input.known;
  detail::check_completion_input(depth, known);
  for (std::size_t i = 0; i < depth.pixel_count(); ++i) {
    if (known.data()[i] && !(depth.data()[i] > 0.0f && std::isfinite(depth.data()[i]))) {
      throw InvalidDepthError("complete_depth: known pixel without a positive depth");
    }
  }
  const int w = depth.width();
  const int h = depth.height();
  DepthMap out(w, h);
  if (known.count() == 0) {
    std::fill(out.data().begin(), out.data().end(), static_cast<float>(settings.bootstrap_depth));
    return out;
  }
  const Raster<float> initial = push_pull_fill(depth, known, static_cast<float>(settings.bootstrap_depth));
  std::vector<double> u(initial.data().begin(), initial.data().end());
  const auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };
  const auto neighbor_mean = [&](int x, int y) {
    double sum = 0.0;
    int n = 0;
    if (x > 0) sum += u[idx(x - 1, y)], ++n;
    if (x + 1 < w) sum += u[idx(x + 1, y)], ++n;
    if (y > 0) sum += u[idx(x, y - 1)], ++n;
    if (y + 1 < h) sum += u[idx(x, y + 1)], ++n;
    return n > 0 ? sum / n : u[idx(x, y)];
  };

  std::vector<double> row_residual(h, 0.0);
  int sweeps = 0;
  while (sweeps < settings.max_sweeps) {
    for (int color = 0; color < 2; ++color) {
      parallel_for(static_cast<std::size_t>(h), settings.threads, [&](std::size_t yi) {
        const int y = static_cast<int>(yi);
        for (int x = (y + color) % 2; x < w; x += 2)
          if (!known.test(x, y)) u[idx(x, y)] = neighbor_mean(x, y);
      });
    }
    ++sweeps;
    parallel_for(static_cast<std::size_t>(h), settings.threads, [&](std::size_t yi) {
      const int y = static_cast<int>(yi);
      double r = 0.0;
      for (int x = 0; x < w; ++x)
        if (!known.test(x, y)) r = std::max(r, std::abs(neighbor_mean(x, y) - u[idx(x, y)]));
      row_residual[yi] = r;
    });
    const double residual = *std::max_element(row_residual.begin(), row_residual.end());
    if (report != nullptr) report->residuals.push_back(residual);
    if (residual < settings.tolerance) break;
  }
  if (report != nullptr) report->sweeps = sweeps;
  for (std::size_t i = 0; i < u.size(); ++i) out.data()[i] = known.data()[i] ? depth.data()[i] : static_cast<float>(u[i]);
  return out;
}

}  // namespace incsplat
