// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// The interactive loop: render the current scene from a new pose, fill appearance and
// depth in the revealed holes, refine depth with the memory-backed plane sweep, decode
// per-pixel Gaussians and fuse the novel ones into the global scene.

#include <chrono>
#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "incsplat/completion.hpp"
#include "incsplat/config.hpp"
#include "incsplat/costvolume.hpp"
#include "incsplat/errors.hpp"
#include "incsplat/features.hpp"
#include "incsplat/gaussians.hpp"
#include "incsplat/geometry.hpp"
#include "incsplat/imaging.hpp"
#include "incsplat/memory.hpp"
#include "incsplat/renderer.hpp"

namespace incsplat {

struct StepTiming {
  double render_ms = 0.0;
  double inpaint_ms = 0.0;
  double depth_ms = 0.0;
  double stepsplat_ms = 0.0;  // features, plane sweep, regression and decoding
  double fuse_ms = 0.0;
  double total_ms = 0.0;

  // Coarse split matching the usual geometry / appearance breakdown.
  double geometry_ms() const { return depth_ms + stepsplat_ms + fuse_ms; }
  double appearance_ms() const { return inpaint_ms; }

  static constexpr const char* kCsvHeader = "render_ms,inpaint_ms,depth_ms,stepsplat_ms,fuse_ms,total_ms";
  void write_csv_row(std::ostream& os) const {
    os << render_ms << ',' << inpaint_ms << ',' << depth_ms << ',' << stepsplat_ms << ',' << fuse_ms << ','
       << total_ms << '\n';
  }
};

struct PromptRecord {
  std::int64_t step = 0;
  std::string text;
};

struct SessionState {
  GaussianSet global;
  FeatureMemory memory;
  PipelineConfig config;
  Intrinsics intrinsics;
  std::int64_t step_count = 0;
  std::vector<PromptRecord> prompts;
};

struct StepResult {
  RenderOutput render;  // what the camera saw before fusion
  StepTiming timing;
  std::size_t added = 0;
  // Optional diagnostics, filled when requested.
  CostVolume cost_volume;
  DepthCandidates candidates;
};

struct StepOptions {
  bool keep_cost_volume = false;
};

namespace detail {

class Stopwatch {
 public:
  double lap_ms() {
    const auto now = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
    return ms;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

template <typename Fn>
decltype(auto) in_stage(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

inline RasterSettings raster_settings(const PipelineConfig& c) {
  RasterSettings s;
  s.threads = c.threads;
  return s;
}

}  // namespace detail

inline SessionState init_session(const ImageRGB& rgb, const DepthMap& depth, const Pose& pose, const Intrinsics& intr,
                                 PipelineConfig config) {
  config.width = intr.width;
  config.height = intr.height;
  config.validate();
  intr.validate();
  if (rgb.width() != intr.width || rgb.height() != intr.height || depth.width() != intr.width ||
      depth.height() != intr.height) {
    throw SizeError("init_session: image, depth and intrinsics sizes differ");
  }
  if (!depth.complete()) throw IncompleteDepthError("init_session: the initial depth map must be complete");

  SessionState state;
  state.config = config;
  state.intrinsics = intr;
  state.memory.set_max_entries(static_cast<std::size_t>(config.max_memory_entries));
  FeaturePair features = extract_features(rgb);
  const Raster<float> confidence(intr.width, intr.height, 1, 1.0f);
  const LocalGaussians local = decode_gaussians(rgb, depth, confidence, pose, intr, 0, {config.k_scale});
  fuse_into(state.global, local, pose, intr, config.delta, config.threads);
  state.memory.insert(pose, std::move(features.matching), 0);
  state.step_count = 1;
  return state;
}

inline StepResult step(SessionState& state, const Pose& pose, const std::string& prompt = {},
                       const StepOptions& options = {}) {
  const PipelineConfig& cfg = state.config;
  const Intrinsics& intr = state.intrinsics;
  if (state.step_count < 1) throw Error("step: session is not initialized");
  StepResult result;
  detail::Stopwatch total, lap;

  result.render = detail::in_stage("render", [&] { return render_view(state.global, pose, intr, cfg.tau, detail::raster_settings(cfg)); });
  const Mask known = make_hole_mask(result.render, cfg.tau);
  result.timing.render_ms = lap.lap_ms();

  const CompletionInput input{result.render.color, result.render.depth, known};
  const ImageRGB target_rgb = detail::in_stage("inpaint", [&] { return inpaint_color(input); });
  result.timing.inpaint_ms = lap.lap_ms();

  const DepthMap target_depth = detail::in_stage("depth", [&] {
    HarmonicSettings hs{cfg.harmonic_tolerance, cfg.harmonic_max_sweeps, cfg.bootstrap_depth, cfg.threads};
    return complete_depth(input, hs);
  });
  result.timing.depth_ms = lap.lap_ms();

  FeaturePair features;
  const LocalGaussians local = detail::in_stage("stepsplat", [&] {
    features = extract_features(target_rgb);
    const auto nearest = state.memory.query_nearest(pose, static_cast<std::size_t>(cfg.n_v), cfg.rotation_weight);
    DepthMap depth = target_depth;
    Raster<float> confidence(intr.width, intr.height, 1, 1.0f);
    if (!nearest.empty()) {
      std::vector<NeighborView> neighbors;
      for (const auto* e : nearest) neighbors.push_back({e->pose, &e->features});
      const Intrinsics feature_intr = intr.downscaled(kFeatureDownscale);
      const DepthCandidates candidates =
          make_depth_candidates(downsample_depth(target_depth, kFeatureDownscale), cfg.a, cfg.n_d);
      Mask observed;
      CostVolume volume =
          build_cost_volume(features.matching, neighbors, pose, feature_intr, candidates, cfg.threads, &observed);
      LowResDepth low = soft_argmax_depth(volume, candidates, cfg.temperature);
      if (cfg.bypass_unobserved) {
        for (std::size_t i = 0; i < low.confidence.size(); ++i)
          if (!observed.data()[i]) low.confidence[i] = 1.0;
      }
      DepthEstimate estimate = upsample_estimate(low, kFeatureDownscale);
      if (cfg.bypass_unobserved) {
        for (int y = 0; y < intr.height; ++y)
          for (int x = 0; x < intr.width; ++x)
            if (!observed.test(x / kFeatureDownscale, y / kFeatureDownscale)) estimate.depth.at(x, y) = target_depth.at(x, y);
      }
      depth = std::move(estimate.depth);
      confidence = std::move(estimate.confidence);
      if (options.keep_cost_volume) {
        result.cost_volume = std::move(volume);
        result.candidates = candidates;
      }
    }
    Mask holes;
    if (cfg.decode_holes_only) {
      holes = Mask(intr.width, intr.height);
      for (std::size_t i = 0; i < holes.data().size(); ++i) holes.data()[i] = known.data()[i] ? 0 : 1;
    }
    return decode_gaussians(target_rgb, depth, confidence, pose, intr, static_cast<std::int32_t>(state.step_count),
                            {cfg.k_scale}, cfg.decode_holes_only ? &holes : nullptr);
  });
  result.timing.stepsplat_ms = lap.lap_ms();

  result.added = detail::in_stage("fuse", [&] { return fuse_into(state.global, local, pose, intr, cfg.delta, cfg.threads); });
  state.memory.insert(pose, std::move(features.matching), state.step_count);
  if (!prompt.empty()) state.prompts.push_back({state.step_count, prompt});
  ++state.step_count;
  result.timing.fuse_ms = lap.lap_ms();
  result.timing.total_ms = total.lap_ms();
  return result;
}

inline std::vector<StepResult> run_trajectory(SessionState& state, const std::vector<Pose>& poses,
                                              const std::vector<std::string>& prompts) {
  if (poses.size() != prompts.size()) throw SizeError("run_trajectory: poses and prompts differ in length");
  std::vector<StepResult> out;
  out.reserve(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) out.push_back(step(state, poses[i], prompts[i]));
  return out;
}

inline RenderOutput render_session(const SessionState& state, const Pose& pose) {
  return render_view(state.global, pose, state.intrinsics, state.config.tau, detail::raster_settings(state.config));
}

}  // namespace incsplat
