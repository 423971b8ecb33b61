// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "incsplat/errors.hpp"
#include "incsplat/features.hpp"
#include "incsplat/geometry.hpp"

namespace incsplat {

struct PipelineConfig {
  int n_d = 16;                // depth candidates per pixel
  double a = 0.25;             // candidate band half-width, fraction of guide depth
  int n_v = 2;                 // neighbor views taken from memory
  double temperature = 0.05;   // softmax temperature for depth regression
  double delta = 0.05;         // relative depth tolerance of fusion
  double tau = 0.5;            // coverage threshold separating holes from rendered pixels
  double k_scale = 1.0;        // Gaussian radius in pixel footprints
  double bootstrap_depth = 2.0;
  double rotation_weight = 1.0;
  bool decode_holes_only = true;   // false decodes every pixel and leaves redundancy to fusion
  bool bypass_unobserved = true;  // pixels no neighbor sees take the guide depth with confidence 1
  int max_memory_entries = 0;  // 0 = unbounded
  int width = 128;
  int height = 128;
  int threads = 0;             // 0 = hardware concurrency
  double harmonic_tolerance = 1e-4;
  int harmonic_max_sweeps = 10000;

  void validate() const {
    const auto fail = [](const std::string& what) { throw ConfigError("config: " + what); };
    if (n_d < 2) fail("n_d must be >= 2");
    if (!(a > 0.0 && a < 1.0)) fail("a must be in (0, 1)");
    if (n_v < 1) fail("n_v must be >= 1");
    if (!(temperature > 0.0)) fail("temperature must be > 0");
    // delta = 0 is accepted: nothing is ever redundant and every local Gaussian is kept.
    if (!(delta >= 0.0 && delta < 1.0)) fail("delta must be in [0, 1)");
    if (!(tau > 0.0 && tau <= 1.0)) fail("tau must be in (0, 1]");
    if (!(k_scale > 0.0)) fail("k_scale must be > 0");
    if (!(bootstrap_depth > 0.0)) fail("bootstrap_depth must be > 0");
    if (!(rotation_weight >= 0.0)) fail("rotation_weight must be >= 0");
    if (max_memory_entries < 0) fail("max_memory_entries must be >= 0");
    if (width <= 0 || height <= 0 || width % kFeatureDownscale != 0 || height % kFeatureDownscale != 0) {
      fail("image size must be positive and divisible by " + std::to_string(kFeatureDownscale));
    }
    if (threads < 0) fail("threads must be >= 0");
    if (!(harmonic_tolerance > 0.0)) fail("harmonic_tolerance must be > 0");
    if (harmonic_max_sweeps < 1) fail("harmonic_max_sweeps must be >= 1");
  }

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PipelineConfig, n_d, a, n_v, temperature, delta, tau, k_scale,
                                                bootstrap_depth, rotation_weight, decode_holes_only,
                                                bypass_unobserved,
                                                max_memory_entries, width, height, threads, harmonic_tolerance,
                                                harmonic_max_sweeps)

// Applies only the keys present in `overrides`; unknown keys are rejected.
inline PipelineConfig apply_overrides(PipelineConfig base, const nlohmann::json& overrides) {
  if (overrides.is_null()) return base;
  if (!overrides.is_object()) throw ConfigError("config overrides must be an object");
  nlohmann::json merged = base;
  for (const auto& [key, value] : overrides.items()) {
    if (!merged.contains(key)) throw ConfigError("unknown config key: " + key);
    merged[key] = value;
  }
  try {
    base = merged.get<PipelineConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  base.validate();
  return base;
}

inline nlohmann::json intrinsics_to_json(const Intrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

inline Intrinsics intrinsics_from_json(const nlohmann::json& j) {
  Intrinsics k;
  try {
    k = {j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
         j.at("cy").get<double>(), j.at("width").get<int>(),  j.at("height").get<int>()};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad intrinsics: ") + e.what());
  }
  k.validate();
  return k;
}

inline nlohmann::json pose_to_json(const Pose& p) { return p.to_row_major(); }

inline Pose pose_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 12) throw ConfigError("pose must be an array of 12 numbers");
  std::array<double, 12> v{};
  for (std::size_t i = 0; i < 12; ++i) {
    if (!j[i].is_number()) throw ConfigError("pose must be an array of 12 numbers");
    v[i] = j[i].get<double>();
  }
  Pose p = Pose::from_row_major(v);
  if (!p.is_rigid(1e-6)) throw ConfigError("pose rotation is not orthonormal");
  return p;
}

}  // namespace incsplat
