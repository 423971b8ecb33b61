// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Synthetic ground truth: textured rectangles ray-cast to exact RGB-D, plus the standard
// camera trajectories (panorama, forward walk, orbit).

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "incsplat/errors.hpp"
#include "incsplat/geometry.hpp"
#include "incsplat/imaging.hpp"

namespace incsplat::testkit {

using Color = std::array<double, 3>;

struct CheckerLayer {
  double period = 0.25;  // square size in scene units along both texture axes
  Color amplitude{0.1, 0.1, 0.1};  // added on even squares, subtracted on odd ones
};

// Square cells of side `cell`, each shifted by amplitude * u with u in [-1, 1] drawn from a
// hash of (cell index, seed).
struct SpeckleLayer {
  double cell = 0.02;
  Color amplitude{0.1, 0.1, 0.1};
  std::uint64_t seed = 0;
};

// color(s, t) = base + gradient_s * s / extent_s + gradient_t * t / extent_t
//               + sum over checker layers of +-amplitude + sum over speckle layers,
//               clamped to [0, 1].
struct Texture {
  Color base{0.5, 0.5, 0.5};
  Color gradient_s{0.0, 0.0, 0.0};
  Color gradient_t{0.0, 0.0, 0.0};
  std::vector<CheckerLayer> checkers;
  std::vector<SpeckleLayer> speckles;
};

// Finite rectangle origin + s * axis_s + t * axis_t, (s, t) in [0, extent_s] x [0, extent_t].
// The axes must be orthonormal.
struct Rect {
  Vec3 origin = Vec3::Zero();
  Vec3 axis_s = Vec3::UnitX();
  Vec3 axis_t = Vec3::UnitY();
  double extent_s = 1.0;
  double extent_t = 1.0;
  Texture texture;
};

struct SyntheticScene {
  std::vector<Rect> rects;
  Color background{0.0, 0.0, 0.0};
};

enum class SceneKind { room, corridor, plane_field };
enum class TrajectoryKind { panorama, walk_forward, orbit };

inline constexpr double kBackgroundDepth = 100.0;

inline int checker_sign(double s, double t, double period) {
  const auto k = static_cast<long long>(std::floor(s / period)) + static_cast<long long>(std::floor(t / period));
  return (k % 2 == 0) ? 1 : -1;
}

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform in [-1, 1], one value per (cell, channel).
inline double speckle_value(double s, double t, const SpeckleLayer& layer, int channel) {
  const auto i = static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(s / layer.cell)));
  const auto j = static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(t / layer.cell)));
  const std::uint64_t h = mix64(mix64(mix64(layer.seed ^ i) ^ j) + static_cast<std::uint64_t>(channel));
  return 2.0 * static_cast<double>(h >> 11) / 9007199254740992.0 - 1.0;
}

inline Color shade(const Texture& tex, double s, double t, double extent_s, double extent_t) {
  Color c{};
  for (int k = 0; k < 3; ++k) {
    double v = tex.base[k] + tex.gradient_s[k] * s / extent_s + tex.gradient_t[k] * t / extent_t;
    for (const auto& layer : tex.checkers) v += checker_sign(s, t, layer.period) * layer.amplitude[k];
    for (const auto& layer : tex.speckles) v += speckle_value(s, t, layer, k) * layer.amplitude[k];
    c[k] = std::clamp(v, 0.0, 1.0);
  }
  return c;
}

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  Color color{};
};

// Nearest intersection along origin + t * dir for t > 0.
inline Hit cast_ray(const SyntheticScene& scene, const Vec3& origin, const Vec3& dir) {
  Hit best;
  best.color = scene.background;
  for (const auto& r : scene.rects) {
    const Vec3 n = r.axis_s.cross(r.axis_t);
    const double denom = n.dot(dir);
    if (std::abs(denom) < 1e-12) continue;
    const double t = n.dot(r.origin - origin) / denom;
    if (!(t > 1e-9) || t >= best.t) continue;
    const Vec3 rel = origin + t * dir - r.origin;
    const double s = rel.dot(r.axis_s);
    const double tt = rel.dot(r.axis_t);
    if (s < 0.0 || s > r.extent_s || tt < 0.0 || tt > r.extent_t) continue;
    best.t = t;
    best.color = shade(r.texture, s, tt, r.extent_s, r.extent_t);
  }
  return best;
}

struct GroundTruthView {
  ImageRGB image;
  DepthMap depth;
  Mask surface;  // pixels that hit a primitive (not background)
};

// Rays through pixel centers. With the camera-frame direction ((u - cx) / fx, (v - cy) / fy, 1)
// the ray parameter equals camera Z, so depth is exact.
inline GroundTruthView render_ground_truth(const SyntheticScene& scene, const Pose& pose, const Intrinsics& intr) {
  GroundTruthView out{ImageRGB(intr.width, intr.height), DepthMap(intr.width, intr.height), Mask(intr.width, intr.height)};
  for (int y = 0; y < intr.height; ++y) {
    for (int x = 0; x < intr.width; ++x) {
      const Vec3 dir = pose.rotation * unproject_to_camera(intr, x + 0.5, y + 0.5, 1.0);
      const Hit hit = cast_ray(scene, pose.translation, dir);
      const bool surface = std::isfinite(hit.t);
      for (int c = 0; c < 3; ++c) out.image.at(x, y, c) = static_cast<float>(hit.color[c]);
      out.depth.at(x, y) = static_cast<float>(surface ? hit.t : kBackgroundDepth);
      out.surface.set(x, y, surface);
    }
  }
  return out;
}

inline Rect make_rect(const Vec3& origin, const Vec3& axis_s, const Vec3& axis_t, double extent_s, double extent_t,
                      Texture texture) {
  return {origin, axis_s.normalized(), axis_t.normalized(), extent_s, extent_t, std::move(texture)};
}

// Fronto-parallel (normal along -Z) rectangle centered on the optical axis at `depth`.
inline Rect facing_plane(double depth, double half_width, double half_height, Texture texture) {
  return make_rect({-half_width, -half_height, depth}, Vec3::UnitX(), Vec3::UnitY(), 2 * half_width, 2 * half_height,
                   std::move(texture));
}

// Multi-scale texture with two incommensurate checker periods and a gentle gradient.
inline Texture rich_texture(std::mt19937_64& rng, double contrast, double period_scale = 1.0) {
  std::uniform_real_distribution<double> base(0.35, 0.65);
  std::uniform_real_distribution<double> jitter(0.8, 1.2);
  Texture t;
  t.base = {base(rng), base(rng), base(rng)};
  t.gradient_s = {0.08 * jitter(rng), -0.05 * jitter(rng), 0.04 * jitter(rng)};
  t.gradient_t = {-0.04 * jitter(rng), 0.06 * jitter(rng), 0.05 * jitter(rng)};
  t.checkers.push_back({0.11 * period_scale * jitter(rng), {contrast, 0.8 * contrast, 0.6 * contrast}});
  t.checkers.push_back({0.29 * period_scale * jitter(rng), {-0.5 * contrast, 0.6 * contrast, 0.9 * contrast}});
  return t;
}

namespace detail {

inline constexpr double kRoomPeriodScale = 3.0;

inline SyntheticScene make_room(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> size(0.9, 1.1);
  const double hx = 2.0 * size(rng), hz = 2.2 * size(rng);
  const double floor_y = 1.2 * size(rng), ceil_y = -1.3 * size(rng);
  const double height = floor_y - ceil_y;
  // Low-contrast surfaces of similar albedo keep inpainted walls close to the truth.
  const auto wall = [&](double contrast) {
    Texture t = rich_texture(rng, contrast, kRoomPeriodScale);
    for (auto& b : t.base) b = 0.45 + 0.1 * (b - 0.35) / 0.3;
    for (int k = 0; k < 3; ++k) {
      t.gradient_s[k] *= 0.5;
      t.gradient_t[k] *= 0.5;
    }
    return t;
  };
  SyntheticScene s;
  s.background = {0.0, 0.0, 0.0};
  // floor, ceiling, then the four walls (+z, -z, +x, -x)
  s.rects.push_back(make_rect({-hx, floor_y, -hz}, Vec3::UnitX(), Vec3::UnitZ(), 2 * hx, 2 * hz, wall(0.03)));
  s.rects.push_back(make_rect({-hx, ceil_y, -hz}, Vec3::UnitX(), Vec3::UnitZ(), 2 * hx, 2 * hz, wall(0.02)));
  s.rects.push_back(make_rect({-hx, ceil_y, hz}, Vec3::UnitX(), Vec3::UnitY(), 2 * hx, height, wall(0.04)));
  s.rects.push_back(make_rect({-hx, ceil_y, -hz}, Vec3::UnitX(), Vec3::UnitY(), 2 * hx, height, wall(0.04)));
  s.rects.push_back(make_rect({hx, ceil_y, -hz}, Vec3::UnitZ(), Vec3::UnitY(), 2 * hz, height, wall(0.04)));
  s.rects.push_back(make_rect({-hx, ceil_y, -hz}, Vec3::UnitZ(), Vec3::UnitY(), 2 * hz, height, wall(0.04)));
  return s;
}

inline SyntheticScene make_corridor(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> size(0.9, 1.1);
  const double hx = 0.8 * size(rng), length = 8.0 * size(rng);
  const double floor_y = 1.0, ceil_y = -1.2;
  const double height = floor_y - ceil_y;
  SyntheticScene s;
  s.background = {0.2, 0.2, 0.25};
  s.rects.push_back(make_rect({-hx, floor_y, -1.0}, Vec3::UnitX(), Vec3::UnitZ(), 2 * hx, length, rich_texture(rng, 0.08)));
  s.rects.push_back(make_rect({-hx, ceil_y, -1.0}, Vec3::UnitX(), Vec3::UnitZ(), 2 * hx, length, rich_texture(rng, 0.05)));
  s.rects.push_back(make_rect({-hx, ceil_y, -1.0}, Vec3::UnitZ(), Vec3::UnitY(), length, height, rich_texture(rng, 0.1)));
  s.rects.push_back(make_rect({hx, ceil_y, -1.0}, Vec3::UnitZ(), Vec3::UnitY(), length, height, rich_texture(rng, 0.1)));
  s.rects.push_back(make_rect({-hx, ceil_y, length - 1.0}, Vec3::UnitX(), Vec3::UnitY(), 2 * hx, height, rich_texture(rng, 0.1)));
  return s;
}

inline SyntheticScene make_plane_field(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> depth(1.5, 4.0);
  std::uniform_real_distribution<double> offset(-1.0, 1.0);
  SyntheticScene s;
  s.background = {0.1, 0.1, 0.1};
  s.rects.push_back(facing_plane(6.0, 6.0, 6.0, rich_texture(rng, 0.1)));
  for (int i = 0; i < 4; ++i) {
    const double d = depth(rng);
    const double half = 0.3 + 0.1 * i;
    s.rects.push_back(make_rect({offset(rng) * d * 0.4 - half, offset(rng) * d * 0.3 - half, d}, Vec3::UnitX(),
                                Vec3::UnitY(), 2 * half, 2 * half, rich_texture(rng, 0.15)));
  }
  return s;
}

}  // namespace detail

inline SyntheticScene build_synthetic_scene(std::uint64_t seed, SceneKind kind) {
  std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(kind) + 1)));
  switch (kind) {
    case SceneKind::room: return detail::make_room(rng);
    case SceneKind::corridor: return detail::make_corridor(rng);
    case SceneKind::plane_field: return detail::make_plane_field(rng);
  }
  throw Error("unknown scene kind");
}

// Speckle of `cell` scene units and amplitude `contrast` over fainter checkers; the stereo target.
inline SyntheticScene textured_plane_scene(std::uint64_t seed, double depth, double contrast = 0.4,
                                          double cell = 0.02) {
  std::mt19937_64 rng(seed);
  Texture tex = rich_texture(rng, 0.25 * contrast);
  tex.speckles.push_back({cell, {contrast, contrast, contrast}, rng()});
  SyntheticScene s;
  s.rects.push_back(facing_plane(depth, 4.0 * depth, 4.0 * depth, std::move(tex)));
  return s;
}

inline std::vector<Pose> standard_trajectory(TrajectoryKind kind, int n, const Vec3& center = Vec3::Zero(),
                                             double radius = 1.0) {
  if (n < 1) throw Error("standard_trajectory: n must be at least 1");
  std::vector<Pose> poses;
  poses.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    switch (kind) {
      case TrajectoryKind::panorama: {
        const double yaw = 2.0 * std::numbers::pi * i / n;
        poses.push_back(Pose::from_yaw_pitch(yaw, 0.0, center));
        break;
      }
      case TrajectoryKind::walk_forward:
        poses.push_back(Pose::from_translation(center + Vec3(0.0, 0.0, 0.2 * i)));
        break;
      case TrajectoryKind::orbit: {
        // Camera on a horizontal circle around `center`, looking at it.
        const double angle = 2.0 * std::numbers::pi * i / n;
        const Vec3 position = center - radius * Vec3(std::sin(angle), 0.0, std::cos(angle));
        poses.push_back(Pose::from_yaw_pitch(angle, 0.0, position));
        break;
      }
    }
  }
  return poses;
}

inline std::string to_string(SceneKind k) {
  switch (k) {
    case SceneKind::room: return "room";
    case SceneKind::corridor: return "corridor";
    case SceneKind::plane_field: return "plane_field";
  }
  return "unknown";
}

inline SceneKind parse_scene_kind(const std::string& s) {
  if (s == "room") return SceneKind::room;
  if (s == "corridor") return SceneKind::corridor;
  if (s == "plane_field") return SceneKind::plane_field;
  throw Error("unknown scene kind: " + s);
}

inline TrajectoryKind parse_trajectory_kind(const std::string& s) {
  if (s == "panorama") return TrajectoryKind::panorama;
  if (s == "walk_forward" || s == "walk") return TrajectoryKind::walk_forward;
  if (s == "orbit") return TrajectoryKind::orbit;
  throw Error("unknown trajectory kind: " + s);
}

// Square image with the given horizontal field of view and the principal point at the center.
inline Intrinsics default_intrinsics(int size = 128, double fov_deg = 90.0) {
  const double f = 0.5 * size / std::tan(0.5 * fov_deg * std::numbers::pi / 180.0);
  return {f, f, 0.5 * size, 0.5 * size, size, size};
}

}  // namespace incsplat::testkit
