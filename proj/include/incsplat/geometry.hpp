// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "incsplat/errors.hpp"

namespace incsplat {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Pinhole camera. Continuous pixel coordinates: pixel (i, j) covers [i, i+1) x [j, j+1),
// so its center sits at (i + 0.5, j + 0.5). Origin is the top-left image corner.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.5;
  double cy = 0.5;
  int width = 1;
  int height = 1;

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && width > 0 && height > 0 && cx > 0.0 && cx < width &&
           cy > 0.0 && cy < height;
  }

  void validate() const {
    if (!valid()) throw SizeError("invalid intrinsics");
  }

  // Intrinsics of the same camera at 1/factor resolution. Continuous coordinates scale
  // directly, which keeps pixel centers aligned with the box-downsampled grid.
  Intrinsics downscaled(int factor) const {
    return {fx / factor, fy / factor, cx / factor, cy / factor, width / factor, height / factor};
  }

  friend bool operator==(const Intrinsics&, const Intrinsics&) = default;
};

// Camera-to-world rigid transform. The camera looks down +Z with +X right and +Y down.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  static Pose from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }

  // Yaw turns about the world Y axis, pitch about the camera X axis (positive looks down).
  static Pose from_yaw_pitch(double yaw_rad, double pitch_rad, const Vec3& position = Vec3::Zero()) {
    const Mat3 yaw = Eigen::AngleAxisd(yaw_rad, Vec3::UnitY()).toRotationMatrix();
    const Mat3 pitch = Eigen::AngleAxisd(-pitch_rad, Vec3::UnitX()).toRotationMatrix();
    return {yaw * pitch, position};
  }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 1>() = translation;
    return m;
  }

  Pose inverse() const {
    const Mat3 rt = rotation.transpose();
    return {rt, -rt * translation};
  }

  // this ∘ other: applies `other` first, then this transform.
  Pose compose(const Pose& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  Vec3 to_world(const Vec3& camera_point) const { return rotation * camera_point + translation; }
  Vec3 to_camera(const Vec3& world_point) const {
    return rotation.transpose() * (world_point - translation);
  }

  bool is_rigid(double tol = 1e-6) const {
    return (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol;
  }

  // Row-major 3x4 [R | t], the wire format for poses.
  std::array<double, 12> to_row_major() const {
    std::array<double, 12> out{};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out[r * 4 + c] = rotation(r, c);
      out[r * 4 + 3] = translation(r);
    }
    return out;
  }

  static Pose from_row_major(std::span<const double> v) {
    if (v.size() != 12) throw SizeError("pose needs 12 numbers, got " + std::to_string(v.size()));
    Pose p;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) p.rotation(r, c) = v[r * 4 + c];
      p.translation(r) = v[r * 4 + 3];
    }
    return p;
  }

  friend bool operator==(const Pose& a, const Pose& b) {
    return a.rotation == b.rotation && a.translation == b.translation;
  }
};

struct PixelProjection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

// World point to continuous pixel coordinates. nullopt when the point is not in front of
// the camera (Z <= 0); points outside the image are still returned.
inline std::optional<PixelProjection> project_point(const Pose& pose, const Intrinsics& intr,
                                                    const Vec3& x_world) {
  const Vec3 p = pose.to_camera(x_world);
  if (!(p.z() > 0.0)) return std::nullopt;
  return PixelProjection{intr.fx * p.x() / p.z() + intr.cx, intr.fy * p.y() / p.z() + intr.cy,
                         p.z()};
}

inline Vec3 unproject_to_camera(const Intrinsics& intr, double u, double v, double depth) {
  return {(u - intr.cx) / intr.fx * depth, (v - intr.cy) / intr.fy * depth, depth};
}

inline Vec3 unproject_pixel(const Pose& pose, const Intrinsics& intr, double u, double v,
                            double depth) {
  if (!(depth > 0.0) || !std::isfinite(depth)) {
    throw InvalidDepthError("unproject_pixel: depth must be positive, got " + std::to_string(depth));
  }
  return pose.to_world(unproject_to_camera(intr, u, v, depth));
}

// Transform taking frame `a` to frame `b`: a.compose(relative_pose(a, b)) == b.
inline Pose relative_pose(const Pose& a, const Pose& b) { return a.inverse().compose(b); }

// Frobenius norm of the difference of the two homogeneous matrices, with the rotation
// block scaled by `rotation_weight`.
inline double pose_distance(const Pose& a, const Pose& b, double rotation_weight = 1.0) {
  const double rot = (a.rotation - b.rotation).squaredNorm();
  const double trans = (a.translation - b.translation).squaredNorm();
  return std::sqrt(rotation_weight * rotation_weight * rot + trans);
}

}  // namespace incsplat
