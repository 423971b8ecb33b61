// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

// Builds a synthetic room, starts a session from its ground-truth view and walks a short
// panorama, printing per-step growth and timing.

#include <cstdio>

#include "incsplat/incsplat.hpp"

int main() {
  using namespace incsplat;
  const testkit::SyntheticScene scene = testkit::build_synthetic_scene(7, testkit::SceneKind::room);
  const Intrinsics intr = testkit::default_intrinsics(128, 90.0);
  const auto poses = testkit::standard_trajectory(testkit::TrajectoryKind::panorama, 8);

  const testkit::GroundTruthView first = testkit::render_ground_truth(scene, poses[0], intr);
  SessionState state = init_session(first.image, first.depth, poses[0], intr, PipelineConfig{});
  std::printf("init: %zu gaussians\n", state.global.size());

  for (std::size_t i = 1; i < poses.size(); ++i) {
    const StepResult r = step(state, poses[i], "continue the room");
    std::printf("step %zu: +%zu gaussians, total %zu, %.1f ms\n", i, r.added, state.global.size(), r.timing.total_ms);
  }

  double sum = 0.0;
  for (const Pose& pose : poses) {
    const testkit::GroundTruthView gt = testkit::render_ground_truth(scene, pose, intr);
    sum += psnr(render_session(state, pose).color, gt.image);
  }
  std::printf("mean re-render PSNR: %.2f dB\n", sum / static_cast<double>(poses.size()));
  return 0;
}
