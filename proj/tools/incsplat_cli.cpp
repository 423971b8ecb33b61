// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "incsplat/incsplat.hpp"
#include "incsplat/service.hpp"

namespace fs = std::filesystem;
using namespace incsplat;

namespace {

// Flags that map one-to-one onto PipelineConfig keys; only the ones given become overrides.
struct ConfigFlags {
  std::string config_file;
  int n_d = 0, n_v = 0, max_memory_entries = 0, threads = 0, harmonic_max_sweeps = 0;
  double a = 0, temperature = 0, delta = 0, tau = 0, k_scale = 0, bootstrap_depth = 0, rotation_weight = 0,
         harmonic_tolerance = 0;
  bool decode_all_pixels = false, literal_unobserved = false;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "JSON file with PipelineConfig keys")->check(CLI::ExistingFile);
    const auto add = [&](const char* flag, const char* key, auto& target, const char* help) {
      options.emplace_back(key, app->add_option(flag, target, help));
    };
    add("--n-d", "n_d", n_d, "depth candidates per pixel");
    add("--a", "a", a, "candidate band half-width as a fraction of the guide depth");
    add("--n-v", "n_v", n_v, "neighbor views from memory");
    add("--temperature", "temperature", temperature, "softmax temperature");
    add("--delta", "delta", delta, "relative depth tolerance of fusion");
    add("--tau", "tau", tau, "coverage threshold for holes");
    add("--k-scale", "k_scale", k_scale, "Gaussian radius in pixel footprints");
    add("--bootstrap-depth", "bootstrap_depth", bootstrap_depth, "depth used when nothing is known");
    add("--rotation-weight", "rotation_weight", rotation_weight, "rotation weight of the pose distance");
    add("--max-memory-entries", "max_memory_entries", max_memory_entries, "feature memory cap, 0 = unbounded");
    add("--threads", "threads", threads, "worker threads, 0 = hardware concurrency");
    add("--harmonic-tolerance", "harmonic_tolerance", harmonic_tolerance, "depth fill stopping residual");
    add("--harmonic-max-sweeps", "harmonic_max_sweeps", harmonic_max_sweeps, "depth fill sweep cap");
    options.emplace_back("decode_holes_only", app->add_flag("--decode-all-pixels", decode_all_pixels,
                                                            "decode Gaussians at covered pixels too"));
    options.emplace_back("bypass_unobserved",
                         app->add_flag("--literal-unobserved", literal_unobserved,
                                       "keep cost-volume confidence at pixels no neighbor observes"));
  }

  nlohmann::json overrides() const {
    nlohmann::json j = nlohmann::json::object();
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      j = nlohmann::json::parse(in);
    }
    const auto value_of = [&](const std::string& key) -> nlohmann::json {
      if (key == "n_d") return n_d;
      if (key == "a") return a;
      if (key == "n_v") return n_v;
      if (key == "temperature") return temperature;
      if (key == "delta") return delta;
      if (key == "tau") return tau;
      if (key == "k_scale") return k_scale;
      if (key == "bootstrap_depth") return bootstrap_depth;
      if (key == "rotation_weight") return rotation_weight;
      if (key == "max_memory_entries") return max_memory_entries;
      if (key == "threads") return threads;
      if (key == "harmonic_tolerance") return harmonic_tolerance;
      if (key == "harmonic_max_sweeps") return harmonic_max_sweeps;
      if (key == "decode_holes_only") return !decode_all_pixels;
      return !literal_unobserved;
    };
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) j[key] = value_of(key);
    return j;
  }
};

// "r00,r01,r02,t0,..." or a path to a JSON file holding the 12-number array.
Pose parse_pose(const std::string& text) {
  if (fs::exists(text)) {
    std::ifstream in(text);
    return pose_from_json(nlohmann::json::parse(in));
  }
  return pose_from_json(SessionService::parse_pose_list(text));
}

std::vector<Pose> read_pose_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  const nlohmann::json j = nlohmann::json::parse(in);
  std::vector<Pose> poses;
  for (const auto& p : j) poses.push_back(pose_from_json(p));
  return poses;
}

Intrinsics read_intrinsics(const std::string& text) {
  if (fs::exists(text)) {
    std::ifstream in(text);
    return intrinsics_from_json(nlohmann::json::parse(in));
  }
  return intrinsics_from_json(nlohmann::json::parse(text));
}

void write_timing_csv(const fs::path& path, const std::vector<StepTiming>& rows) {
  std::ofstream out(path);
  out << StepTiming::kCsvHeader << '\n';
  for (const auto& t : rows) t.write_csv_row(out);
}

void dump_cost_volume(const fs::path& dir, const CostVolume& volume, const DepthCandidates& candidates) {
  fs::create_directories(dir);
  for (int s = 0; s < volume.count(); ++s) {
    Raster<float> slice(volume.width(), volume.height(), 1);
    Raster<float> plane(volume.width(), volume.height(), 1);
    const auto scores = volume.slice(s);
    const auto depths = candidates.plane(s);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      slice.data()[i] = static_cast<float>(scores[i]);
      plane.data()[i] = static_cast<float>(depths[i]);
    }
    char name[64];
    std::snprintf(name, sizeof name, "score_%03d.pfm", s);
    write_file(dir / name, encode_pfm(slice));
    std::snprintf(name, sizeof name, "depth_%03d.pfm", s);
    write_file(dir / name, encode_pfm(plane));
  }
}

void print_timing(std::int64_t step, const StepResult& r, std::size_t total) {
  const StepTiming& t = r.timing;
  std::printf("step %lld: +%zu gaussians (%zu total) render %.1f inpaint %.1f depth %.1f stepsplat %.1f fuse %.1f total %.1f ms\n",
              static_cast<long long>(step), r.added, total, t.render_ms, t.inpaint_ms, t.depth_ms, t.stepsplat_ms,
              t.fuse_ms, t.total_ms);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"incsplat: incremental Gaussian scene generation from a moving camera"};
  app.require_subcommand(1);

  // init
  auto* init = app.add_subcommand("init", "start a session from an RGB image and a depth map");
  std::string session_dir, image_path, depth_path, pose_text, intr_text;
  double constant_depth = 0.0;
  ConfigFlags init_flags;
  init->add_option("--session", session_dir, "session directory to create")->required();
  init->add_option("--image", image_path, "RGB PNG")->required()->check(CLI::ExistingFile);
  auto* depth_opt = init->add_option("--depth", depth_path, "depth PFM")->check(CLI::ExistingFile);
  init->add_option("--constant-depth", constant_depth, "use this depth at every pixel")->excludes(depth_opt);
  init->add_option("--pose", pose_text, "12 comma-separated numbers or a JSON file")->required();
  init->add_option("--intrinsics", intr_text, "JSON object or file with fx, fy, cx, cy, width, height")->required();
  init_flags.attach(init);

  // step
  auto* stp = app.add_subcommand("step", "advance a session to a new pose");
  std::string prompt, frame_out, cost_dump, timing_csv;
  stp->add_option("--session", session_dir, "session directory")->required()->check(CLI::ExistingDirectory);
  stp->add_option("--pose", pose_text, "12 comma-separated numbers or a JSON file")->required();
  stp->add_option("--prompt", prompt, "text prompt recorded with the step");
  stp->add_option("--frame", frame_out, "write the pre-fusion render here (PNG)");
  stp->add_option("--dump-cost-volume", cost_dump, "write cost-volume slices and candidate depths as PFM");
  stp->add_option("--timing-csv", timing_csv, "write the stage timings as CSV");

  // run-trajectory
  auto* traj = app.add_subcommand("run-trajectory", "run a list of poses through a session");
  std::string poses_path, kind_text = "panorama", frames_dir, prompts_path;
  int traj_n = 8;
  traj->add_option("--session", session_dir, "session directory")->required()->check(CLI::ExistingDirectory);
  auto* poses_opt = traj->add_option("--poses", poses_path, "JSON array of 12-number poses")->check(CLI::ExistingFile);
  traj->add_option("--kind", kind_text, "standard trajectory when --poses is absent: panorama, walk_forward, orbit")
      ->excludes(poses_opt);
  traj->add_option("--n", traj_n, "poses in the standard trajectory")->excludes(poses_opt);
  traj->add_option("--prompts", prompts_path, "JSON array of prompts, one per pose")->check(CLI::ExistingFile);
  traj->add_option("--frames", frames_dir, "directory for per-step PNG frames");
  traj->add_option("--timing-csv", timing_csv, "timing CSV path (default <session>/timing.csv)");

  // render
  auto* rnd = app.add_subcommand("render", "render a session or PLY from a pose");
  std::string ply_path, out_png, out_depth;
  double tau = 0.5;
  auto* rs = rnd->add_option("--session", session_dir, "session directory")->check(CLI::ExistingDirectory);
  auto* rp = rnd->add_option("--ply", ply_path, "Gaussian PLY instead of a session")->check(CLI::ExistingFile);
  rs->excludes(rp);
  rnd->add_option("--intrinsics", intr_text, "intrinsics (required with --ply)");
  rnd->add_option("--tau", tau, "coverage threshold (with --ply)");
  rnd->add_option("--pose", pose_text, "12 comma-separated numbers or a JSON file")->required();
  rnd->add_option("--out", out_png, "PNG output")->required();
  rnd->add_option("--depth-out", out_depth, "PFM depth output");

  // complete
  auto* cmp = app.add_subcommand("complete", "fill holes in an RGB-D pair");
  std::string mask_path, out_rgb;
  cmp->add_option("--image", image_path, "RGB PNG")->required()->check(CLI::ExistingFile);
  cmp->add_option("--depth", depth_path, "depth PFM, 0 marks unknown")->required()->check(CLI::ExistingFile);
  cmp->add_option("--mask", mask_path, "PNG, white = known (default: depth > 0)")->check(CLI::ExistingFile);
  cmp->add_option("--out-image", out_rgb, "filled PNG")->required();
  cmp->add_option("--out-depth", out_depth, "filled PFM")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "time pipeline steps on a synthetic room");
  int bench_steps = 8, bench_size = 128;
  std::uint64_t seed = 7;
  ConfigFlags bench_flags;
  bench->add_option("--steps", bench_steps, "panorama steps");
  bench->add_option("--size", bench_size, "image side in pixels");
  bench->add_option("--seed", seed, "scene seed");
  bench->add_option("--timing-csv", timing_csv, "write the stage timings as CSV");
  bench_flags.attach(bench);

  // gen-gt
  auto* gen = app.add_subcommand("gen-gt", "write ground-truth views of a synthetic scene");
  std::string out_dir, scene_text = "room";
  int gen_size = 128;
  double fov = 90.0;
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_option("--scene", scene_text, "room, corridor or plane_field");
  gen->add_option("--seed", seed, "scene seed");
  gen->add_option("--trajectory", kind_text, "panorama, walk_forward or orbit");
  gen->add_option("--n", traj_n, "number of views");
  gen->add_option("--size", gen_size, "image side in pixels");
  gen->add_option("--fov", fov, "horizontal field of view in degrees");

  // serve
  auto* srv = app.add_subcommand("serve", "run the HTTP session service");
  std::string bind;
  srv->add_option("--bind", bind, "host:port (default from INCSPLAT_BIND or 127.0.0.1:8080)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (init->parsed()) {
      const Intrinsics intr = read_intrinsics(intr_text);
      const ImageRGB rgb = load_png(image_path);
      DepthMap depth;
      if (!depth_path.empty()) {
        depth = load_depth_pfm(depth_path);
      } else if (constant_depth > 0.0) {
        depth = DepthMap(rgb.width(), rgb.height(), static_cast<float>(constant_depth));
      } else {
        throw ConfigError("init needs --depth or a positive --constant-depth");
      }
      const PipelineConfig config = apply_overrides(PipelineConfig{}, init_flags.overrides());
      const SessionState state = init_session(rgb, depth, parse_pose(pose_text), intr, config);
      save_session(session_dir, state);
      std::printf("session %s: %zu gaussians\n", session_dir.c_str(), state.global.size());
    } else if (stp->parsed()) {
      SessionState state = load_session(session_dir);
      StepOptions options;
      options.keep_cost_volume = !cost_dump.empty();
      const StepResult r = step(state, parse_pose(pose_text), prompt, options);
      save_session(session_dir, state);
      if (!frame_out.empty()) save_png(frame_out, r.render.color);
      if (!cost_dump.empty()) dump_cost_volume(cost_dump, r.cost_volume, r.candidates);
      if (!timing_csv.empty()) write_timing_csv(timing_csv, {r.timing});
      print_timing(state.step_count - 1, r, state.global.size());
    } else if (traj->parsed()) {
      SessionState state = load_session(session_dir);
      std::vector<Pose> poses;
      if (!poses_path.empty()) {
        poses = read_pose_list(poses_path);
      } else {
        poses = testkit::standard_trajectory(testkit::parse_trajectory_kind(kind_text), traj_n);
      }
      std::vector<std::string> prompts(poses.size());
      if (!prompts_path.empty()) {
        std::ifstream in(prompts_path);
        prompts = nlohmann::json::parse(in).get<std::vector<std::string>>();
      }
      if (!frames_dir.empty()) fs::create_directories(frames_dir);
      std::vector<StepTiming> rows;
      if (prompts.size() != poses.size()) throw SizeError("run-trajectory: prompts and poses differ in length");
      for (std::size_t i = 0; i < poses.size(); ++i) {
        const StepResult r = step(state, poses[i], prompts[i]);
        rows.push_back(r.timing);
        print_timing(state.step_count - 1, r, state.global.size());
        if (!frames_dir.empty()) {
          char name[32];
          std::snprintf(name, sizeof name, "frame_%04zu.png", i);
          save_png(fs::path(frames_dir) / name, r.render.color);
        }
      }
      save_session(session_dir, state);
      write_timing_csv(timing_csv.empty() ? fs::path(session_dir) / "timing.csv" : fs::path(timing_csv), rows);
    } else if (rnd->parsed()) {
      RenderOutput r;
      if (!session_dir.empty()) {
        r = render_session(load_session(session_dir), parse_pose(pose_text));
      } else if (!ply_path.empty()) {
        if (intr_text.empty()) throw ConfigError("render --ply needs --intrinsics");
        r = render_view(load_ply(ply_path), parse_pose(pose_text), read_intrinsics(intr_text), tau);
      } else {
        throw ConfigError("render needs --session or --ply");
      }
      save_png(out_png, r.color);
      if (!out_depth.empty()) save_depth_pfm(out_depth, r.depth);
    } else if (cmp->parsed()) {
      CompletionInput input{load_png(image_path), load_depth_pfm(depth_path), {}};
      if (!mask_path.empty()) {
        input.known = mask_from_image(load_png(mask_path));
      } else {
        input.known = Mask(input.depth.width(), input.depth.height());
        for (std::size_t i = 0; i < input.depth.pixel_count(); ++i)
          input.known.data()[i] = input.depth.data()[i] > 0.0f ? 1 : 0;
      }
      save_png(out_rgb, inpaint_color(input));
      save_depth_pfm(out_depth, complete_depth(input));
    } else if (bench->parsed()) {
      const PipelineConfig config = apply_overrides(PipelineConfig{}, bench_flags.overrides());
      const auto scene = testkit::build_synthetic_scene(seed, testkit::SceneKind::room);
      const Intrinsics intr = testkit::default_intrinsics(bench_size, 90.0);
      const auto poses = testkit::standard_trajectory(testkit::TrajectoryKind::panorama, bench_steps);
      const auto gt = testkit::render_ground_truth(scene, poses[0], intr);
      SessionState state = init_session(gt.image, gt.depth, poses[0], intr, config);
      std::vector<StepTiming> rows;
      StepTiming sum;
      for (std::size_t i = 1; i < poses.size(); ++i) {
        const StepResult r = step(state, poses[i]);
        rows.push_back(r.timing);
        print_timing(state.step_count - 1, r, state.global.size());
        sum.render_ms += r.timing.render_ms;
        sum.inpaint_ms += r.timing.inpaint_ms;
        sum.depth_ms += r.timing.depth_ms;
        sum.stepsplat_ms += r.timing.stepsplat_ms;
        sum.fuse_ms += r.timing.fuse_ms;
        sum.total_ms += r.timing.total_ms;
      }
      const double n = std::max<std::size_t>(1, rows.size());
      std::printf("mean per step: geometry %.3f s, appearance %.3f s, total %.3f s\n", sum.geometry_ms() / n / 1000.0,
                  sum.appearance_ms() / n / 1000.0, sum.total_ms / n / 1000.0);
      std::printf("published GPU reference: geometry 0.50 s, appearance 0.22 s, total 0.72 s\n");
      if (!timing_csv.empty()) write_timing_csv(timing_csv, rows);
    } else if (gen->parsed()) {
      const auto scene = testkit::build_synthetic_scene(seed, testkit::parse_scene_kind(scene_text));
      const Intrinsics intr = testkit::default_intrinsics(gen_size, fov);
      const auto poses = testkit::standard_trajectory(testkit::parse_trajectory_kind(kind_text), traj_n);
      fs::create_directories(out_dir);
      nlohmann::json pose_list = nlohmann::json::array();
      for (std::size_t i = 0; i < poses.size(); ++i) {
        const auto view = testkit::render_ground_truth(scene, poses[i], intr);
        char name[32];
        std::snprintf(name, sizeof name, "view_%04zu", i);
        save_png(fs::path(out_dir) / (std::string(name) + ".png"), view.image);
        save_depth_pfm(fs::path(out_dir) / (std::string(name) + ".pfm"), view.depth);
        pose_list.push_back(pose_to_json(poses[i]));
      }
      std::ofstream(fs::path(out_dir) / "poses.json") << pose_list.dump(2) << '\n';
      std::ofstream(fs::path(out_dir) / "intrinsics.json") << intrinsics_to_json(intr).dump(2) << '\n';
      std::printf("wrote %zu views to %s\n", poses.size(), out_dir.c_str());
    } else if (srv->parsed()) {
      auto [host, port] = bind_address_from_env();
      if (!bind.empty()) {
        const auto colon = bind.rfind(':');
        if (colon == std::string::npos) throw ConfigError("--bind must be host:port");
        host = bind.substr(0, colon);
        port = std::stoi(bind.substr(colon + 1));
      }
      SessionService service(ServiceLimits::from_env());
      std::printf("listening on %s:%d\n", host.c_str(), port);
      std::fflush(stdout);
      return serve(service, host, port);
    }
  } catch (const StageError& e) {
    std::fprintf(stderr, "error in stage %s: %s\n", e.stage().c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
