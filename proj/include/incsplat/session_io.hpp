// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Session directory layout:
//   config.json          PipelineConfig
//   global.ply           global Gaussians
//   memory/NNNNNN.pfm    one feature stack per memory entry, channels stacked vertically
//   memory/poses.json    [{step_index, pose, width, height, channels, file}]
//   metadata.json        step_count, prompts, intrinsics

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "incsplat/codecs.hpp"
#include "incsplat/config.hpp"
#include "incsplat/errors.hpp"
#include "incsplat/pipeline.hpp"
#include "incsplat/ply.hpp"

namespace incsplat {

namespace detail {

inline Raster<float> stack_channels(const FeatureMap& f) {
  Raster<float> out(f.width(), f.height() * f.channels(), 1);
  for (int c = 0; c < f.channels(); ++c)
    for (int y = 0; y < f.height(); ++y)
      for (int x = 0; x < f.width(); ++x) out.at(x, c * f.height() + y) = f.at(x, y, c);
  return out;
}

inline FeatureMap unstack_channels(const Raster<float>& s, int width, int height, int channels) {
  if (s.channels() != 1 || s.width() != width || s.height() != height * channels) {
    throw SizeError("feature stack has unexpected dimensions");
  }
  FeatureMap f(width, height, channels);
  for (int c = 0; c < channels; ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) f.at(x, y, c) = s.at(x, c * height + y);
  return f;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error("cannot write " + path.string());
}

inline nlohmann::json read_json(const std::filesystem::path& path, const std::string& component) {
  std::ifstream in(path);
  if (!in) throw SchemaError("session: missing " + component + " (" + path.string() + ")", component);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("session: corrupt " + component + ": " + e.what(), component);
  }
}

template <typename Fn>
decltype(auto) as_component(const std::string& component, Fn&& fn) {
  try {
    return fn();
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    throw SchemaError("session: corrupt " + component + ": " + e.what(), component);
  }
}

inline std::string memory_file_name(std::int64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06lld.pfm", static_cast<long long>(step));
  return buf;
}

}  // namespace detail

inline nlohmann::json session_metadata(const SessionState& state) {
  nlohmann::json prompts = nlohmann::json::array();
  for (const auto& p : state.prompts) prompts.push_back({{"step", p.step}, {"text", p.text}});
  return {{"step_count", state.step_count},
          {"prompts", prompts},
          {"intrinsics", intrinsics_to_json(state.intrinsics)},
          {"gaussian_count", state.global.size()},
          {"memory_size", state.memory.size()}};
}

inline void save_session(const std::filesystem::path& dir, const SessionState& state) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "memory");
  for (const auto& entry : fs::directory_iterator(dir / "memory")) {
    if (entry.path().extension() == ".pfm") fs::remove(entry.path());
  }
  detail::write_json(dir / "config.json", nlohmann::json(state.config));
  save_ply(dir / "global.ply", state.global);
  nlohmann::json poses = nlohmann::json::array();
  for (const auto& e : state.memory.entries()) {
    const std::string file = detail::memory_file_name(e.step_index);
    write_file(dir / "memory" / file, encode_pfm(detail::stack_channels(e.features)));
    poses.push_back({{"step_index", e.step_index},
                     {"pose", pose_to_json(e.pose)},
                     {"width", e.features.width()},
                     {"height", e.features.height()},
                     {"channels", e.features.channels()},
                     {"file", file}});
  }
  detail::write_json(dir / "memory" / "poses.json", poses);
  detail::write_json(dir / "metadata.json", session_metadata(state));
}

inline SessionState load_session(const std::filesystem::path& dir) {
  SessionState state;
  const nlohmann::json config = detail::read_json(dir / "config.json", "config");
  state.config = detail::as_component("config", [&] { return apply_overrides(PipelineConfig{}, config); });

  const nlohmann::json meta = detail::read_json(dir / "metadata.json", "metadata");
  detail::as_component("metadata", [&] {
    state.step_count = meta.at("step_count").get<std::int64_t>();
    state.intrinsics = intrinsics_from_json(meta.at("intrinsics"));
    for (const auto& p : meta.at("prompts")) {
      state.prompts.push_back({p.at("step").get<std::int64_t>(), p.at("text").get<std::string>()});
    }
    return 0;
  });

  if (!std::filesystem::exists(dir / "global.ply")) throw SchemaError("session: missing global.ply", "global");
  state.global = detail::as_component("global", [&] { return load_ply(dir / "global.ply"); });
  if (const std::string why = state.global.check(); !why.empty()) {
    throw SchemaError("session: corrupt global: " + why, "global");
  }

  const nlohmann::json poses = detail::read_json(dir / "memory" / "poses.json", "memory");
  state.memory.set_max_entries(static_cast<std::size_t>(state.config.max_memory_entries));
  detail::as_component("memory", [&] {
    for (const auto& p : poses) {
      const auto file = dir / "memory" / p.at("file").get<std::string>();
      if (!std::filesystem::exists(file)) throw SchemaError("session: missing memory entry " + file.string(), "memory");
      FeatureMap f = detail::unstack_channels(decode_pfm(read_file(file)), p.at("width").get<int>(),
                                              p.at("height").get<int>(), p.at("channels").get<int>());
      state.memory.insert(pose_from_json(p.at("pose")), std::move(f), p.at("step_index").get<std::int64_t>());
    }
    return 0;
  });
  if (static_cast<std::int64_t>(state.memory.size()) > state.step_count) {
    throw SchemaError("session: more memory entries than steps", "memory");
  }
  return state;
}

}  // namespace incsplat
