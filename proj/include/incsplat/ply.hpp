// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Binary little-endian PLY for Gaussian sets. Writer emits the fixed property order
// x y z scale qw qx qy qz opacity red green blue (float) source_step (int); the reader
// accepts any property order and the common scalar types.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "incsplat/codecs.hpp"
#include "incsplat/errors.hpp"
#include "incsplat/gaussians.hpp"

namespace incsplat {

inline constexpr std::array<const char*, 12> kPlyFloatProperties = {
    "x", "y", "z", "scale", "qw", "qx", "qy", "qz", "opacity", "red", "green", "blue"};

inline Bytes encode_ply(const GaussianSet& g) {
  std::ostringstream header;
  header << "ply\nformat binary_little_endian 1.0\nelement vertex " << g.size() << "\n";
  for (const char* name : kPlyFloatProperties) header << "property float " << name << "\n";
  header << "property int source_step\nend_header\n";
  const std::string h = header.str();
  Bytes out(h.begin(), h.end());
  out.reserve(out.size() + g.size() * (12 * 4 + 4));
  const auto put32 = [&out](std::uint32_t bits) {
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
  };
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::array<float, 12> v = {g.center[i][0],   g.center[i][1],   g.center[i][2],   g.scale[i],
                                     g.rotation[i][0], g.rotation[i][1], g.rotation[i][2], g.rotation[i][3],
                                     g.opacity[i],     g.color[i][0],    g.color[i][1],    g.color[i][2]};
    for (const float f : v) put32(std::bit_cast<std::uint32_t>(f));
    put32(static_cast<std::uint32_t>(g.source_step[i]));
  }
  return out;
}

namespace detail {

struct PlyProperty {
  std::string type;
  std::size_t offset = 0;
  std::size_t size = 0;
};

inline std::size_t ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" || t == "float32") return 4;
  if (t == "double" || t == "float64") return 8;
  return 0;
}

inline double ply_read_scalar(const std::uint8_t* p, const PlyProperty& prop) {
  std::uint64_t bits = 0;
  for (std::size_t k = 0; k < prop.size; ++k) bits |= std::uint64_t{p[k]} << (8 * k);
  const std::string& t = prop.type;
  if (t == "float" || t == "float32") return std::bit_cast<float>(static_cast<std::uint32_t>(bits));
  if (t == "double" || t == "float64") return std::bit_cast<double>(bits);
  if (t == "int" || t == "int32") return static_cast<std::int32_t>(bits);
  if (t == "uint" || t == "uint32") return static_cast<std::uint32_t>(bits);
  if (t == "short" || t == "int16") return static_cast<std::int16_t>(bits);
  if (t == "ushort" || t == "uint16") return static_cast<std::uint16_t>(bits);
  if (t == "char" || t == "int8") return static_cast<std::int8_t>(bits);
  return static_cast<std::uint8_t>(bits);
}

}  // namespace detail

inline GaussianSet decode_ply(std::span<const std::uint8_t> bytes) {
  const std::string_view marker = "end_header\n";
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), std::min<std::size_t>(bytes.size(), 1 << 16));
  const std::size_t end = text.find(marker);
  if (text.substr(0, 4) != "ply\n") throw ParseError("ply: missing magic", 0);
  if (end == std::string_view::npos) throw ParseError("ply: missing end_header", 0);

  std::istringstream header{std::string(text.substr(0, end))};
  std::string line;
  std::size_t vertex_count = 0;
  bool in_vertex = false, have_vertex = false, little = false;
  std::size_t stride = 0;
  std::map<std::string, detail::PlyProperty> props;
  std::size_t line_at = 0;
  while (std::getline(header, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "binary_little_endian") throw ParseError("ply: only binary_little_endian supported", line_at);
      little = true;
    } else if (word == "element") {
      std::string name;
      ls >> name;
      in_vertex = name == "vertex";
      if (in_vertex) {
        if (!(ls >> vertex_count)) throw ParseError("ply: bad vertex count", line_at);
        have_vertex = true;
      } else if (have_vertex) {
        break;  // trailing elements are ignored
      } else {
        throw ParseError("ply: vertex must be the first element", line_at);
      }
    } else if (word == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      if (type == "list") throw ParseError("ply: list properties not supported on vertices", line_at);
      const std::size_t size = detail::ply_type_size(type);
      if (size == 0) throw ParseError("ply: unknown property type " + type, line_at);
      props[name] = {type, stride, size};
      stride += size;
    }
    line_at += line.size() + 1;
  }
  if (!little) throw ParseError("ply: missing format line", 0);
  if (!have_vertex) throw SchemaError("ply: missing element", "vertex");
  for (const char* name : kPlyFloatProperties)
    if (!props.contains(name)) throw SchemaError("ply: missing property", name);
  if (!props.contains("source_step")) throw SchemaError("ply: missing property", "source_step");

  const std::size_t data_at = end + marker.size();
  if (stride == 0 || (bytes.size() - data_at) / stride < vertex_count) {
    throw ParseError("ply: vertex data truncated", bytes.size());
  }
  std::array<detail::PlyProperty, 12> fp;
  for (std::size_t k = 0; k < fp.size(); ++k) fp[k] = props.at(kPlyFloatProperties[k]);
  const auto step_prop = props.at("source_step");

  GaussianSet g;
  g.reserve(vertex_count);
  for (std::size_t i = 0; i < vertex_count; ++i) {
    const std::uint8_t* row = bytes.data() + data_at + i * stride;
    std::array<float, 12> v{};
    for (std::size_t k = 0; k < fp.size(); ++k) {
      // Float properties are copied bit-for-bit; other types convert through double.
      if (fp[k].type == "float" || fp[k].type == "float32") {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= std::uint32_t{row[fp[k].offset + b]} << (8 * b);
        v[k] = std::bit_cast<float>(bits);
      } else {
        v[k] = static_cast<float>(detail::ply_read_scalar(row + fp[k].offset, fp[k]));
      }
    }
    g.push_back({v[0], v[1], v[2]}, v[3], {v[4], v[5], v[6], v[7]}, v[8], {v[9], v[10], v[11]},
                static_cast<std::int32_t>(detail::ply_read_scalar(row + step_prop.offset, step_prop)));
  }
  return g;
}

inline void save_ply(const std::filesystem::path& path, const GaussianSet& g) { write_file(path, encode_ply(g)); }
inline GaussianSet load_ply(const std::filesystem::path& path) { return decode_ply(read_file(path)); }

}  // namespace incsplat
