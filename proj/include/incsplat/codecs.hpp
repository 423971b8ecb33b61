// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// 8-bit PNG for color images and little-endian PFM for depth / float stacks.
// Byte layouts are documented in docs/formats.md.

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "incsplat/errors.hpp"
#include "incsplat/imaging.hpp"

namespace incsplat {

using Bytes = std::vector<std::uint8_t>;

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to " + path.string());
}

inline std::uint8_t quantize_unit(float v) {
  const float c = std::clamp(std::isfinite(v) ? v : 0.0f, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

namespace detail {

inline constexpr std::array<std::uint8_t, 8> kPngSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

inline void put_u32be(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t get_u32be(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

inline void put_chunk(Bytes& out, const char type[4], std::span<const std::uint8_t> payload) {
  put_u32be(out, static_cast<std::uint32_t>(payload.size()));
  const std::size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  const auto crc = crc32(0L, out.data() + type_at, static_cast<uInt>(payload.size() + 4));
  put_u32be(out, static_cast<std::uint32_t>(crc));
}

inline std::uint8_t paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a);
  const int pb = std::abs(p - b);
  const int pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return static_cast<std::uint8_t>(a);
  if (pb <= pc) return static_cast<std::uint8_t>(b);
  return static_cast<std::uint8_t>(c);
}

}  // namespace detail

// RGB8, non-interlaced, filter type 0 on every row.
inline Bytes encode_png(const ImageRGB& img) {
  const auto w = static_cast<std::uint32_t>(img.width());
  const auto h = static_cast<std::uint32_t>(img.height());
  Bytes out(detail::kPngSignature.begin(), detail::kPngSignature.end());

  Bytes ihdr;
  detail::put_u32be(ihdr, w);
  detail::put_u32be(ihdr, h);
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});
  detail::put_chunk(out, "IHDR", ihdr);

  Bytes raw;
  raw.reserve(static_cast<std::size_t>(h) * (1 + 3 * w));
  for (std::uint32_t y = 0; y < h; ++y) {
    raw.push_back(0);
    for (std::uint32_t x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) raw.push_back(quantize_unit(img.at(static_cast<int>(x), static_cast<int>(y), c)));
    }
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  Bytes packed(packed_size);
  if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw Error("encode_png: deflate failed");
  }
  packed.resize(packed_size);
  detail::put_chunk(out, "IDAT", packed);
  detail::put_chunk(out, "IEND", {});
  return out;
}

// Accepts 8-bit gray, gray+alpha, RGB and RGBA (alpha dropped), non-interlaced.
inline ImageRGB decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || !std::equal(detail::kPngSignature.begin(), detail::kPngSignature.end(), bytes.begin())) {
    throw ParseError("png: bad signature", 0);
  }
  std::size_t pos = 8;
  std::uint32_t width = 0, height = 0;
  int color_type = -1;
  bool seen_end = false;
  Bytes packed;
  while (pos < bytes.size() && !seen_end) {
    if (bytes.size() - pos < 12) throw ParseError("png: truncated chunk header", pos);
    const std::uint32_t len = detail::get_u32be(bytes.data() + pos);
    if (len > bytes.size() - pos - 12) throw ParseError("png: chunk length exceeds file", pos);
    const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
    const std::uint8_t* payload = bytes.data() + pos + 8;
    const std::uint32_t stored_crc = detail::get_u32be(payload + len);
    if (crc32(0L, bytes.data() + pos + 4, len + 4) != stored_crc) throw ParseError("png: CRC mismatch", pos);
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw ParseError("png: IHDR must be 13 bytes", pos);
      width = detail::get_u32be(payload);
      height = detail::get_u32be(payload + 4);
      const int depth = payload[8];
      color_type = payload[9];
      if (depth != 8) throw ParseError("png: only 8-bit samples supported", pos + 16);
      if (color_type != 0 && color_type != 2 && color_type != 4 && color_type != 6) {
        throw ParseError("png: unsupported color type", pos + 17);
      }
      if (payload[10] != 0 || payload[11] != 0) throw ParseError("png: unsupported compression/filter method", pos + 18);
      if (payload[12] != 0) throw ParseError("png: interlaced images not supported", pos + 20);
      if (width == 0 || height == 0 || width > (1u << 15) || height > (1u << 15) ||
          std::uint64_t{width} * height > (1u << 26)) {
        throw ParseError("png: unsupported dimensions", pos + 8);
      }
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      if (color_type < 0) throw ParseError("png: IDAT before IHDR", pos);
      packed.insert(packed.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      seen_end = true;
    }
    pos += 12 + static_cast<std::size_t>(len);
  }
  if (color_type < 0) throw ParseError("png: missing IHDR", 8);
  if (!seen_end) throw ParseError("png: missing IEND", pos);

  const int bpp = color_type == 0 ? 1 : color_type == 4 ? 2 : color_type == 2 ? 3 : 4;
  const std::size_t stride = static_cast<std::size_t>(width) * bpp;
  const std::size_t expected = (stride + 1) * height;
  Bytes raw(expected);
  uLongf raw_size = static_cast<uLongf>(expected);
  const int rc = uncompress(raw.data(), &raw_size, packed.data(), static_cast<uLong>(packed.size()));
  if (rc != Z_OK || raw_size != expected) throw ParseError("png: bad IDAT stream", pos);

  Bytes prev(stride, 0), cur(stride, 0);
  ImageRGB img(static_cast<int>(width), static_cast<int>(height));
  for (std::uint32_t y = 0; y < height; ++y) {
    const std::uint8_t* row = raw.data() + y * (stride + 1);
    const int filter = row[0];
    for (std::size_t i = 0; i < stride; ++i) {
      const int a = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
      const int b = prev[i];
      const int c = i >= static_cast<std::size_t>(bpp) ? prev[i - bpp] : 0;
      int pred = 0;
      switch (filter) {
        case 0: pred = 0; break;
        case 1: pred = a; break;
        case 2: pred = b; break;
        case 3: pred = (a + b) / 2; break;
        case 4: pred = detail::paeth(a, b, c); break;
        default: throw ParseError("png: unknown row filter " + std::to_string(filter), pos);
      }
      cur[i] = static_cast<std::uint8_t>(row[1 + i] + pred);
    }
    for (std::uint32_t x = 0; x < width; ++x) {
      const std::uint8_t* px = cur.data() + static_cast<std::size_t>(x) * bpp;
      const bool gray = color_type == 0 || color_type == 4;
      for (int c = 0; c < 3; ++c) {
        img.at(static_cast<int>(x), static_cast<int>(y), c) = (gray ? px[0] : px[c]) / 255.0f;
      }
    }
    std::swap(prev, cur);
  }
  return img;
}

inline void save_png(const std::filesystem::path& path, const ImageRGB& img) { write_file(path, encode_png(img)); }
inline ImageRGB load_png(const std::filesystem::path& path) { return decode_png(read_file(path)); }

// PFM: "Pf" (1 channel) or "PF" (3 channels), "W H", scale (negative = little endian),
// then float rows from the bottom row to the top row.
inline Bytes encode_pfm(const Raster<float>& raster) {
  if (raster.channels() != 1 && raster.channels() != 3) throw SizeError("pfm: 1 or 3 channels only");
  std::string header = (raster.channels() == 1 ? "Pf\n" : "PF\n") + std::to_string(raster.width()) + " " +
                       std::to_string(raster.height()) + "\n-1.0\n";
  Bytes out(header.begin(), header.end());
  const std::size_t row_values = static_cast<std::size_t>(raster.width()) * raster.channels();
  out.reserve(out.size() + raster.data().size() * 4);
  for (int y = raster.height() - 1; y >= 0; --y) {
    const float* row = raster.data().data() + static_cast<std::size_t>(y) * row_values;
    for (std::size_t i = 0; i < row_values; ++i) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(row[i]);
      for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
    }
  }
  return out;
}

inline Raster<float> decode_pfm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  const auto next_token = [&](const char* what) {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
    if (start == pos || pos - start > 32) throw ParseError(std::string("pfm: missing ") + what, start);
    return std::pair{std::string(bytes.begin() + start, bytes.begin() + pos), start};
  };
  const auto [magic, magic_at] = next_token("magic");
  int channels = 0;
  if (magic == "Pf") channels = 1;
  else if (magic == "PF") channels = 3;
  else throw ParseError("pfm: bad magic", magic_at);

  const auto parse_int = [](const std::string& s, std::size_t at) {
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size() || v <= 0 || v > (1 << 15)) throw ParseError("pfm: bad dimension", at);
    return static_cast<int>(v);
  };
  const auto [ws, w_at] = next_token("width");
  const int width = parse_int(ws, w_at);
  const auto [hs, h_at] = next_token("height");
  const int height = parse_int(hs, h_at);
  const auto [ss, s_at] = next_token("scale");
  char* end = nullptr;
  const double scale = std::strtod(ss.c_str(), &end);
  if (end != ss.c_str() + ss.size() || scale == 0.0 || !std::isfinite(scale)) throw ParseError("pfm: bad scale", s_at);
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw ParseError("pfm: missing header terminator", pos);
  ++pos;
  const bool little = scale < 0.0;

  const std::size_t row_values = static_cast<std::size_t>(width) * channels;
  const std::size_t need = row_values * height * 4;
  if (bytes.size() - pos != need) throw ParseError("pfm: payload size mismatch", pos);

  Raster<float> out(width, height, channels);
  for (int y = height - 1; y >= 0; --y) {
    float* row = out.data().data() + static_cast<std::size_t>(y) * row_values;
    for (std::size_t i = 0; i < row_values; ++i, pos += 4) {
      std::uint32_t bits = 0;
      for (int k = 0; k < 4; ++k) {
        const int shift = little ? 8 * k : 8 * (3 - k);
        bits |= std::uint32_t{bytes[pos + k]} << shift;
      }
      row[i] = std::bit_cast<float>(bits);
    }
  }
  return out;
}

inline Bytes encode_depth_pfm(const DepthMap& depth) { return encode_pfm(depth); }

inline DepthMap decode_depth_pfm(std::span<const std::uint8_t> bytes) {
  Raster<float> r = decode_pfm(bytes);
  if (r.channels() != 1) throw ParseError("pfm: depth must be single channel", 0);
  DepthMap d;
  static_cast<Raster<float>&>(d) = std::move(r);
  return d;
}

inline void save_depth_pfm(const std::filesystem::path& path, const DepthMap& depth) {
  write_file(path, encode_depth_pfm(depth));
}
inline DepthMap load_depth_pfm(const std::filesystem::path& path) { return decode_depth_pfm(read_file(path)); }

// Masks travel as grayscale PNG: white = known.
inline Mask mask_from_image(const ImageRGB& img) {
  Mask m(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) m.set(x, y, img.at(x, y, 0) >= 0.5f);
  return m;
}

inline ImageRGB image_from_mask(const Mask& m) {
  ImageRGB img(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = m.test(x, y) ? 1.0f : 0.0f;
  return img;
}

}  // namespace incsplat
