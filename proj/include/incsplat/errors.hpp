// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace incsplat {

// Base of every error the engine raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raster dimensions are wrong for the operation (not divisible, mismatched, too small).
class SizeError : public Error {
 public:
  using Error::Error;
};

// A depth value that must be positive was not.
class InvalidDepthError : public Error {
 public:
  using Error::Error;
};

// A depth map that must be complete contains sentinel pixels.
class IncompleteDepthError : public Error {
 public:
  using Error::Error;
};

class OrderingError : public Error {
 public:
  using Error::Error;
};

class EmptyNeighborError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed encoded data. `offset()` is the byte position where decoding failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// A structured file or directory is missing a named component.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& what, std::string component)
      : Error(what + ": " + component), component_(std::move(component)) {}

  const std::string& component() const noexcept { return component_; }

 private:
  std::string component_;
};

// Wraps an error raised inside one pipeline stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace incsplat
