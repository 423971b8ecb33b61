// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "incsplat/errors.hpp"
#include "incsplat/geometry.hpp"
#include "incsplat/imaging.hpp"

namespace incsplat {

struct MemoryEntry {
  Pose pose;
  FeatureMap features;
  std::int64_t step_index = 0;
};

// Ordered store of (pose, matching features) from earlier steps. Linear scan on query.
class FeatureMemory {
 public:
  // max_entries == 0 means unbounded; otherwise the oldest entry is evicted first.
  explicit FeatureMemory(std::size_t max_entries = 0) : max_entries_(max_entries) {}

  void insert(const Pose& pose, FeatureMap features, std::int64_t step_index) {
    if (!entries_.empty() && step_index <= entries_.back().step_index) {
      throw OrderingError("feature memory: step index " + std::to_string(step_index) +
                          " not greater than " + std::to_string(entries_.back().step_index));
    }
    entries_.push_back({pose, std::move(features), step_index});
    if (max_entries_ > 0 && entries_.size() > max_entries_) entries_.erase(entries_.begin());
  }

  // Up to n_v entries sorted by ascending pose distance; equal distances prefer the more
  // recent entry.
  std::vector<const MemoryEntry*> query_nearest(const Pose& pose, std::size_t n_v,
                                                double rotation_weight = 1.0) const {
    if (n_v == 0) throw Error("query_nearest: n_v must be at least 1");
    struct Ranked {
      double distance;
      const MemoryEntry* entry;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(entries_.size());
    for (const auto& e : entries_) ranked.push_back({pose_distance(e.pose, pose, rotation_weight), &e});
    const auto before = [](const Ranked& a, const Ranked& b) {
      if (a.distance != b.distance) return a.distance < b.distance;
      return a.entry->step_index > b.entry->step_index;
    };
    const std::size_t k = std::min(n_v, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end(), before);
    std::vector<const MemoryEntry*> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(ranked[i].entry);
    return out;
  }

  const std::vector<MemoryEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t max_entries() const noexcept { return max_entries_; }
  void set_max_entries(std::size_t n) noexcept { max_entries_ = n; }

 private:
  std::size_t max_entries_ = 0;
  std::vector<MemoryEntry> entries_;
};

}  // namespace incsplat
