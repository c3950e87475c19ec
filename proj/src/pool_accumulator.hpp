// Copyright Contributors to the octgrid Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstddef>
#include <limits>

#include "octgrid/grid_octree.hpp"

namespace octgrid::detail {

/// Running max or mean over float samples. The mean is accumulated in double
/// so that averaging up to 512 copies of one float is exact.
class PoolAccumulator {
 public:
  explicit PoolAccumulator(PoolFn fn) : fn_(fn) {}

  void add(float v) {
    if (fn_ == PoolFn::kMax) {
      if (count_ == 0 || v > max_) max_ = v;
    } else {
      sum_ += static_cast<double>(v);
    }
    ++count_;
  }

  /// Adds `n` copies of v.
  void add_repeated(float v, std::size_t n) {
    if (n == 0) return;
    if (fn_ == PoolFn::kMax) {
      if (count_ == 0 || v > max_) max_ = v;
    } else {
      sum_ += static_cast<double>(v) * static_cast<double>(n);
    }
    count_ += n;
  }

  float result() const {
    if (count_ == 0) return 0.0f;
    if (fn_ == PoolFn::kMax) return max_;
    return static_cast<float>(sum_ / static_cast<double>(count_));
  }

 private:
  PoolFn fn_;
  std::size_t count_ = 0;
  double sum_ = 0.0;
  float max_ = -std::numeric_limits<float>::infinity();
};

}  // namespace octgrid::detail
