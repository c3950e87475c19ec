// Copyright Contributors to the octgrid Project
// SPDX-License-Identifier: Apache-2.0
//
// Dense reference implementations of the network operations. These are the
// oracle every octree-native operation is checked against, so they are kept
// deliberately plain.
//
#pragma once

#include <array>
#include <functional>
#include <vector>

#include "octgrid/grid_octree.hpp"

namespace octgrid {

/// C_out x C_in x L x M x N weights plus one bias per output channel. All
/// spatial extents are odd so the kernel is centred.
class ConvKernel {
 public:
  ConvKernel() = default;
  ConvKernel(int out_channels, int in_channels, std::array<int, 3> size, std::vector<float> weights,
             std::vector<float> bias);

  /// 1x1x1 kernel mapping each channel to itself, zero bias.
  static ConvKernel identity(int channels);

  int out_channels() const { return out_channels_; }
  int in_channels() const { return in_channels_; }
  const std::array<int, 3>& size() const { return size_; }
  int taps() const { return size_[0] * size_[1] * size_[2]; }
  bool is_cubic3() const { return size_ == std::array<int, 3>{3, 3, 3}; }

  float weight(int co, int ci, int l, int m, int n) const {
    return weights_[tap_base(co, ci) + static_cast<std::size_t>((l * size_[1] + m) * size_[2] + n)];
  }
  /// Flat view of the taps of one (co, ci) pair, (l, m, n) row-major.
  const float* taps_of(int co, int ci) const { return weights_.data() + tap_base(co, ci); }
  float bias(int co) const { return bias_[static_cast<std::size_t>(co)]; }

  const std::vector<float>& weights() const { return weights_; }
  const std::vector<float>& biases() const { return bias_; }

 private:
  std::size_t tap_base(int co, int ci) const {
    return (static_cast<std::size_t>(co) * static_cast<std::size_t>(in_channels_) + static_cast<std::size_t>(ci)) *
           static_cast<std::size_t>(taps());
  }

  int out_channels_ = 0;
  int in_channels_ = 0;
  std::array<int, 3> size_{1, 1, 1};
  std::vector<float> weights_;
  std::vector<float> bias_;
};

using PointwiseFn = std::function<float(float)>;

inline float relu(float x) { return x > 0.0f ? x : 0.0f; }

/// Stride-1 zero-padded convolution; out-of-range taps read zero. Sums are
/// accumulated in double as bias, then c_in, then l, m, n.
DenseTensor dense_conv(const DenseTensor& t, const ConvKernel& kernel);

/// Strided 2^3 pooling; throws std::invalid_argument on odd extents.
DenseTensor dense_pool2(const DenseTensor& t, PoolFn pool);
inline DenseTensor dense_maxpool2(const DenseTensor& t) { return dense_pool2(t, PoolFn::kMax); }

/// Nearest-neighbour 2^3 upsampling.
DenseTensor dense_unpool2(const DenseTensor& t);

DenseTensor dense_pointwise(const DenseTensor& t, const PointwiseFn& fn);

}  // namespace octgrid
