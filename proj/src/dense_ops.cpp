// Copyright Contributors to the octgrid Project
// SPDX-License-Identifier: Apache-2.0
//
#include "octgrid/dense_ops.hpp"

#include <stdexcept>
#include <string>

#include "pool_accumulator.hpp"

namespace octgrid {

ConvKernel::ConvKernel(int out_channels, int in_channels, std::array<int, 3> size, std::vector<float> weights,
                       std::vector<float> bias)
    : out_channels_(out_channels),
      in_channels_(in_channels),
      size_(size),
      weights_(std::move(weights)),
      bias_(std::move(bias)) {
  if (out_channels_ <= 0 || in_channels_ <= 0) throw std::invalid_argument("ConvKernel: channels must be positive");
  for (int s : size_) {
    if (s < 1 || s % 2 == 0) throw std::invalid_argument("ConvKernel: spatial extents must be odd and >= 1");
  }
  if (weights_.size() != static_cast<std::size_t>(out_channels_) * static_cast<std::size_t>(in_channels_) *
                             static_cast<std::size_t>(taps())) {
    throw std::invalid_argument("ConvKernel: weight count does not match C_out*C_in*L*M*N");
  }
  if (bias_.empty()) bias_.assign(static_cast<std::size_t>(out_channels_), 0.0f);
  if (bias_.size() != static_cast<std::size_t>(out_channels_)) {
    throw std::invalid_argument("ConvKernel: bias count does not match C_out");
  }
}

ConvKernel ConvKernel::identity(int channels) {
  std::vector<float> w(static_cast<std::size_t>(channels) * static_cast<std::size_t>(channels), 0.0f);
  for (int c = 0; c < channels; ++c) w[static_cast<std::size_t>(c * channels + c)] = 1.0f;
  return ConvKernel(channels, channels, {1, 1, 1}, std::move(w), {});
}

DenseTensor dense_conv(const DenseTensor& t, const ConvKernel& kernel) {
  if (t.channels() != kernel.in_channels()) {
    throw std::invalid_argument("dense_conv: tensor has " + std::to_string(t.channels()) +
                                " channels, kernel expects " + std::to_string(kernel.in_channels()));
  }
  const auto [L, M, N] = kernel.size();
  const auto [X, Y, Z] = t.shape();
  DenseTensor out(kernel.out_channels(), t.shape());
  for (int co = 0; co < kernel.out_channels(); ++co) {
    for (int i = 0; i < X; ++i) {
      for (int j = 0; j < Y; ++j) {
        for (int k = 0; k < Z; ++k) {
          double acc = kernel.bias(co);
          for (int ci = 0; ci < kernel.in_channels(); ++ci) {
            for (int l = 0; l < L; ++l) {
              const int ii = i - l + L / 2;
              if (ii < 0 || ii >= X) continue;
              for (int m = 0; m < M; ++m) {
                const int jj = j - m + M / 2;
                if (jj < 0 || jj >= Y) continue;
                for (int n = 0; n < N; ++n) {
                  const int kk = k - n + N / 2;
                  if (kk < 0 || kk >= Z) continue;
                  acc += static_cast<double>(kernel.weight(co, ci, l, m, n)) *
                         static_cast<double>(t.at(ci, ii, jj, kk));
                }
              }
            }
          }
          out.at(co, i, j, k) = static_cast<float>(acc);
        }
      }
    }
  }
  return out;
}

DenseTensor dense_pool2(const DenseTensor& t, PoolFn pool) {
  const auto [X, Y, Z] = t.shape();
  if (X % 2 != 0 || Y % 2 != 0 || Z % 2 != 0) {
    throw std::invalid_argument("dense_pool2: spatial extents must be even");
  }
  DenseTensor out(t.channels(), {X / 2, Y / 2, Z / 2});
  for (int c = 0; c < t.channels(); ++c) {
    for (int i = 0; i < X / 2; ++i) {
      for (int j = 0; j < Y / 2; ++j) {
        for (int k = 0; k < Z / 2; ++k) {
          detail::PoolAccumulator acc(pool);
          for (int l = 0; l < 2; ++l) {
            for (int m = 0; m < 2; ++m) {
              for (int n = 0; n < 2; ++n) acc.add(t.at(c, 2 * i + l, 2 * j + m, 2 * k + n));
            }
          }
          out.at(c, i, j, k) = acc.result();
        }
      }
    }
  }
  return out;
}

DenseTensor dense_unpool2(const DenseTensor& t) {
  const auto [X, Y, Z] = t.shape();
  DenseTensor out(t.channels(), {2 * X, 2 * Y, 2 * Z});
  for (int c = 0; c < t.channels(); ++c) {
    for (int i = 0; i < 2 * X; ++i) {
      for (int j = 0; j < 2 * Y; ++j) {
        for (int k = 0; k < 2 * Z; ++k) out.at(c, i, j, k) = t.at(c, i / 2, j / 2, k / 2);
      }
    }
  }
  return out;
}

DenseTensor dense_pointwise(const DenseTensor& t, const PointwiseFn& fn) {
  DenseTensor out = t;
  for (float& v : out.values()) v = fn(v);
  return out;
}

}  // namespace octgrid
