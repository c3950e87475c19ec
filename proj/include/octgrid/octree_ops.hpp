// Copyright Contributors to the octgrid Project
// SPDX-License-Identifier: Apache-2.0
//
// Network operations evaluated directly on a GridOctree.
//
#pragma once

#include <cstdint>

#include "octgrid/dense_ops.hpp"
#include "octgrid/grid_octree.hpp"

namespace octgrid {

/// Work counters for the convolution paths. `multiplications` counts
/// weight-times-feature products, including taps that fall into the zero
/// padding outside the grid, so the count depends only on structure and
/// kernel shape.
struct OpStats {
  std::uint64_t multiplications = 0;
  std::uint64_t cells_visited = 0;
  std::uint64_t boundary_voxels_evaluated = 0;
  /// Set when conv_efficient could not decompose the kernel and ran the
  /// per-voxel path for every cell.
  bool naive_fallback = false;

  OpStats& operator+=(const OpStats& o) {
    multiplications += o.multiplications;
    cells_visited += o.cells_visited;
    boundary_voxels_evaluated += o.boundary_voxels_evaluated;
    naive_fallback = naive_fallback || o.naive_fallback;
    return *this;
  }
  friend bool operator==(const OpStats&, const OpStats&) = default;
};

struct ConvResult {
  GridOctree grid;
  OpStats stats;
};

/// Convolution evaluated at every voxel of every cell, pooled back onto the
/// input structure.
ConvResult conv_naive(const GridOctree& grid, const ConvKernel& kernel, PoolFn pool, int threads = 1);

/// Same contract as conv_naive. For 3x3x3 kernels, cells of edge >= 4 compute
/// their constant interior response once and evaluate only the surface voxels
/// with truncated kernels. Other kernel shapes fall back to conv_naive.
ConvResult conv_efficient(const GridOctree& grid, const ConvKernel& kernel, PoolFn pool, int threads = 1);

/// Structure after 2^3 pooling: every output root split, input depths shift
/// down by one and input depth-2 splits collapse.
GridStructure pool2_structure(const GridStructure& in);
GridOctree pool2(const GridOctree& grid, PoolFn pool);

/// Structure after 2^3 unpooling: each input root child spawns a tree.
GridStructure unpool2_structure(const GridStructure& in);
GridOctree unpool2(const GridOctree& grid);

/// Nearest-neighbour unpooling onto the structure of the matching pooling
/// input. Voxelwise equal to dense unpooling whenever `guide` refines
/// unpool2_structure(grid.structure()), which holds for encoder guides.
GridOctree unpool2_guided(const GridOctree& grid, const GuideStructure& guide);

GridOctree pointwise(const GridOctree& grid, const PointwiseFn& fn);

/// Channel concatenation of two grids with identical structure; a's
/// channels come first.
GridOctree concat(const GridOctree& a, const GridOctree& b);

}  // namespace octgrid
