// Copyright Contributors to the octgrid Project
// SPDX-License-Identifier: Apache-2.0
//
// The hybrid grid-octree container: a D x H x W grid of shallow octrees with
// one contiguous feature array, plus the dense tensor it expands into.
//
// Axis convention: global voxel (i, j, k) indexes (depth, height, width) with
// k fastest. Inside a tree the local coordinate is x = k % 8, y = j % 8,
// z = i % 8, so octant order (x fastest) matches row-major voxel order.
//
#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "octgrid/tree_bits.hpp"

namespace octgrid {

struct GridDims {
  int d = 1;
  int h = 1;
  int w = 1;

  std::size_t num_trees() const {
    return static_cast<std::size_t>(d) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  std::array<int, 3> resolution() const { return {8 * d, 8 * h, 8 * w}; }
  std::size_t num_voxels() const { return num_trees() * 512; }
  friend bool operator==(const GridDims&, const GridDims&) = default;
};

struct VoxelCoord {
  int i = 0;
  int j = 0;
  int k = 0;
  friend bool operator==(const VoxelCoord&, const VoxelCoord&) = default;
};

enum class PoolFn { kMax, kAverage };

const char* to_string(PoolFn pool);
PoolFn parse_pool_fn(std::string_view name);

/// Tree structure of a whole grid, without features.
struct GridStructure {
  GridDims dims;
  std::vector<TreeBits> trees;  // row-major (d, h, w)

  GridStructure() = default;
  GridStructure(GridDims dims, std::vector<TreeBits> trees);

  static GridStructure uniform(GridDims dims, const TreeBits& tree);

  std::size_t tree_index(int td, int th, int tw) const {
    return (static_cast<std::size_t>(td) * static_cast<std::size_t>(dims.h) + static_cast<std::size_t>(th)) *
               static_cast<std::size_t>(dims.w) +
           static_cast<std::size_t>(tw);
  }
  std::array<int, 3> tree_coord(std::size_t t) const;

  std::size_t total_leaves() const;
  /// Prefix sums of leaf counts; size num_trees + 1.
  std::vector<std::size_t> leaf_offsets() const;

  friend bool operator==(const GridStructure&, const GridStructure&) = default;
};

/// Structure captured at a pooling layer input, used to re-split during
/// unpooling.
using GuideStructure = GridStructure;

/// Dense C x X x Y x Z float tensor, channels outermost, row-major.
class DenseTensor {
 public:
  DenseTensor() = default;
  DenseTensor(int channels, std::array<int, 3> shape, float fill = 0.0f);
  DenseTensor(int channels, std::array<int, 3> shape, std::vector<float> values);

  int channels() const { return channels_; }
  const std::array<int, 3>& shape() const { return shape_; }
  std::size_t spatial_size() const {
    return static_cast<std::size_t>(shape_[0]) * static_cast<std::size_t>(shape_[1]) *
           static_cast<std::size_t>(shape_[2]);
  }

  std::size_t offset(int c, int i, int j, int k) const {
    return ((static_cast<std::size_t>(c) * static_cast<std::size_t>(shape_[0]) + static_cast<std::size_t>(i)) *
                static_cast<std::size_t>(shape_[1]) +
            static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(shape_[2]) +
           static_cast<std::size_t>(k);
  }
  float at(int c, int i, int j, int k) const { return values_[offset(c, i, j, k)]; }
  float& at(int c, int i, int j, int k) { return values_[offset(c, i, j, k)]; }
  bool in_bounds(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < shape_[0] && j < shape_[1] && k < shape_[2];
  }

  std::span<const float> values() const { return values_; }
  std::span<float> values() { return values_; }

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  int channels_ = 0;
  std::array<int, 3> shape_{0, 0, 0};
  std::vector<float> values_;
};

/// Smallest cell containing a voxel. `data_offset` is the grid-global leaf
/// index; feature c of that leaf lives at data()[data_offset * C + c].
struct VoxelAddr {
  std::size_t tree_index = 0;
  NodeIndex node = 0;
  std::size_t data_offset = 0;
  VoxelCoord origin;
  int size = kTreeVoxels;
  friend bool operator==(const VoxelAddr&, const VoxelAddr&) = default;
};

/// A leaf of the grid with its global extent.
struct GridLeaf {
  std::size_t tree_index = 0;
  std::size_t leaf = 0;  // grid-global leaf index
  NodeIndex node = 0;
  int depth = 0;
  VoxelCoord origin;
  int size = kTreeVoxels;
};

class GridOctree {
 public:
  GridOctree() = default;
  /// Throws std::invalid_argument when data.size() != C * total leaves.
  GridOctree(GridStructure structure, int channels, std::vector<float> data);

  static GridOctree filled(GridStructure structure, int channels, float value = 0.0f);

  const GridStructure& structure() const { return structure_; }
  const GridDims& dims() const { return structure_.dims; }
  int channels() const { return channels_; }
  const TreeBits& tree(std::size_t t) const { return structure_.trees[t]; }
  std::size_t num_trees() const { return structure_.trees.size(); }
  std::size_t num_leaves() const { return leaf_offsets_.back(); }
  std::size_t leaf_base(std::size_t t) const { return leaf_offsets_[t]; }
  std::array<int, 3> resolution() const { return structure_.dims.resolution(); }

  std::span<const float> data() const { return data_; }
  std::span<const float> leaf_values(std::size_t leaf) const {
    return std::span<const float>(data_).subspan(leaf * static_cast<std::size_t>(channels_),
                                                 static_cast<std::size_t>(channels_));
  }

  bool in_bounds(VoxelCoord v) const;

  /// Throws std::out_of_range for voxels outside the grid.
  VoxelAddr locate(VoxelCoord v) const;
  /// Grid-global leaf index of the cell containing v; v must be in bounds.
  std::size_t leaf_at(VoxelCoord v) const {
    const std::size_t t = structure_.tree_index(v.i / 8, v.j / 8, v.k / 8);
    return leaf_offsets_[t] +
           static_cast<std::size_t>(structure_.trees[t].leaf_data_index({v.k % 8, v.j % 8, v.i % 8}));
  }
  /// Feature vector of the smallest cell containing v.
  std::span<const float> get(VoxelCoord v) const;

  /// Leaves of one tree in data order, with global extents.
  std::vector<GridLeaf> tree_leaves(std::size_t t) const;

  friend bool operator==(const GridOctree& a, const GridOctree& b) {
    return a.channels_ == b.channels_ && a.structure_ == b.structure_ && a.data_ == b.data_;
  }

 private:
  VoxelAddr locate_unchecked(VoxelCoord v) const;

  GridStructure structure_;
  int channels_ = 0;
  std::vector<std::size_t> leaf_offsets_{0};
  std::vector<float> data_;
};

bool same_structure(const GridOctree& a, const GridOctree& b);

DenseTensor oct_to_ten(const GridOctree& grid, int threads = 1);

/// Pools `t` over every leaf of `structure`. Throws std::invalid_argument on
/// a shape mismatch.
GridOctree ten_to_oct(const DenseTensor& t, const GridStructure& structure, PoolFn pool, int threads = 1);

using DenseFn = std::function<DenseTensor(const DenseTensor&)>;

/// ten_to_oct(f(oct_to_ten(grid))) on the input structure. The reference
/// path every octree-native operation is compared against.
GridOctree wrap_dense(const DenseFn& f, const GridOctree& grid, PoolFn pool);

/// Same as above, pooling onto an explicitly supplied output structure.
GridOctree wrap_dense(const DenseFn& f, const GridOctree& grid, const GridStructure& out_structure,
                      PoolFn pool);

}  // namespace octgrid
