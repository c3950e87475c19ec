// Copyright Contributors to the octgrid Project
// SPDX-License-Identifier: Apache-2.0
//
#include "octgrid/grid_octree.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "octgrid/parallel.hpp"
#include "pool_accumulator.hpp"

namespace octgrid {

const char* to_string(PoolFn pool) { return pool == PoolFn::kMax ? "max" : "avg"; }

PoolFn parse_pool_fn(std::string_view name) {
  if (name == "max") return PoolFn::kMax;
  if (name == "avg" || name == "average") return PoolFn::kAverage;
  throw std::invalid_argument("unknown pooling function '" + std::string(name) + "'");
}

GridStructure::GridStructure(GridDims dims_in, std::vector<TreeBits> trees_in)
    : dims(dims_in), trees(std::move(trees_in)) {
  if (dims.d <= 0 || dims.h <= 0 || dims.w <= 0) {
    throw std::invalid_argument("GridStructure: grid dims must be positive");
  }
  if (trees.size() != dims.num_trees()) {
    throw std::invalid_argument("GridStructure: expected " + std::to_string(dims.num_trees()) + " trees, got " +
                                std::to_string(trees.size()));
  }
}

GridStructure GridStructure::uniform(GridDims dims, const TreeBits& tree) {
  return GridStructure(dims, std::vector<TreeBits>(dims.num_trees(), tree));
}

std::array<int, 3> GridStructure::tree_coord(std::size_t t) const {
  const auto w = static_cast<std::size_t>(dims.w);
  const auto h = static_cast<std::size_t>(dims.h);
  return {static_cast<int>(t / (w * h)), static_cast<int>((t / w) % h), static_cast<int>(t % w)};
}

std::size_t GridStructure::total_leaves() const {
  std::size_t n = 0;
  for (const auto& t : trees) n += static_cast<std::size_t>(t.num_leaves());
  return n;
}

std::vector<std::size_t> GridStructure::leaf_offsets() const {
  std::vector<std::size_t> offsets(trees.size() + 1, 0);
  for (std::size_t t = 0; t < trees.size(); ++t) {
    offsets[t + 1] = offsets[t] + static_cast<std::size_t>(trees[t].num_leaves());
  }
  return offsets;
}

DenseTensor::DenseTensor(int channels, std::array<int, 3> shape, float fill)
    : channels_(channels), shape_(shape) {
  if (channels <= 0 || shape[0] <= 0 || shape[1] <= 0 || shape[2] <= 0) {
    throw std::invalid_argument("DenseTensor: channels and shape must be positive");
  }
  values_.assign(static_cast<std::size_t>(channels) * spatial_size(), fill);
}

DenseTensor::DenseTensor(int channels, std::array<int, 3> shape, std::vector<float> values)
    : DenseTensor(channels, shape) {
  if (values.size() != values_.size()) {
    throw std::invalid_argument("DenseTensor: value count does not match C*X*Y*Z");
  }
  values_ = std::move(values);
}

GridOctree::GridOctree(GridStructure structure, int channels, std::vector<float> data)
    : structure_(std::move(structure)), channels_(channels), data_(std::move(data)) {
  if (channels_ <= 0) throw std::invalid_argument("GridOctree: channel count must be positive");
  leaf_offsets_ = structure_.leaf_offsets();
  if (data_.size() != leaf_offsets_.back() * static_cast<std::size_t>(channels_)) {
    throw std::invalid_argument("GridOctree: data length " + std::to_string(data_.size()) + " != C * leaves (" +
                                std::to_string(leaf_offsets_.back() * static_cast<std::size_t>(channels_)) + ")");
  }
}

GridOctree GridOctree::filled(GridStructure structure, int channels, float value) {
  const std::size_t n = structure.total_leaves() * static_cast<std::size_t>(std::max(channels, 0));
  return GridOctree(std::move(structure), channels, std::vector<float>(n, value));
}

bool GridOctree::in_bounds(VoxelCoord v) const {
  const auto r = resolution();
  return v.i >= 0 && v.j >= 0 && v.k >= 0 && v.i < r[0] && v.j < r[1] && v.k < r[2];
}

VoxelAddr GridOctree::locate_unchecked(VoxelCoord v) const {
  const std::size_t t = structure_.tree_index(v.i / 8, v.j / 8, v.k / 8);
  const TreeBits& tree = structure_.trees[t];
  const VoxelDepth vd = tree.voxel_depth({v.k % 8, v.j % 8, v.i % 8});
  const LocalCoord o = node_origin(vd.leaf);
  VoxelAddr addr;
  addr.tree_index = t;
  addr.node = vd.leaf;
  addr.data_offset = leaf_offsets_[t] + static_cast<std::size_t>(tree.data_index(vd.leaf));
  addr.origin = {v.i - v.i % 8 + o.z, v.j - v.j % 8 + o.y, v.k - v.k % 8 + o.x};
  addr.size = cell_size(vd.depth);
  return addr;
}

VoxelAddr GridOctree::locate(VoxelCoord v) const {
  if (!in_bounds(v)) {
    throw std::out_of_range("locate: voxel (" + std::to_string(v.i) + "," + std::to_string(v.j) + "," +
                            std::to_string(v.k) + ") is outside the grid");
  }
  return locate_unchecked(v);
}

std::span<const float> GridOctree::get(VoxelCoord v) const { return leaf_values(locate(v).data_offset); }

std::vector<GridLeaf> GridOctree::tree_leaves(std::size_t t) const {
  const auto tc = structure_.tree_coord(t);
  const auto cells = structure_.trees[t].leaves();
  std::vector<GridLeaf> out;
  out.reserve(cells.size());
  for (const auto& cell : cells) {
    GridLeaf leaf;
    leaf.tree_index = t;
    leaf.leaf = leaf_offsets_[t] + static_cast<std::size_t>(cell.data_offset);
    leaf.node = cell.node;
    leaf.depth = node_depth(cell.node);
    leaf.origin = {8 * tc[0] + cell.origin.z, 8 * tc[1] + cell.origin.y, 8 * tc[2] + cell.origin.x};
    leaf.size = cell.size;
    out.push_back(leaf);
  }
  return out;
}

bool same_structure(const GridOctree& a, const GridOctree& b) { return a.structure() == b.structure(); }

DenseTensor oct_to_ten(const GridOctree& grid, int threads) {
  DenseTensor out(grid.channels(), grid.resolution());
  const int channels = grid.channels();
  parallel_for(grid.num_trees(), threads, [&](std::size_t t) {
    for (const GridLeaf& leaf : grid.tree_leaves(t)) {
      const auto values = grid.leaf_values(leaf.leaf);
      for (int c = 0; c < channels; ++c) {
        for (int i = leaf.origin.i; i < leaf.origin.i + leaf.size; ++i) {
          for (int j = leaf.origin.j; j < leaf.origin.j + leaf.size; ++j) {
            for (int k = leaf.origin.k; k < leaf.origin.k + leaf.size; ++k) {
              out.at(c, i, j, k) = values[static_cast<std::size_t>(c)];
            }
          }
        }
      }
    }
  });
  return out;
}

GridOctree ten_to_oct(const DenseTensor& t, const GridStructure& structure, PoolFn pool, int threads) {
  if (t.shape() != structure.dims.resolution()) {
    throw std::invalid_argument("ten_to_oct: tensor shape does not match the structure resolution");
  }
  const int channels = t.channels();
  GridOctree shape_only = GridOctree::filled(structure, channels);
  std::vector<float> data(shape_only.data().size(), 0.0f);
  parallel_for(structure.trees.size(), threads, [&](std::size_t tree) {
    for (const GridLeaf& leaf : shape_only.tree_leaves(tree)) {
      for (int c = 0; c < channels; ++c) {
        detail::PoolAccumulator acc(pool);
        for (int i = leaf.origin.i; i < leaf.origin.i + leaf.size; ++i) {
          for (int j = leaf.origin.j; j < leaf.origin.j + leaf.size; ++j) {
            for (int k = leaf.origin.k; k < leaf.origin.k + leaf.size; ++k) acc.add(t.at(c, i, j, k));
          }
        }
        data[leaf.leaf * static_cast<std::size_t>(channels) + static_cast<std::size_t>(c)] = acc.result();
      }
    }
  });
  return GridOctree(structure, channels, std::move(data));
}

GridOctree wrap_dense(const DenseFn& f, const GridOctree& grid, PoolFn pool) {
  return wrap_dense(f, grid, grid.structure(), pool);
}

GridOctree wrap_dense(const DenseFn& f, const GridOctree& grid, const GridStructure& out_structure, PoolFn pool) {
  return ten_to_oct(f(oct_to_ten(grid)), out_structure, pool);
}

}  // namespace octgrid
