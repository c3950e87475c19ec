// Copyright Contributors to the octgrid Project
// SPDX-License-Identifier: Apache-2.0
//
#include "octgrid/octree_ops.hpp"

#include <algorithm>
#include <array>
#include <bitset>
#include <stdexcept>
#include <string>

#include "octgrid/parallel.hpp"
#include "pool_accumulator.hpp"

namespace octgrid {
namespace {

using detail::PoolAccumulator;

void check_channels(const GridOctree& grid, const ConvKernel& kernel) {
  if (grid.channels() != kernel.in_channels()) {
    throw std::invalid_argument("conv: grid has " + std::to_string(grid.channels()) + " channels, kernel expects " +
                                std::to_string(kernel.in_channels()));
  }
}

std::uint64_t cube(std::uint64_t s) { return s * s * s; }

/// Leaf index of every voxel in a cell's extent grown by the kernel radius,
/// -1 for voxels outside the grid, stored flat so that a kernel tap is a
/// constant offset from the voxel it is applied at. Voxels of the cell
/// itself need no lookup.
class Neighborhood {
 public:
  void reset(const GridOctree& grid, const GridLeaf& leaf, const std::array<int, 3>& radius) {
    for (int a = 0; a < 3; ++a) extent_[static_cast<std::size_t>(a)] = leaf.size + 2 * radius[static_cast<std::size_t>(a)];
    lo_ = {leaf.origin.i - radius[0], leaf.origin.j - radius[1], leaf.origin.k - radius[2]};
    table_.resize(static_cast<std::size_t>(extent_[0] * extent_[1] * extent_[2]));
    std::size_t n = 0;
    for (int i = lo_.i; i < lo_.i + extent_[0]; ++i) {
      const bool in_i = i >= leaf.origin.i && i < leaf.origin.i + leaf.size;
      for (int j = lo_.j; j < lo_.j + extent_[1]; ++j) {
        const bool in_j = j >= leaf.origin.j && j < leaf.origin.j + leaf.size;
        for (int k = lo_.k; k < lo_.k + extent_[2]; ++k, ++n) {
          const bool in_k = k >= leaf.origin.k && k < leaf.origin.k + leaf.size;
          if (in_i && in_j && in_k) {
            table_[n] = static_cast<std::ptrdiff_t>(leaf.leaf);
          } else if (grid.in_bounds({i, j, k})) {
            table_[n] = static_cast<std::ptrdiff_t>(grid.leaf_at({i, j, k}));
          } else {
            table_[n] = -1;
          }
        }
      }
    }
  }

  std::ptrdiff_t flat(int i, int j, int k) const {
    return (static_cast<std::ptrdiff_t>(i - lo_.i) * extent_[1] + (j - lo_.j)) * extent_[2] + (k - lo_.k);
  }
  std::ptrdiff_t offset(int di, int dj, int dk) const {
    return (static_cast<std::ptrdiff_t>(di) * extent_[1] + dj) * extent_[2] + dk;
  }
  std::ptrdiff_t operator[](std::ptrdiff_t n) const { return table_[static_cast<std::size_t>(n)]; }

 private:
  VoxelCoord lo_;
  std::array<int, 3> extent_{};
  std::vector<std::ptrdiff_t> table_;
};

/// Per-tree scratch reused across cells.
struct ConvScratch {
  Neighborhood hood;
  std::vector<std::ptrdiff_t> tap_offsets;
  std::vector<PoolAccumulator> pools;
};

/// Flat neighbourhood offset of every tap (l, m, n row-major): tap (l, m, n)
/// reads voxel offset (L/2 - l, M/2 - m, N/2 - n).
void tap_offsets(const Neighborhood& hood, const std::array<int, 3>& size, std::vector<std::ptrdiff_t>& out) {
  out.clear();
  for (int l = 0; l < size[0]; ++l) {
    for (int m = 0; m < size[1]; ++m) {
      for (int n = 0; n < size[2]; ++n) out.push_back(hood.offset(size[0] / 2 - l, size[1] / 2 - m, size[2] / 2 - n));
    }
  }
}

/// Per-voxel evaluation of one cell, pooled. Each voxel sums in the same
/// order as dense_conv: bias, then c_in, then l, m, n.
void conv_cell_per_voxel(const GridOctree& grid, const ConvKernel& kernel, const GridLeaf& leaf, PoolFn pool,
                         std::vector<float>& out_data, OpStats& stats, ConvScratch& scratch) {
  const int cin = kernel.in_channels();
  const auto cout = static_cast<std::size_t>(kernel.out_channels());
  const auto& size = kernel.size();
  scratch.hood.reset(grid, leaf, {size[0] / 2, size[1] / 2, size[2] / 2});
  tap_offsets(scratch.hood, size, scratch.tap_offsets);
  scratch.pools.assign(cout, PoolAccumulator(pool));
  const auto& hood = scratch.hood;
  const auto& taps = scratch.tap_offsets;
  const float* data = grid.data().data();

  for (int i = leaf.origin.i; i < leaf.origin.i + leaf.size; ++i) {
    for (int j = leaf.origin.j; j < leaf.origin.j + leaf.size; ++j) {
      for (int k = leaf.origin.k; k < leaf.origin.k + leaf.size; ++k) {
        const std::ptrdiff_t centre = hood.flat(i, j, k);
        for (std::size_t co = 0; co < cout; ++co) {
          double acc = kernel.bias(static_cast<int>(co));
          for (int ci = 0; ci < cin; ++ci) {
            const float* w = kernel.taps_of(static_cast<int>(co), ci);
            for (std::size_t t = 0; t < taps.size(); ++t) {
              const std::ptrdiff_t src = hood[centre + taps[t]];
              if (src < 0) continue;
              acc += static_cast<double>(w[t]) * static_cast<double>(data[src * cin + ci]);
            }
          }
          scratch.pools[co].add(static_cast<float>(acc));
        }
      }
    }
  }
  for (std::size_t co = 0; co < cout; ++co) out_data[leaf.leaf * cout + co] = scratch.pools[co].result();

  const std::uint64_t voxels = cube(static_cast<std::uint64_t>(leaf.size));
  stats.cells_visited += 1;
  stats.boundary_voxels_evaluated += voxels;
  stats.multiplications += voxels * static_cast<std::uint64_t>(kernel.taps()) * static_cast<std::uint64_t>(cin) *
                           static_cast<std::uint64_t>(cout);
}

// A voxel's position along one axis of its cell: 0 on the low face, 1 strictly
// inside, 2 on the high face. Three axes give 27 truncation classes; class 13
// is the interior.
constexpr int kInteriorClass = 13;

int axis_class(int local, int size) { return local == 0 ? 0 : (local == size - 1 ? 2 : 1); }

struct TruncationTable {
  /// in_cell[cls][t]: tap t of a 3^3 kernel stays inside the cell.
  std::array<std::bitset<27>, 27> in_cell{};
  /// Taps leaving the cell, per class.
  std::array<std::vector<int>, 27> out_taps{};
};

const TruncationTable& truncation_table() {
  static const TruncationTable table = [] {
    // Tap (l, m, n) reads offset (1 - l, 1 - m, 1 - n).
    auto inside = [](int cls, int d) { return cls == 1 || (cls == 0 && d >= 0) || (cls == 2 && d <= 0); };
    TruncationTable tt;
    for (int ci = 0; ci < 3; ++ci) {
      for (int cj = 0; cj < 3; ++cj) {
        for (int ck = 0; ck < 3; ++ck) {
          const auto cls = static_cast<std::size_t>((ci * 3 + cj) * 3 + ck);
          for (int t = 0; t < 27; ++t) {
            const bool in = inside(ci, 1 - t / 9) && inside(cj, 1 - (t / 3) % 3) && inside(ck, 1 - t % 3);
            tt.in_cell[cls][static_cast<std::size_t>(t)] = in;
            if (!in) tt.out_taps[cls].push_back(t);
          }
        }
      }
    }
    return tt;
  }();
  return table;
}

/// Truncated-kernel evaluation of one constant cell of edge >= 4 with a 3^3
/// kernel. The 27 weight-times-constant products are formed once; every
/// in-cell partial sum is a subset sum of them, so only taps leaving the
/// cell cost further multiplications.
void conv_cell_decomposed(const GridOctree& grid, const ConvKernel& kernel, const GridLeaf& leaf, PoolFn pool,
                          std::vector<float>& out_data, OpStats& stats, ConvScratch& scratch) {
  const int cin = kernel.in_channels();
  const int cout = kernel.out_channels();
  const auto pairs = static_cast<std::size_t>(cin) * static_cast<std::size_t>(cout);
  const auto cell = grid.leaf_values(leaf.leaf);
  const TruncationTable& table = truncation_table();

  std::vector<double> products(pairs * 27);
  for (int co = 0; co < cout; ++co) {
    for (int ci = 0; ci < cin; ++ci) {
      const float* w = kernel.taps_of(co, ci);
      const auto base = (static_cast<std::size_t>(co) * static_cast<std::size_t>(cin) + static_cast<std::size_t>(ci)) * 27;
      for (std::size_t t = 0; t < 27; ++t) {
        products[base + t] = static_cast<double>(w[t]) * static_cast<double>(cell[static_cast<std::size_t>(ci)]);
      }
    }
  }
  // inner[cls * pairs + co * cin + ci]: in-cell partial sum for that class.
  std::vector<double> inner(27 * pairs, 0.0);
  for (std::size_t cls = 0; cls < 27; ++cls) {
    for (std::size_t p = 0; p < pairs; ++p) {
      double sum = 0.0;
      for (std::size_t t = 0; t < 27; ++t) {
        if (table.in_cell[cls][t]) sum += products[p * 27 + t];
      }
      inner[cls * pairs + p] = sum;
    }
  }
  std::uint64_t mults = pairs * 27;

  const int s = leaf.size;
  scratch.pools.assign(static_cast<std::size_t>(cout), PoolAccumulator(pool));
  const std::uint64_t interior_count = cube(static_cast<std::uint64_t>(s - 2));
  for (int co = 0; co < cout; ++co) {
    double v = kernel.bias(co);
    for (int ci = 0; ci < cin; ++ci) v += inner[kInteriorClass * pairs + static_cast<std::size_t>(co * cin + ci)];
    scratch.pools[static_cast<std::size_t>(co)].add_repeated(static_cast<float>(v), interior_count);
  }

  scratch.hood.reset(grid, leaf, {1, 1, 1});
  tap_offsets(scratch.hood, {3, 3, 3}, scratch.tap_offsets);
  const auto& hood = scratch.hood;
  const auto& taps = scratch.tap_offsets;
  const float* data = grid.data().data();
  std::uint64_t boundary = 0;
  for (int li = 0; li < s; ++li) {
    const int ai = axis_class(li, s);
    for (int lj = 0; lj < s; ++lj) {
      const int aj = axis_class(lj, s);
      const bool inner_row = ai == 1 && aj == 1;
      for (int lk = 0; lk < s; ++lk) {
        // Rows strictly inside on i and j only touch the boundary at their ends.
        if (inner_row && lk == 1) lk = s - 1;
        const auto cls = static_cast<std::size_t>((ai * 3 + aj) * 3 + axis_class(lk, s));
        ++boundary;
        const auto& out_taps = table.out_taps[cls];
        const std::ptrdiff_t centre = hood.flat(leaf.origin.i + li, leaf.origin.j + lj, leaf.origin.k + lk);
        mults += out_taps.size() * pairs;
        for (int co = 0; co < cout; ++co) {
          double value = kernel.bias(co);
          for (int ci = 0; ci < cin; ++ci) {
            const float* w = kernel.taps_of(co, ci);
            double part = inner[cls * pairs + static_cast<std::size_t>(co * cin + ci)];
            for (int t : out_taps) {
              const std::ptrdiff_t src = hood[centre + taps[static_cast<std::size_t>(t)]];
              if (src < 0) continue;
              part += static_cast<double>(w[t]) * static_cast<double>(data[src * cin + ci]);
            }
            value += part;
          }
          scratch.pools[static_cast<std::size_t>(co)].add(static_cast<float>(value));
        }
      }
    }
  }
  for (int co = 0; co < cout; ++co) {
    out_data[leaf.leaf * static_cast<std::size_t>(cout) + static_cast<std::size_t>(co)] =
        scratch.pools[static_cast<std::size_t>(co)].result();
  }
  stats.cells_visited += 1;
  stats.boundary_voxels_evaluated += boundary;
  stats.multiplications += mults;
}

template <typename CellFn>
ConvResult run_conv(const GridOctree& grid, const ConvKernel& kernel, int threads, CellFn&& cell_fn) {
  std::vector<float> data(grid.num_leaves() * static_cast<std::size_t>(kernel.out_channels()), 0.0f);
  std::vector<OpStats> per_tree(grid.num_trees());
  parallel_for(grid.num_trees(), threads, [&](std::size_t t) {
    ConvScratch scratch;
    for (const GridLeaf& leaf : grid.tree_leaves(t)) cell_fn(leaf, data, per_tree[t], scratch);
  });
  OpStats stats;
  for (const OpStats& s : per_tree) stats += s;
  return {GridOctree(grid.structure(), kernel.out_channels(), std::move(data)), stats};
}

}  // namespace

ConvResult conv_naive(const GridOctree& grid, const ConvKernel& kernel, PoolFn pool, int threads) {
  check_channels(grid, kernel);
  return run_conv(grid, kernel, threads, [&](const GridLeaf& leaf, std::vector<float>& data, OpStats& stats,
                                                ConvScratch& scratch) {
    conv_cell_per_voxel(grid, kernel, leaf, pool, data, stats, scratch);
  });
}

ConvResult conv_efficient(const GridOctree& grid, const ConvKernel& kernel, PoolFn pool, int threads) {
  check_channels(grid, kernel);
  if (!kernel.is_cubic3()) {
    ConvResult result = conv_naive(grid, kernel, pool, threads);
    result.stats.naive_fallback = true;
    return result;
  }
  return run_conv(grid, kernel, threads, [&](const GridLeaf& leaf, std::vector<float>& data, OpStats& stats,
                                                ConvScratch& scratch) {
    if (leaf.size >= 4) {
      conv_cell_decomposed(grid, kernel, leaf, pool, data, stats, scratch);
    } else {
      conv_cell_per_voxel(grid, kernel, leaf, pool, data, stats, scratch);
    }
  });
}

GridStructure pool2_structure(const GridStructure& in) {
  const GridDims& d = in.dims;
  if (d.d % 2 != 0 || d.h % 2 != 0 || d.w % 2 != 0) {
    throw std::invalid_argument("pool2: grid dims must be even");
  }
  const GridDims out_dims{d.d / 2, d.h / 2, d.w / 2};
  std::vector<TreeBits> trees;
  trees.reserve(out_dims.num_trees());
  for (int td = 0; td < out_dims.d; ++td) {
    for (int th = 0; th < out_dims.h; ++th) {
      for (int tw = 0; tw < out_dims.w; ++tw) {
        std::bitset<kTreeBits> mask;
        mask.set(0);
        for (int o = 0; o < 8; ++o) {
          const LocalCoord off = octant_offset(o);
          const TreeBits& src = in.trees[in.tree_index(2 * td + off.z, 2 * th + off.y, 2 * tw + off.x)];
          const NodeIndex root = child(0) + o;
          if (src.is_split(0)) mask.set(static_cast<std::size_t>(root));
          for (int q = 0; q < 8; ++q) {
            if (src.is_split(child(0) + q)) mask.set(static_cast<std::size_t>(child(root) + q));
          }
        }
        trees.emplace_back(mask);
      }
    }
  }
  return GridStructure(out_dims, std::move(trees));
}

GridOctree pool2(const GridOctree& grid, PoolFn pool) {
  GridStructure structure = pool2_structure(grid.structure());
  const auto channels = static_cast<std::size_t>(grid.channels());
  GridOctree shape = GridOctree::filled(structure, grid.channels());
  std::vector<float> data(shape.data().size());
  for (std::size_t t = 0; t < shape.num_trees(); ++t) {
    for (const GridLeaf& leaf : shape.tree_leaves(t)) {
      const VoxelCoord src{2 * leaf.origin.i, 2 * leaf.origin.j, 2 * leaf.origin.k};
      const VoxelAddr addr = grid.locate(src);
      float* out = data.data() + leaf.leaf * channels;
      if (addr.size > 1) {
        const auto v = grid.leaf_values(addr.data_offset);
        std::copy(v.begin(), v.end(), out);
        continue;
      }
      for (std::size_t c = 0; c < channels; ++c) {
        PoolAccumulator acc(pool);
        for (int l = 0; l < 2; ++l) {
          for (int m = 0; m < 2; ++m) {
            for (int n = 0; n < 2; ++n) acc.add(grid.get({src.i + l, src.j + m, src.k + n})[c]);
          }
        }
        out[c] = acc.result();
      }
    }
  }
  return GridOctree(std::move(structure), grid.channels(), std::move(data));
}

GridStructure unpool2_structure(const GridStructure& in) {
  const GridDims out_dims{2 * in.dims.d, 2 * in.dims.h, 2 * in.dims.w};
  std::vector<TreeBits> trees(out_dims.num_trees());
  GridStructure out;
  out.dims = out_dims;
  for (std::size_t t = 0; t < in.trees.size(); ++t) {
    const auto [td, th, tw] = in.tree_coord(t);
    const TreeBits& src = in.trees[t];
    for (int o = 0; o < 8; ++o) {
      const LocalCoord off = octant_offset(o);
      std::bitset<kTreeBits> mask;
      const NodeIndex root = child(0) + o;
      if (src.is_split(root)) {
        mask.set(0);
        for (int q = 0; q < 8; ++q) {
          if (src.is_split(child(root) + q)) mask.set(static_cast<std::size_t>(child(0) + q));
        }
      }
      trees[out.tree_index(2 * td + off.z, 2 * th + off.y, 2 * tw + off.x)] = TreeBits(mask);
    }
  }
  return GridStructure(out_dims, std::move(trees));
}

namespace {

GridOctree unpool_onto(const GridOctree& grid, GridStructure structure) {
  const auto channels = static_cast<std::size_t>(grid.channels());
  GridOctree shape = GridOctree::filled(std::move(structure), grid.channels());
  std::vector<float> data(shape.data().size());
  for (std::size_t t = 0; t < shape.num_trees(); ++t) {
    for (const GridLeaf& leaf : shape.tree_leaves(t)) {
      const auto v = grid.get({leaf.origin.i / 2, leaf.origin.j / 2, leaf.origin.k / 2});
      std::copy(v.begin(), v.end(), data.begin() + static_cast<std::ptrdiff_t>(leaf.leaf * channels));
    }
  }
  return GridOctree(shape.structure(), grid.channels(), std::move(data));
}

}  // namespace

GridOctree unpool2(const GridOctree& grid) { return unpool_onto(grid, unpool2_structure(grid.structure())); }

GridOctree unpool2_guided(const GridOctree& grid, const GuideStructure& guide) {
  const GridDims& d = grid.dims();
  if (!(guide.dims == GridDims{2 * d.d, 2 * d.h, 2 * d.w})) {
    throw std::invalid_argument("unpool2_guided: guide dims must be twice the grid dims");
  }
  return unpool_onto(grid, guide);
}

GridOctree pointwise(const GridOctree& grid, const PointwiseFn& fn) {
  std::vector<float> data(grid.data().begin(), grid.data().end());
  for (float& v : data) v = fn(v);
  return GridOctree(grid.structure(), grid.channels(), std::move(data));
}

GridOctree concat(const GridOctree& a, const GridOctree& b) {
  if (!same_structure(a, b)) throw std::invalid_argument("concat: grids differ in structure");
  const auto ca = static_cast<std::size_t>(a.channels());
  const auto cb = static_cast<std::size_t>(b.channels());
  std::vector<float> data;
  data.reserve(a.num_leaves() * (ca + cb));
  for (std::size_t leaf = 0; leaf < a.num_leaves(); ++leaf) {
    const auto va = a.leaf_values(leaf);
    const auto vb = b.leaf_values(leaf);
    data.insert(data.end(), va.begin(), va.end());
    data.insert(data.end(), vb.begin(), vb.end());
  }
  return GridOctree(a.structure(), a.channels() + b.channels(), std::move(data));
}

}  // namespace octgrid
