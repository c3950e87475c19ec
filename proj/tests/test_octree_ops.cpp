// Copyright Contributors to the octgrid Project
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "doctest.h"
#include "octgrid/dense_ops.hpp"
#include "octgrid/harness.hpp"
#include "octgrid/octree_ops.hpp"

using namespace octgrid;

namespace {

GridOctree single_cell(float value = 1.0f) {
  return GridOctree::filled(GridStructure::uniform({1, 1, 1}, TreeBits::empty()), 1, value);
}

int cell_size_at(const GridOctree& g, VoxelCoord v) { return g.locate(v).size; }

}  // namespace

TEST_CASE("isolated cell multiplication counts") {
  Rng rng(1);
  const ConvKernel w = random_kernel(1, 1, {3, 3, 3}, rng);
  const OpStats naive = conv_naive(single_cell(), w, PoolFn::kAverage).stats;
  const OpStats eff = conv_efficient(single_cell(), w, PoolFn::kAverage).stats;
  CHECK(naive.multiplications == 13824);
  CHECK(eff.multiplications == 3203);
  CHECK(eff.multiplications == 27 + 8 * 19 + 12 * 6 * 15 + 6 * 36 * 9);
  CHECK(naive.cells_visited == 1);
  CHECK(naive.boundary_voxels_evaluated == 512);
  CHECK(eff.boundary_voxels_evaluated == 512 - 216);
  CHECK_FALSE(eff.naive_fallback);
}

TEST_CASE("counts scale with channel pairs and tree count") {
  Rng rng(2);
  const ConvKernel w = random_kernel(3, 2, {3, 3, 3}, rng);
  const auto g = GridOctree::filled(GridStructure::uniform({1, 2, 3}, TreeBits::empty()), 2);
  CHECK(conv_naive(g, w, PoolFn::kMax).stats.multiplications == 6ull * 6 * 13824);
  CHECK(conv_efficient(g, w, PoolFn::kMax).stats.multiplications == 6ull * 6 * 3203);
}

TEST_CASE("identity kernel") {
  Rng rng(3);
  const GridOctree g = random_grid(random_structure({2, 1, 2}, rng, 0.5), 2, rng);
  for (PoolFn pool : {PoolFn::kMax, PoolFn::kAverage}) {
    CHECK(conv_naive(g, ConvKernel::identity(2), pool).grid == g);
    CHECK(conv_efficient(g, ConvKernel::identity(2), pool).grid == g);
  }
  CHECK_THROWS_AS(conv_naive(g, ConvKernel::identity(3), PoolFn::kMax), std::invalid_argument);
}

TEST_CASE("constant grid") {
  Rng rng(4);
  const ConvKernel w = random_kernel(1, 1, {3, 3, 3}, rng);
  const double total = std::accumulate(w.weights().begin(), w.weights().end(), 0.0);
  const auto g = GridOctree::filled(GridStructure::uniform({3, 3, 3}, TreeBits::empty()), 1, 0.5f);
  const std::size_t centre = g.structure().tree_index(1, 1, 1);
  for (const auto& r : {conv_naive(g, w, PoolFn::kAverage), conv_efficient(g, w, PoolFn::kAverage)}) {
    CHECK(r.grid.data()[centre] == doctest::Approx(total * 0.5 + w.bias(0)).epsilon(1e-6));
  }
}

TEST_CASE("efficient conv agrees with naive and the dense path") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    Rng rng(seed);
    const GridOctree g = random_grid(random_structure({2, 2, 2}, rng, 0.4), 2, rng);
    const ConvKernel w = random_kernel(2, 2, {3, 3, 3}, rng);
    const PoolFn pool = seed % 2 ? PoolFn::kMax : PoolFn::kAverage;
    const ConvResult naive = conv_naive(g, w, pool);
    const ConvResult eff = conv_efficient(g, w, pool);
    const GridOctree ref = wrap_dense([&](const DenseTensor& t) { return dense_conv(t, w); }, g, pool);
    CHECK(same_structure(naive.grid, g));
    CHECK(same_structure(eff.grid, g));
    CHECK(max_relative_error(naive.grid.data(), ref.data()) <= 1e-5);
    CHECK(max_relative_error(eff.grid.data(), ref.data()) <= 1e-5);
    bool big_cell = false;
    for (const TreeBits& t : g.structure().trees) big_cell = big_cell || t.voxel_depth({0, 0, 0}).depth < 2 || t.popcount() < 9;
    if (big_cell) CHECK(eff.stats.multiplications < naive.stats.multiplications);
  }
}

TEST_CASE("fully split grids cost the same on both paths") {
  Rng rng(5);
  const auto g = random_grid(GridStructure::uniform({1, 1, 1}, TreeBits::full()), 1, rng);
  const ConvKernel w = random_kernel(1, 1, {3, 3, 3}, rng);
  CHECK(conv_naive(g, w, PoolFn::kMax).stats == conv_efficient(g, w, PoolFn::kMax).stats);
}

TEST_CASE("other kernel shapes fall back to the per-voxel path") {
  Rng rng(6);
  const GridOctree g = random_grid(random_structure({1, 1, 2}, rng, 0.5), 1, rng);
  const ConvKernel w = random_kernel(1, 1, {5, 3, 1}, rng);
  const ConvResult naive = conv_naive(g, w, PoolFn::kAverage);
  const ConvResult eff = conv_efficient(g, w, PoolFn::kAverage);
  CHECK(eff.stats.naive_fallback);
  CHECK(eff.grid == naive.grid);
  CHECK(eff.stats.multiplications == naive.stats.multiplications);
  const GridOctree ref = wrap_dense([&](const DenseTensor& t) { return dense_conv(t, w); }, g, PoolFn::kAverage);
  CHECK(max_relative_error(naive.grid.data(), ref.data()) <= 1e-5);
}

TEST_CASE("stats do not depend on stored values") {
  Rng rng(7);
  const GridStructure s = random_structure({2, 2, 1}, rng, 0.5);
  const ConvKernel w = random_kernel(2, 2, {3, 3, 3}, rng);
  const GridOctree a = random_grid(s, 2, rng);
  const GridOctree b = random_grid(s, 2, rng);
  const GridOctree zero = GridOctree::filled(s, 2);
  CHECK(conv_naive(a, w, PoolFn::kMax).stats == conv_naive(b, w, PoolFn::kMax).stats);
  CHECK(conv_efficient(a, w, PoolFn::kMax).stats == conv_efficient(b, w, PoolFn::kMax).stats);
  CHECK(conv_efficient(a, w, PoolFn::kMax).stats == conv_efficient(zero, w, PoolFn::kAverage).stats);
}

TEST_CASE("threads do not change results or stats") {
  Rng rng(8);
  const GridOctree g = random_grid(random_structure({2, 2, 2}, rng, 0.5), 2, rng);
  const ConvKernel w = random_kernel(2, 2, {3, 3, 3}, rng);
  const ConvResult one = conv_efficient(g, w, PoolFn::kAverage, 1);
  const ConvResult four = conv_efficient(g, w, PoolFn::kAverage, 4);
  CHECK(one.grid == four.grid);
  CHECK(one.stats == four.stats);
}

TEST_CASE("pool2 of an empty grid") {
  GridStructure s = GridStructure::uniform({2, 2, 2}, TreeBits::empty());
  std::vector<float> values(8);
  std::iota(values.begin(), values.end(), 10.0f);
  const GridOctree g(s, 1, values);
  const GridOctree p = pool2(g, PoolFn::kMax);
  CHECK(p.dims() == GridDims{1, 1, 1});
  const std::array<NodeIndex, 1> root{0};
  CHECK(p.tree(0) == TreeBits::from_splits(root));
  for (int t = 0; t < 8; ++t) {
    const auto [td, th, tw] = s.tree_coord(static_cast<std::size_t>(t));
    CHECK(p.get({4 * td, 4 * th, 4 * tw})[0] == values[static_cast<std::size_t>(t)]);
  }
  CHECK_THROWS_AS(pool2(GridOctree::filled(GridStructure::uniform({1, 2, 2}, TreeBits::empty()), 1), PoolFn::kMax),
                  std::invalid_argument);
}

TEST_CASE("pool2 over finest leaves") {
  DenseTensor t(1, {16, 16, 16});
  for (int d = 0; d < 8; ++d) t.at(0, d >> 2, (d >> 1) & 1, d & 1) = static_cast<float>(d + 1);
  const GridOctree g = ten_to_oct(t, GridStructure::uniform({2, 2, 2}, TreeBits::full()), PoolFn::kMax);
  CHECK(pool2(g, PoolFn::kMax).get({0, 0, 0})[0] == 8.0f);
  CHECK(pool2(g, PoolFn::kAverage).get({0, 0, 0})[0] == 4.5f);
}

TEST_CASE("pool2 matches the dense path") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    const GridOctree full = random_grid(GridStructure::uniform({2, 2, 4}, TreeBits::full()), 2, rng);
    const GridOctree mixed = random_grid(random_structure({2, 4, 2}, rng, 0.5), 2, rng);
    for (PoolFn pool : {PoolFn::kMax, PoolFn::kAverage}) {
      for (const GridOctree* g : {&full, &mixed}) {
        const GridOctree p = pool2(*g, pool);
        CHECK(p.structure() == pool2_structure(g->structure()));
        const GridOctree ref =
            wrap_dense([&](const DenseTensor& t) { return dense_pool2(t, pool); }, *g, p.structure(), pool);
        CHECK(p == ref);
      }
    }
  }
}

TEST_CASE("pool2 shifts every cell down one level") {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const GridOctree g = GridOctree::filled(random_structure({2, 2, 2}, rng, 0.5), 1);
    const GridOctree p = GridOctree::filled(pool2_structure(g.structure()), 1);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j)
        for (int k = 0; k < 8; ++k)
          CHECK(cell_size_at(p, {i, j, k}) == std::max(1, cell_size_at(g, {2 * i, 2 * j, 2 * k}) / 2));
  }
}

TEST_CASE("unpool2") {
  const GridOctree one = single_cell(2.5f);
  const GridOctree u = unpool2(one);
  CHECK(u.dims() == GridDims{2, 2, 2});
  CHECK(u.num_leaves() == 8);
  CHECK(std::all_of(u.data().begin(), u.data().end(), [](float v) { return v == 2.5f; }));

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    const GridOctree g = random_grid(random_structure({1, 2, 1}, rng, 0.5), 2, rng);
    const GridOctree up = unpool2(g);
    CHECK(up.num_trees() == 8 * g.num_trees());
    CHECK(up.structure() == unpool2_structure(g.structure()));
    CHECK(oct_to_ten(up) == dense_unpool2(oct_to_ten(g)));
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 32; ++j)
        for (int k = 0; k < 16; ++k)
          CHECK(cell_size_at(up, {i, j, k}) == std::min(8, 2 * cell_size_at(g, {i / 2, j / 2, k / 2})));
  }
}

TEST_CASE("guided unpooling") {
  Rng rng(10);
  const GridOctree coarse = random_grid(random_structure({1, 1, 1}, rng, 0.5), 1, rng);
  CHECK(unpool2_guided(coarse, unpool2_structure(coarse.structure())) == unpool2(coarse));

  const auto full = GridStructure::uniform({2, 2, 2}, TreeBits::full());
  const GridOctree f = unpool2_guided(coarse, full);
  CHECK(f.structure() == full);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j)
      for (int k = 0; k < 16; ++k) CHECK(f.get({i, j, k})[0] == coarse.get({i / 2, j / 2, k / 2})[0]);

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng r(seed);
    const GridStructure guide = random_structure({2, 2, 4}, r, 0.5);
    const GridOctree low = random_grid(pool2_structure(guide), 2, r);
    const GridOctree out = unpool2_guided(low, guide);
    CHECK(out.structure() == guide);
    CHECK(oct_to_ten(out) == dense_unpool2(oct_to_ten(low)));
  }
  CHECK_THROWS_AS(unpool2_guided(coarse, GridStructure::uniform({2, 2, 1}, TreeBits::empty())),
                  std::invalid_argument);
}

TEST_CASE("pointwise and concat") {
  Rng rng(11);
  const GridStructure s = random_structure({1, 2, 1}, rng, 0.5);
  const GridOctree g = random_grid(s, 2, rng);
  const GridOctree neg = pointwise(g, [](float x) { return -std::abs(x) - 1.0f; });
  const GridOctree r = pointwise(neg, relu);
  CHECK(same_structure(r, g));
  CHECK(std::all_of(r.data().begin(), r.data().end(), [](float v) { return v == 0.0f; }));
  CHECK(pointwise(g, [](float x) { return x; }) == g);

  const GridOctree c = concat(g, GridOctree::filled(s, 3));
  CHECK(c.channels() == 5);
  for (std::size_t leaf = 0; leaf < g.num_leaves(); ++leaf) {
    const auto lv = c.leaf_values(leaf);
    CHECK(lv[0] == g.leaf_values(leaf)[0]);
    CHECK(lv[1] == g.leaf_values(leaf)[1]);
    CHECK(lv[2] == 0.0f);
    CHECK(lv[4] == 0.0f);
  }
  CHECK_THROWS_AS(concat(g, GridOctree::filled(GridStructure::uniform({1, 2, 1}, TreeBits::full()), 1)),
                  std::invalid_argument);
}
