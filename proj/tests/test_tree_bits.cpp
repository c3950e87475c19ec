// Copyright Contributors to the octgrid Project
// SPDX-License-Identifier: Apache-2.0
#include <array>
#include <random>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "octgrid/harness.hpp"
#include "octgrid/tree_bits.hpp"
#include "oracles.hpp"

using namespace octgrid;

TEST_CASE("parent and child examples") {
  CHECK(parent(1, 8) == 0);
  CHECK(parent(51, 4) == 12);
  CHECK(parent(72, 8) == 8);
  CHECK(child(0, 8) == 1);
  CHECK(child(12, 4) == 49);
  CHECK_THROWS_AS(parent(0, 8), std::invalid_argument);
}

TEST_CASE("parent/child roundtrip for every non-root node") {
  for (int b : {2, 4, 8}) {
    for (int k = 1; k < 1 + b + b * b + b * b * b; ++k) {
      const int p = parent(k, b);
      CHECK(child(p, b) <= k);
      CHECK(k < child(p, b) + b);
    }
  }
}

TEST_CASE("node depth and geometry") {
  CHECK(node_depth(0) == 0);
  CHECK(node_depth(8) == 1);
  CHECK(node_depth(9) == 2);
  CHECK(node_depth(72) == 2);
  CHECK(node_depth(73) == 3);
  CHECK(node_depth(584) == 3);
  CHECK(depth_begin(3) == 73);
  CHECK(node_origin(8) == LocalCoord{4, 4, 4});
  CHECK(node_origin(2) == LocalCoord{4, 0, 0});
  CHECK(node_origin(3) == LocalCoord{0, 4, 0});
  CHECK(node_origin(5) == LocalCoord{0, 0, 4});
}

TEST_CASE("quadtree worked example") {
  const auto tree = GenericTree::parse("1 0101 0000 1001 0000 0100", 4);
  CHECK(data_index(tree, 51) == 13);
  CHECK(num_leaves(tree) == 1 + 3 * 6);
}

TEST_CASE("leaf counts") {
  CHECK(TreeBits::empty().num_leaves() == 1);
  CHECK(TreeBits::empty().data_index(0) == 0);
  const std::array<NodeIndex, 1> root{0};
  CHECK(TreeBits::from_splits(root).num_leaves() == 8);
  CHECK(TreeBits::full().num_leaves() == 512);
}

TEST_CASE("data_index rejects split and unreachable nodes") {
  const std::array<NodeIndex, 1> root{0};
  const auto t = TreeBits::from_splits(root);
  CHECK_THROWS_AS(t.data_index(0), std::invalid_argument);
  CHECK_THROWS_AS(t.data_index(9), std::invalid_argument);
  CHECK_THROWS_AS(t.data_index(585), std::invalid_argument);
  CHECK(t.data_index(1) == 0);
  CHECK(t.data_index(8) == 7);
}

TEST_CASE("orphan splits are rejected") {
  std::bitset<kTreeBits> mask;
  mask.set(1);
  CHECK_THROWS_AS(TreeBits{mask}, std::invalid_argument);
  mask.set(0);
  mask.set(9);  // child of node 1, which is split
  CHECK_NOTHROW(TreeBits{mask});
  mask.set(17);  // child of node 2, which is not
  CHECK_THROWS_AS(TreeBits{mask}, std::invalid_argument);
}

TEST_CASE("data_index is a bijection matching breadth-first leaf rank") {
  Rng rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const TreeBits tree = random_tree(rng, 0.1 + 0.8 * (trial % 10) / 10.0);
    const auto leaves = oracle::bfs_leaves(tree);
    REQUIRE(static_cast<int>(leaves.size()) == tree.num_leaves());
    std::set<int> seen;
    for (std::size_t r = 0; r < leaves.size(); ++r) {
      const int di = tree.data_index(leaves[r].index);
      CHECK(di == static_cast<int>(r));
      seen.insert(di);
    }
    CHECK(seen.size() == leaves.size());
  }
}

TEST_CASE("leaves tile the block and agree with data_index") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const TreeBits tree = random_tree(rng, 0.5);
    std::array<int, 512> cover{};
    int offset = 0;
    for (const LeafCell& c : tree.leaves()) {
      CHECK(c.data_offset == offset++);
      CHECK(c.data_offset == tree.data_index(c.node));
      for (int z = c.origin.z; z < c.origin.z + c.size; ++z)
        for (int y = c.origin.y; y < c.origin.y + c.size; ++y)
          for (int x = c.origin.x; x < c.origin.x + c.size; ++x) ++cover[static_cast<std::size_t>(z * 64 + y * 8 + x)];
    }
    CHECK(offset == tree.num_leaves());
    CHECK(std::all_of(cover.begin(), cover.end(), [](int n) { return n == 1; }));
  }
}

TEST_CASE("voxel_depth examples and consistency") {
  CHECK(TreeBits::empty().voxel_depth({3, 5, 7}).depth == 0);
  CHECK(TreeBits::empty().voxel_depth({3, 5, 7}).leaf == 0);
  const std::array<NodeIndex, 1> root{0};
  const VoxelDepth d = TreeBits::from_splits(root).voxel_depth({7, 7, 7});
  CHECK(d.depth == 1);
  CHECK(d.leaf == 8);
  CHECK(TreeBits::full().voxel_depth({2, 6, 1}).depth == 3);

  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const TreeBits tree = random_tree(rng, 0.5);
    for (int z = 0; z < 8; ++z)
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
          const VoxelDepth vd = tree.voxel_depth({x, y, z});
          const LocalCoord o = node_origin(vd.leaf);
          const int s = cell_size(vd.depth);
          CHECK(node_depth(vd.leaf) == vd.depth);
          CHECK((x >= o.x && x < o.x + s && y >= o.y && y < o.y + s && z >= o.z && z < o.z + s));
          CHECK(tree.leaf_data_index({x, y, z}) == oracle::leaf_rank(tree, x, y, z));
        }
  }
}

TEST_CASE("serialization layout") {
  const std::array<NodeIndex, 3> splits{0, 1, 72 / 8};
  const auto tree = TreeBits::from_splits(splits);
  const auto bytes = tree.serialize();
  CHECK(bytes[0] == 0x03);
  CHECK(bytes[1] == 0x02);
  CHECK(TreeBits::deserialize(bytes) == tree);

  const auto full = TreeBits::full().serialize();
  CHECK(full[9] == 0x01);
  auto bad = full;
  bad[9] = 0x03;
  CHECK_THROWS(TreeBits::deserialize(bad));

  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const TreeBits t = random_tree(rng, 0.4);
    CHECK(TreeBits::deserialize(t.serialize()) == t);
  }
}
