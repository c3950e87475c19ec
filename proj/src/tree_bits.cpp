// Copyright Contributors to the octgrid Project
// SPDX-License-Identifier: Apache-2.0
//
#include "octgrid/tree_bits.hpp"

#include <bit>
#include <cctype>
#include <deque>
#include <stdexcept>
#include <string>

namespace octgrid {

NodeIndex parent(NodeIndex i, int b) {
  if (i <= 0) throw std::invalid_argument("parent: the root node has no parent");
  return (i - 1) / b;
}

int node_depth(NodeIndex i) {
  if (i < 0 || i >= kTreeNodes) throw std::out_of_range("node_depth: index " + std::to_string(i));
  if (i == 0) return 0;
  if (i < depth_begin(2)) return 1;
  if (i < depth_begin(3)) return 2;
  return 3;
}

LocalCoord node_origin(NodeIndex i) {
  LocalCoord origin;
  int depth = node_depth(i);
  for (NodeIndex n = i; n > 0; n = parent(n), --depth) {
    const LocalCoord o = octant_offset(octant_of(n));
    const int size = cell_size(depth);
    origin.x += o.x * size;
    origin.y += o.y * size;
    origin.z += o.z * size;
  }
  return origin;
}

TreeBits::TreeBits(const std::bitset<kTreeBits>& mask) : mask_(mask) {
  for (int i = 1; i < kTreeBits; ++i) {
    if (mask_[static_cast<std::size_t>(i)] && !mask_[static_cast<std::size_t>(parent(i))]) {
      throw std::invalid_argument("TreeBits: split bit " + std::to_string(i) +
                                  " has an unsplit parent");
    }
  }
  for (int i = 0; i < kTreeBits; ++i) {
    if (!mask_[static_cast<std::size_t>(i)]) continue;
    if (i < 64) {
      lo_ |= std::uint64_t{1} << i;
    } else {
      hi_ |= std::uint64_t{1} << (i - 64);
    }
  }
}

TreeBits TreeBits::full() {
  std::bitset<kTreeBits> mask;
  mask.set();
  return TreeBits(mask);
}

TreeBits TreeBits::from_splits(std::span<const NodeIndex> splits) {
  std::bitset<kTreeBits> mask;
  for (NodeIndex i : splits) {
    if (i < 0 || i >= kTreeBits) {
      throw std::invalid_argument("TreeBits: split index " + std::to_string(i) + " out of range");
    }
    mask.set(static_cast<std::size_t>(i));
  }
  return TreeBits(mask);
}

bool TreeBits::is_split(NodeIndex i) const {
  return i >= 0 && i < kTreeBits && mask_[static_cast<std::size_t>(i)];
}

int TreeBits::popcount() const { return std::popcount(lo_) + std::popcount(hi_); }

int TreeBits::splits_before(NodeIndex i) const {
  if (i <= 0) return 0;
  if (i >= kTreeBits) return popcount();
  if (i <= 64) {
    const std::uint64_t m = i == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << i) - 1;
    return std::popcount(lo_ & m);
  }
  return std::popcount(lo_) + std::popcount(hi_ & ((std::uint64_t{1} << (i - 64)) - 1));
}

bool TreeBits::is_leaf(NodeIndex i) const {
  if (i < 0 || i >= kTreeNodes || is_split(i)) return false;
  for (NodeIndex n = i; n > 0;) {
    n = parent(n);
    if (!is_split(n)) return false;
  }
  return true;
}

int TreeBits::data_index(NodeIndex i) const {
  if (!is_leaf(i)) {
    throw std::invalid_argument("data_index: node " + std::to_string(i) +
                                " is not a reachable leaf");
  }
  if (i == 0) return 0;
  const NodeIndex p = parent(i);
  return kOctreeBranching * splits_before(p) + 1 - splits_before(i) + (i - 1) % kOctreeBranching;
}

VoxelDepth TreeBits::voxel_depth(LocalCoord c) const {
  NodeIndex node = 0;
  int depth = 0;
  while (depth < kTreeMaxDepth && is_split(node)) {
    const int shift = kTreeMaxDepth - 1 - depth;
    const int octant = (((c.z >> shift) & 1) << 2) | (((c.y >> shift) & 1) << 1) | ((c.x >> shift) & 1);
    node = child(node) + octant;
    ++depth;
  }
  return {depth, node};
}

int TreeBits::leaf_data_index(LocalCoord c) const {
  const NodeIndex leaf = voxel_depth(c).leaf;
  if (leaf == 0) return 0;
  const NodeIndex p = (leaf - 1) / kOctreeBranching;
  return kOctreeBranching * splits_before(p) + 1 - splits_before(leaf) + (leaf - 1) % kOctreeBranching;
}

std::vector<LeafCell> TreeBits::leaves() const {
  std::vector<LeafCell> out;
  out.reserve(static_cast<std::size_t>(num_leaves()));
  std::deque<NodeIndex> queue{0};
  while (!queue.empty()) {
    const NodeIndex n = queue.front();
    queue.pop_front();
    if (is_split(n)) {
      for (int o = 0; o < kOctreeBranching; ++o) queue.push_back(child(n) + o);
      continue;
    }
    out.push_back({n, node_origin(n), cell_size(node_depth(n)), static_cast<int>(out.size())});
  }
  return out;
}

std::array<std::uint8_t, kTreeRecordBytes> TreeBits::serialize() const {
  std::array<std::uint8_t, kTreeRecordBytes> bytes{};
  for (int i = 0; i < kTreeBits; ++i) {
    if (mask_[static_cast<std::size_t>(i)]) bytes[static_cast<std::size_t>(i / 8)] |= std::uint8_t(1u << (i % 8));
  }
  return bytes;
}

TreeBits TreeBits::deserialize(std::span<const std::uint8_t, kTreeRecordBytes> bytes) {
  if ((bytes[9] & 0xFE) != 0) throw std::invalid_argument("TreeBits: padding bits 73..79 must be zero");
  std::bitset<kTreeBits> mask;
  for (int i = 0; i < kTreeBits; ++i) {
    mask[static_cast<std::size_t>(i)] = (bytes[static_cast<std::size_t>(i / 8)] >> (i % 8)) & 1u;
  }
  return TreeBits(mask);
}

GenericTree GenericTree::parse(std::string_view text, int branching) {
  GenericTree tree;
  tree.branching = branching;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) continue;
    if (ch != '0' && ch != '1') throw std::invalid_argument("GenericTree: expected '0' or '1'");
    tree.bits.push_back(ch == '1');
  }
  const auto b = static_cast<std::size_t>(branching);
  if (tree.bits.size() > 1 + b + b * b) {
    throw std::invalid_argument("GenericTree: more split bits than a depth-3 tree has");
  }
  for (std::size_t i = 1; i < tree.bits.size(); ++i) {
    if (tree.bits[i] && !tree.bits[(i - 1) / b]) {
      throw std::invalid_argument("GenericTree: orphan split bit " + std::to_string(i));
    }
  }
  return tree;
}

int GenericTree::num_nodes() const {
  const int b = branching;
  return 1 + b + b * b + b * b * b;
}

int data_index(const GenericTree& tree, NodeIndex i) {
  if (i < 0 || i >= tree.num_nodes() || tree.is_split(i)) {
    throw std::invalid_argument("data_index: node " + std::to_string(i) + " is not a leaf");
  }
  for (NodeIndex n = i; n > 0;) {
    n = parent(n, tree.branching);
    if (!tree.is_split(n)) {
      throw std::invalid_argument("data_index: node " + std::to_string(i) + " is unreachable");
    }
  }
  if (i == 0) return 0;
  auto count_before = [&](NodeIndex end) {
    int count = 0;
    for (NodeIndex j = 0; j < end; ++j) count += tree.is_split(j) ? 1 : 0;
    return count;
  };
  const int b = tree.branching;
  const NodeIndex p = parent(i, b);
  return b * count_before(p) + 1 - count_before(i) + (i - 1) % b;
}

int num_leaves(const GenericTree& tree) {
  int splits = 0;
  for (bool bit : tree.bits) splits += bit ? 1 : 0;
  return 1 + (tree.branching - 1) * splits;
}

}  // namespace octgrid
