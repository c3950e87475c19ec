// Copyright Contributors to the octgrid Project
// SPDX-License-Identifier: Apache-2.0
//
// Structure of a single shallow octree (depth <= 3) encoded as a 73-bit
// split mask, plus the breadth-first index arithmetic used to address its
// nodes and the leaf data attached to them.
//
#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace octgrid {

/// Breadth-first node index inside a shallow octree. Indices 0..72 have a
/// split bit; 73..584 are the implicit depth-3 leaves.
using NodeIndex = int;

inline constexpr int kOctreeBranching = 8;
inline constexpr int kTreeBits = 73;      // 1 + 8 + 64
inline constexpr int kTreeNodes = 585;    // 1 + 8 + 64 + 512
inline constexpr int kTreeMaxDepth = 3;
inline constexpr int kTreeVoxels = 8;     // voxels per tree edge
inline constexpr int kTreeRecordBytes = 10;

struct LocalCoord {
  int x = 0;
  int y = 0;
  int z = 0;
  friend bool operator==(const LocalCoord&, const LocalCoord&) = default;
};

/// Index of the first child of node `i` for branching factor `b`.
constexpr NodeIndex child(NodeIndex i, int b = kOctreeBranching) { return b * i + 1; }

/// Parent of node `i`; throws std::invalid_argument for the root.
NodeIndex parent(NodeIndex i, int b = kOctreeBranching);

/// Depth of an octree node index (0..3).
int node_depth(NodeIndex i);

/// First breadth-first index at `depth` for an octree: 0, 1, 9, 73.
constexpr NodeIndex depth_begin(int depth) {
  NodeIndex first = 0;
  for (int d = 0; d < depth; ++d) first = first * kOctreeBranching + 1;
  return first;
}

/// Octant of child `i` within its parent: 4*zbit + 2*ybit + xbit.
constexpr int octant_of(NodeIndex i) { return (i - 1) % kOctreeBranching; }

constexpr LocalCoord octant_offset(int octant) {
  return {octant & 1, (octant >> 1) & 1, (octant >> 2) & 1};
}

/// Edge length in voxels of a node at `depth`.
constexpr int cell_size(int depth) { return kTreeVoxels >> depth; }

/// Local voxel origin of an octree node.
LocalCoord node_origin(NodeIndex i);

struct LeafCell {
  NodeIndex node = 0;
  LocalCoord origin;
  int size = kTreeVoxels;
  int data_offset = 0;
};

struct VoxelDepth {
  int depth = 0;
  NodeIndex leaf = 0;
};

/// Split mask of one shallow octree. Always valid: every set bit other than
/// the root has a set parent. Immutable once constructed.
class TreeBits {
 public:
  TreeBits() = default;

  /// Validates the orphan-split invariant; throws std::invalid_argument.
  explicit TreeBits(const std::bitset<kTreeBits>& mask);

  static TreeBits empty() { return {}; }
  static TreeBits full();

  /// Builds a tree from a list of split node indices (any order).
  static TreeBits from_splits(std::span<const NodeIndex> splits);

  bool is_split(NodeIndex i) const;
  int popcount() const;

  /// Number of split bits with index < i.
  int splits_before(NodeIndex i) const;

  /// True when `i` is a leaf and every ancestor is split.
  bool is_leaf(NodeIndex i) const;

  int num_leaves() const { return 1 + (kOctreeBranching - 1) * popcount(); }

  /// Offset of leaf `i` in the tree's data array. Throws
  /// std::invalid_argument if `i` is split or unreachable.
  int data_index(NodeIndex i) const;

  /// Descends to the leaf containing local voxel (x,y,z).
  VoxelDepth voxel_depth(LocalCoord c) const;

  /// data_index of the leaf containing local voxel (x,y,z).
  int leaf_data_index(LocalCoord c) const;

  /// All leaves in ascending data offset order.
  std::vector<LeafCell> leaves() const;

  const std::bitset<kTreeBits>& mask() const { return mask_; }

  std::array<std::uint8_t, kTreeRecordBytes> serialize() const;
  static TreeBits deserialize(std::span<const std::uint8_t, kTreeRecordBytes> bytes);

  friend bool operator==(const TreeBits& a, const TreeBits& b) { return a.mask_ == b.mask_; }

 private:
  std::bitset<kTreeBits> mask_;
  // Prefix popcounts are derived from these two words.
  std::uint64_t lo_ = 0;
  std::uint64_t hi_ = 0;
};

/// A split mask for an arbitrary branching factor with implicit leaves at
/// depth 3. Used to check the octree arithmetic against hand-worked quadtree
/// examples; TreeBits is the b = 8 specialisation used everywhere else.
struct GenericTree {
  std::vector<bool> bits;  // one per split-capable node, breadth first
  int branching = kOctreeBranching;

  /// Parses a string of '0'/'1' characters, ignoring whitespace.
  static GenericTree parse(std::string_view text, int branching);

  bool is_split(NodeIndex i) const {
    return i >= 0 && static_cast<std::size_t>(i) < bits.size() && bits[static_cast<std::size_t>(i)];
  }
  int num_nodes() const;  // 1 + b + b^2 + b^3
};

int data_index(const GenericTree& tree, NodeIndex i);
int num_leaves(const GenericTree& tree);

}  // namespace octgrid
