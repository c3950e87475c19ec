// Copyright Contributors to the octgrid Project
// SPDX-License-Identifier: Apache-2.0
//
#include "octgrid/builder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

namespace octgrid {
namespace {

Box bounds_of(const std::vector<Vec3>& pts) {
  Box b;
  if (pts.empty()) return b;
  b.lo = b.hi = pts.front();
  for (const Vec3& p : pts) {
    for (int a = 0; a < 3; ++a) {
      b.lo[a] = std::min(b.lo[a], p[a]);
      b.hi[a] = std::max(b.hi[a], p[a]);
    }
  }
  return b;
}

int local_bit(int x, int y, int z) { return (z * 8 + y) * 8 + x; }

struct TreeVoxel {
  std::size_t tree = 0;
  int bit = 0;
};

TreeVoxel split_voxel(const GridStructure& s, int i, int j, int k) {
  return {s.tree_index(i / 8, j / 8, k / 8), local_bit(k % 8, j % 8, i % 8)};
}

}  // namespace

void TriangleMesh::validate() const {
  if (triangles.empty()) throw std::invalid_argument("mesh has no triangles");
  for (const auto& tri : triangles) {
    for (int idx : tri) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= vertices.size()) {
        throw std::invalid_argument("mesh triangle references vertex " + std::to_string(idx) + " of " +
                                    std::to_string(vertices.size()));
      }
    }
  }
}

Box TriangleMesh::bounds() const { return bounds_of(vertices); }

void PointSet::validate() const {
  if (feature_dim < 1) throw std::invalid_argument("point features need at least one channel");
  if (features.size() != points.size() * static_cast<std::size_t>(feature_dim)) {
    throw std::invalid_argument("point feature array does not match points * feature_dim");
  }
  if (!labels.empty() && labels.size() != points.size()) {
    throw std::invalid_argument("point label array does not match point count");
  }
}

Box PointSet::bounds() const { return bounds_of(points); }

void VoxelizeConfig::validate() const {
  if (resolution <= 0 || resolution % 8 != 0) {
    throw std::invalid_argument("resolution " + std::to_string(resolution) + " is not a positive multiple of 8");
  }
  if (padding < 0 || padding >= resolution) {
    throw std::invalid_argument("padding must satisfy 0 <= P < N");
  }
}

Transform fit_transform(const Box& bounds, const VoxelizeConfig& cfg) {
  cfg.validate();
  const Vec3 extent = bounds.hi - bounds.lo;
  const double longest = std::max({extent[0], extent[1], extent[2]});
  if (!(longest > 0.0)) throw std::invalid_argument("fit_transform: bounds have zero extent on every axis");
  Transform tf;
  tf.scale = static_cast<double>(cfg.resolution - cfg.padding) / longest;
  const Vec3 centre = 0.5 * (bounds.lo + bounds.hi);
  const double mid = 0.5 * cfg.resolution;
  tf.translation = Vec3{mid, mid, mid} - tf.scale * centre;
  return tf;
}

TriangleMesh rotate(const TriangleMesh& mesh, const Mat3& rotation) {
  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices) v = rotation * v;
  return out;
}

PointSet rotate(const PointSet& points, const Mat3& rotation) {
  PointSet out = points;
  for (Vec3& p : out.points) p = rotation * p;
  return out;
}

GridStructure structure_from_masks(GridDims dims, const std::vector<std::bitset<512>>& occupied) {
  if (occupied.size() != dims.num_trees()) throw std::invalid_argument("structure_from_masks: tree count mismatch");
  std::vector<TreeBits> trees;
  trees.reserve(occupied.size());
  for (const auto& mask : occupied) {
    std::bitset<kTreeBits> bits;
    if (mask.any()) {
      for (int b = 0; b < 512; ++b) {
        if (!mask[static_cast<std::size_t>(b)]) continue;
        const int x = b % 8, y = (b / 8) % 8, z = b / 64;
        const VoxelDepth leaf = TreeBits::full().voxel_depth({x, y, z});
        for (NodeIndex n = parent(leaf.leaf); ; n = parent(n)) {
          bits.set(static_cast<std::size_t>(n));
          if (n == 0) break;
        }
      }
    }
    trees.emplace_back(bits);
  }
  return GridStructure(dims, std::move(trees));
}

GridStructure structure_from_dense(const DenseTensor& occupancy, int channel) {
  const auto [X, Y, Z] = occupancy.shape();
  if (X % 8 != 0 || Y % 8 != 0 || Z % 8 != 0) {
    throw std::invalid_argument("structure_from_dense: extents must be multiples of 8");
  }
  if (channel < 0 || channel >= occupancy.channels()) {
    throw std::invalid_argument("structure_from_dense: channel " + std::to_string(channel) + " does not exist");
  }
  GridStructure shape;
  shape.dims = {X / 8, Y / 8, Z / 8};
  std::vector<std::bitset<512>> masks(shape.dims.num_trees());
  for (int i = 0; i < X; ++i) {
    for (int j = 0; j < Y; ++j) {
      for (int k = 0; k < Z; ++k) {
        const float v = occupancy.at(channel, i, j, k);
        if (v != 0.0f && v != 1.0f) throw std::invalid_argument("structure_from_dense: occupancy must be 0 or 1");
        if (v == 1.0f) {
          const TreeVoxel tv = split_voxel(shape, i, j, k);
          masks[tv.tree].set(static_cast<std::size_t>(tv.bit));
        }
      }
    }
  }
  return structure_from_masks(shape.dims, masks);
}

namespace {

/// One-channel grid on `structure` holding 1 in occupied finest leaves.
GridOctree occupancy_grid(GridStructure structure, const std::vector<std::bitset<512>>& masks) {
  GridOctree shape = GridOctree::filled(std::move(structure), 1);
  std::vector<float> data(shape.num_leaves(), 0.0f);
  for (std::size_t t = 0; t < shape.num_trees(); ++t) {
    if (masks[t].none()) continue;
    for (const GridLeaf& leaf : shape.tree_leaves(t)) {
      if (leaf.size != 1) continue;
      if (masks[t][static_cast<std::size_t>(local_bit(leaf.origin.k % 8, leaf.origin.j % 8, leaf.origin.i % 8))]) {
        data[leaf.leaf] = 1.0f;
      }
    }
  }
  return GridOctree(shape.structure(), 1, std::move(data));
}

}  // namespace

GridOctree voxelize_mesh(const TriangleMesh& mesh, const VoxelizeConfig& cfg) {
  cfg.validate();
  mesh.validate();
  const Transform tf = cfg.transform ? *cfg.transform : fit_transform(mesh.bounds(), cfg);
  const GridDims dims = cfg.grid_dims();
  GridStructure shape;
  shape.dims = dims;
  std::vector<std::bitset<512>> masks(dims.num_trees());
  const int n = cfg.resolution;
  const Vec3 half{0.5, 0.5, 0.5};

  for (const auto& tri_idx : mesh.triangles) {
    std::array<Vec3, 3> tri{};
    for (std::size_t v = 0; v < 3; ++v) {
      tri[v] = tf.apply(mesh.vertices[static_cast<std::size_t>(tri_idx[v])]);
    }
    // Candidate voxels: the triangle's bounding box grown by one voxel so that
    // boxes touching it on a face are tested too.
    std::array<int, 3> lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      const double mn = std::min({tri[0][a], tri[1][a], tri[2][a]});
      const double mx = std::max({tri[0][a], tri[1][a], tri[2][a]});
      lo[a] = std::max(0, static_cast<int>(std::floor(mn)) - 1);
      hi[a] = std::min(n - 1, static_cast<int>(std::floor(mx)) + 1);
    }
    for (int z = lo[2]; z <= hi[2]; ++z) {
      for (int y = lo[1]; y <= hi[1]; ++y) {
        for (int x = lo[0]; x <= hi[0]; ++x) {
          const Vec3 centre{x + 0.5, y + 0.5, z + 0.5};
          if (!tri_box_overlap(tri, centre, half)) continue;
          const TreeVoxel tv = split_voxel(shape, z, y, x);
          masks[tv.tree].set(static_cast<std::size_t>(tv.bit));
        }
      }
    }
  }
  return occupancy_grid(structure_from_masks(dims, masks), masks);
}

PointGrids build_from_points(const PointSet& points, const VoxelizeConfig& cfg, std::optional<int> num_classes) {
  cfg.validate();
  points.validate();
  Transform tf;
  if (cfg.transform) {
    tf = *cfg.transform;
  } else if (!points.points.empty()) {
    tf = fit_transform(points.bounds(), cfg);
  }

  const bool has_labels = !points.labels.empty();
  int classes = num_classes.value_or(0);
  if (has_labels && !num_classes) {
    classes = *std::max_element(points.labels.begin(), points.labels.end()) + 1;
  }
  for (int label : points.labels) {
    if (label < 0 || label >= classes) {
      throw std::invalid_argument("point label " + std::to_string(label) + " outside [0, " + std::to_string(classes) +
                                  ")");
    }
  }

  struct VoxelAcc {
    std::uint32_t count = 0;
    std::vector<double> sums;
    std::map<int, std::uint32_t> votes;
  };
  const GridDims dims = cfg.grid_dims();
  GridStructure shape;
  shape.dims = dims;
  std::vector<std::bitset<512>> masks(dims.num_trees());
  // Keyed by (tree, local bit); accumulation follows point input order.
  std::map<std::pair<std::size_t, int>, VoxelAcc> voxels;
  const auto f = static_cast<std::size_t>(points.feature_dim);
  const double n = cfg.resolution;

  for (std::size_t p = 0; p < points.points.size(); ++p) {
    const Vec3 q = tf.apply(points.points[p]);
    for (int a = 0; a < 3; ++a) {
      if (!(q[a] >= 0.0 && q[a] < n)) {
        throw std::invalid_argument("point " + std::to_string(p) + " falls outside the voxel grid");
      }
    }
    const TreeVoxel tv = split_voxel(shape, static_cast<int>(q[2]), static_cast<int>(q[1]), static_cast<int>(q[0]));
    masks[tv.tree].set(static_cast<std::size_t>(tv.bit));
    VoxelAcc& acc = voxels[{tv.tree, tv.bit}];
    if (acc.sums.empty()) acc.sums.assign(f, 0.0);
    ++acc.count;
    for (std::size_t c = 0; c < f; ++c) acc.sums[c] += static_cast<double>(points.features[p * f + c]);
    if (has_labels) ++acc.votes[points.labels[p]];
  }

  GridOctree layout = GridOctree::filled(structure_from_masks(dims, masks), points.feature_dim);
  std::vector<float> features(layout.data().size(), 0.0f);
  std::vector<float> labels(layout.num_leaves(), static_cast<float>(classes));
  std::vector<std::uint32_t> counts(layout.num_leaves(), 0);
  for (std::size_t t = 0; t < layout.num_trees(); ++t) {
    if (masks[t].none()) continue;
    for (const GridLeaf& leaf : layout.tree_leaves(t)) {
      if (leaf.size != 1) continue;
      const int bit = local_bit(leaf.origin.k % 8, leaf.origin.j % 8, leaf.origin.i % 8);
      const auto it = voxels.find({t, bit});
      if (it == voxels.end()) continue;
      const VoxelAcc& acc = it->second;
      counts[leaf.leaf] = acc.count;
      for (std::size_t c = 0; c < f; ++c) {
        features[leaf.leaf * f + c] = static_cast<float>(acc.sums[c] / static_cast<double>(acc.count));
      }
      if (has_labels) {
        // std::map iterates ids ascending, so strict > keeps the smallest on ties.
        int best = -1;
        std::uint32_t best_votes = 0;
        for (const auto& [label, votes] : acc.votes) {
          if (votes > best_votes) {
            best = label;
            best_votes = votes;
          }
        }
        labels[leaf.leaf] = static_cast<float>(best);
      }
    }
  }

  PointGrids out;
  out.void_label = classes;
  out.leaf_point_counts = std::move(counts);
  if (has_labels) out.labels = GridOctree(layout.structure(), 1, std::move(labels));
  out.features = GridOctree(layout.structure(), points.feature_dim, std::move(features));
  return out;
}

}  // namespace octgrid
