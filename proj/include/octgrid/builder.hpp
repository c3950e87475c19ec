// Copyright Contributors to the octgrid Project
// SPDX-License-Identifier: Apache-2.0
//
// Construction of grid-octrees from meshes, labelled point sets and dense
// occupancy. A node is split iff its extent holds at least one occupied
// voxel and it sits above depth 3.
//
// Model coordinates (x, y, z) land in voxel (i, j, k) = (floor z, floor y,
// floor x) after the model-to-voxel transform, so x runs fastest.
//
#pragma once

#include <bitset>
#include <cstdint>
#include <optional>
#include <vector>

#include "octgrid/geometry.hpp"
#include "octgrid/grid_octree.hpp"

namespace octgrid {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  /// Throws std::invalid_argument for out-of-range indices or no triangles.
  void validate() const;
  Box bounds() const;
};

struct PointSet {
  std::vector<Vec3> points;
  int feature_dim = 1;
  std::vector<float> features;  // points.size() * feature_dim, row per point
  std::vector<int> labels;      // empty, or one class id per point

  void validate() const;
  Box bounds() const;
};

/// Uniform scale followed by translation, model units to voxel units.
struct Transform {
  double scale = 1.0;
  Vec3 translation{0.0, 0.0, 0.0};

  Vec3 apply(const Vec3& p) const { return scale * p + translation; }
};

struct VoxelizeConfig {
  int resolution = 64;  // voxels per axis, multiple of 8
  int padding = 2;
  /// Explicit model-to-voxel mapping; when empty it is fitted to the input.
  std::optional<Transform> transform;

  void validate() const;
  GridDims grid_dims() const { return {resolution / 8, resolution / 8, resolution / 8}; }
};

/// Maps `bounds` into the centred (N-P)^3 box of [0,N)^3, preserving aspect
/// ratio. Throws std::invalid_argument if the bounds have zero extent.
Transform fit_transform(const Box& bounds, const VoxelizeConfig& cfg);

TriangleMesh rotate(const TriangleMesh& mesh, const Mat3& rotation);
PointSet rotate(const PointSet& points, const Mat3& rotation);

/// Split structure from an occupancy mask over whole trees; bit z*64+y*8+x
/// of tree t marks local voxel (x, y, z).
GridStructure structure_from_masks(GridDims dims, const std::vector<std::bitset<512>>& occupied);

/// Split structure from a binary tensor channel. Throws for values other
/// than 0 and 1 or extents that are not multiples of 8.
GridStructure structure_from_dense(const DenseTensor& occupancy, int channel = 0);

/// Surface occupancy grid, one channel: occupied depth-3 leaves hold 1,
/// every other leaf 0.
GridOctree voxelize_mesh(const TriangleMesh& mesh, const VoxelizeConfig& cfg);

struct PointGrids {
  GridOctree features;
  std::optional<GridOctree> labels;  // same structure, one channel of class ids
  std::vector<std::uint32_t> leaf_point_counts;
  int void_label = 0;
};

/// Averages point features per occupied voxel and takes the majority label
/// (ties to the smallest id). Empty leaves hold zero features and the void
/// label, which is `num_classes` (default: max label + 1).
PointGrids build_from_points(const PointSet& points, const VoxelizeConfig& cfg,
                             std::optional<int> num_classes = std::nullopt);

}  // namespace octgrid
