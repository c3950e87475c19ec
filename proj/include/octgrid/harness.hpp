// Copyright Contributors to the octgrid Project
// SPDX-License-Identifier: Apache-2.0
//
// Reporting and verification harness behind the CLI: memory accounting,
// seeded random grids, the dense-oracle equivalence suite and the
// convolution benchmark.
//
#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "octgrid/dense_ops.hpp"
#include "octgrid/grid_octree.hpp"
#include "octgrid/octree_ops.hpp"

namespace octgrid {

using Rng = std::mt19937_64;

// ---------------------------------------------------------------- memory

/// Byte accounting under the serialized layout: 10 bytes per tree record
/// plus 4 bytes per stored value. The fixed file header is reported
/// separately so that header_bytes + octree_bytes equals the file size.
struct MemoryReport {
  std::array<int, 3> resolution{0, 0, 0};
  int channels = 0;
  std::size_t trees = 0;
  std::size_t leaves = 0;
  std::array<std::size_t, 4> leaves_per_depth{0, 0, 0, 0};
  /// Voxels lying in depth-3 leaves with a nonzero feature, over all voxels.
  double occupancy = 0.0;
  std::uint64_t dense_bytes = 0;
  std::uint64_t octree_bytes = 0;
  std::uint64_t header_bytes = 0;
  double compression_ratio = 0.0;

  nlohmann::json to_json() const;
};

MemoryReport memory_report(const GridOctree& grid);

// ---------------------------------------------------------------- random data

/// Random valid tree: each reachable split-capable node splits with
/// probability `split_probability`.
TreeBits random_tree(Rng& rng, double split_probability);
GridStructure random_structure(GridDims dims, Rng& rng, double split_probability);
GridOctree random_grid(const GridStructure& structure, int channels, Rng& rng);
ConvKernel random_kernel(int out_channels, int in_channels, std::array<int, 3> size, Rng& rng);

/// Occupancy of one 8^3 block filled with `count` voxels along a randomly
/// permuted octant-order curve, so occupied voxels stay spatially coherent
/// like surface data rather than scattering uniformly.
std::bitset<512> coherent_fill(int count, Rng& rng);

/// Per-tree occupancy of a spherical shell in a cubic grid of `resolution`
/// voxels, sized so roughly `fraction` of the voxels are occupied.
std::vector<std::bitset<512>> shell_masks(int resolution, double fraction);

// ---------------------------------------------------------------- check suite

/// |a - b| / max(|a|, |b|), zero when both vanish.
double relative_error(float a, float b);
double max_relative_error(std::span<const float> a, std::span<const float> b);

struct CheckConfig {
  int resolution = 16;
  int trials = 5;
  std::uint64_t seed = 1;
  PoolFn pool = PoolFn::kAverage;
  int threads = 1;
};

struct OpCheck {
  std::string op;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

struct CheckReport {
  CheckConfig config;
  std::vector<OpCheck> ops;
  bool all_pass() const;
  nlohmann::json to_json() const;
};

inline constexpr double kConvTolerance = 1e-5;

/// Compares every octree operation against its dense counterpart on
/// `trials` random grids. Deterministic for a given seed.
CheckReport run_check(const CheckConfig& cfg);

// ---------------------------------------------------------------- benchmark

struct BenchConfig {
  int resolution = 64;
  std::vector<double> occupancies{0.01, 0.05, 0.1};
  int reps = 1;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct BenchRecord {
  std::string op;
  int resolution = 0;
  double target_occupancy = 0.0;
  double occupancy = 0.0;
  int threads = 1;
  int reps = 1;
  double wall_ms = 0.0;
  OpStats stats;
  double mult_ratio = 1.0;  // multiplications relative to conv_naive on the same input
  std::string checksum;
};

inline constexpr int kBenchSchemaVersion = 1;

/// Header row of the benchmark CSV.
std::string bench_csv_header();
std::string to_csv_row(const BenchRecord& r);

/// The isolated 8^3 cell rows followed by one row per (op, occupancy).
std::vector<BenchRecord> run_bench(const BenchConfig& cfg);

/// FNV-1a over the bit patterns of `values`, as 16 hex digits.
std::string checksum(std::span<const float> values);

}  // namespace octgrid
