// Copyright Contributors to the octgrid Project
// SPDX-License-Identifier: Apache-2.0
//
#include "octgrid/harness.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <sstream>

#include "octgrid/builder.hpp"
#include "octgrid/io.hpp"

namespace octgrid {

nlohmann::json MemoryReport::to_json() const {
  return {
      {"resolution", resolution},
      {"channels", channels},
      {"trees", trees},
      {"leaves", leaves},
      {"leaves_per_depth", leaves_per_depth},
      {"occupancy", occupancy},
      {"dense_bytes", dense_bytes},
      {"octree_bytes", octree_bytes},
      {"header_bytes", header_bytes},
      {"compression_ratio", compression_ratio},
  };
}

MemoryReport memory_report(const GridOctree& grid) {
  MemoryReport r;
  r.resolution = grid.resolution();
  r.channels = grid.channels();
  r.trees = grid.num_trees();
  r.leaves = grid.num_leaves();
  const auto c = static_cast<std::uint64_t>(grid.channels());
  std::uint64_t occupied = 0;
  for (std::size_t t = 0; t < grid.num_trees(); ++t) {
    for (const GridLeaf& leaf : grid.tree_leaves(t)) {
      ++r.leaves_per_depth[static_cast<std::size_t>(leaf.depth)];
      if (leaf.size != 1) continue;
      const auto v = grid.leaf_values(leaf.leaf);
      if (std::any_of(v.begin(), v.end(), [](float x) { return x != 0.0f; })) ++occupied;
    }
  }
  const std::uint64_t voxels = grid.dims().num_voxels();
  r.occupancy = static_cast<double>(occupied) / static_cast<double>(voxels);
  r.dense_bytes = 4 * c * voxels;
  r.octree_bytes = kTreeRecordBytes * static_cast<std::uint64_t>(r.trees) + 4 * c * r.leaves;
  r.header_bytes = kOcgrHeaderBytes;
  r.compression_ratio = static_cast<double>(r.dense_bytes) / static_cast<double>(r.octree_bytes);
  return r;
}

TreeBits random_tree(Rng& rng, double split_probability) {
  std::bernoulli_distribution split(split_probability);
  std::bitset<kTreeBits> mask;
  for (NodeIndex i = 0; i < kTreeBits; ++i) {
    if (i > 0 && !mask[static_cast<std::size_t>(parent(i))]) continue;
    if (split(rng)) mask.set(static_cast<std::size_t>(i));
  }
  return TreeBits(mask);
}

GridStructure random_structure(GridDims dims, Rng& rng, double split_probability) {
  std::vector<TreeBits> trees;
  trees.reserve(dims.num_trees());
  for (std::size_t t = 0; t < dims.num_trees(); ++t) trees.push_back(random_tree(rng, split_probability));
  return GridStructure(dims, std::move(trees));
}

GridOctree random_grid(const GridStructure& structure, int channels, Rng& rng) {
  std::uniform_real_distribution<float> value(-1.0f, 1.0f);
  std::vector<float> data(structure.total_leaves() * static_cast<std::size_t>(channels));
  for (float& v : data) v = value(rng);
  return GridOctree(structure, channels, std::move(data));
}

ConvKernel random_kernel(int out_channels, int in_channels, std::array<int, 3> size, Rng& rng) {
  std::uniform_real_distribution<float> value(-1.0f, 1.0f);
  std::vector<float> w(static_cast<std::size_t>(out_channels) * static_cast<std::size_t>(in_channels) *
                       static_cast<std::size_t>(size[0] * size[1] * size[2]));
  for (float& v : w) v = value(rng);
  std::vector<float> b(static_cast<std::size_t>(out_channels));
  for (float& v : b) v = value(rng);
  return ConvKernel(out_channels, in_channels, size, std::move(w), std::move(b));
}

std::bitset<512> coherent_fill(int count, Rng& rng) {
  std::vector<int> order;
  order.reserve(512);
  // Depth-first over octants, each node visiting its children in a fresh
  // random permutation.
  auto visit = [&](auto&& self, LocalCoord origin, int size) -> void {
    if (size == 1) {
      order.push_back((origin.z * 8 + origin.y) * 8 + origin.x);
      return;
    }
    std::array<int, 8> perm{};
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const int half = size / 2;
    for (int o : perm) {
      const LocalCoord off = octant_offset(o);
      self(self, LocalCoord{origin.x + off.x * half, origin.y + off.y * half, origin.z + off.z * half}, half);
    }
  };
  visit(visit, LocalCoord{}, 8);
  std::bitset<512> mask;
  for (int n = 0; n < std::clamp(count, 0, 512); ++n) mask.set(static_cast<std::size_t>(order[static_cast<std::size_t>(n)]));
  return mask;
}

std::vector<std::bitset<512>> shell_masks(int resolution, double fraction) {
  const int trees_per_axis = resolution / 8;
  std::vector<std::bitset<512>> masks(static_cast<std::size_t>(trees_per_axis) * trees_per_axis * trees_per_axis);
  if (fraction <= 0.0) return masks;
  const double n = resolution;
  const double radius = 0.35 * n;
  const double thickness = fraction * n * n * n / (4.0 * std::numbers::pi * radius * radius);
  const double centre = 0.5 * n;
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      for (int k = 0; k < resolution; ++k) {
        const double di = i + 0.5 - centre, dj = j + 0.5 - centre, dk = k + 0.5 - centre;
        const double r = std::sqrt(di * di + dj * dj + dk * dk);
        if (std::abs(r - radius) >= 0.5 * thickness) continue;
        const std::size_t t =
            (static_cast<std::size_t>(i / 8) * static_cast<std::size_t>(trees_per_axis) + static_cast<std::size_t>(j / 8)) *
                static_cast<std::size_t>(trees_per_axis) +
            static_cast<std::size_t>(k / 8);
        masks[t].set(static_cast<std::size_t>(((i % 8) * 8 + j % 8) * 8 + k % 8));
      }
    }
  }
  return masks;
}

double relative_error(float a, float b) {
  if (a == b) return 0.0;
  const double da = a, db = b;
  const double scale = std::max(std::abs(da), std::abs(db));
  if (!std::isfinite(scale)) return std::numeric_limits<double>::infinity();
  return std::abs(da - db) / scale;
}

double max_relative_error(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) worst = std::max(worst, relative_error(a[n], b[n]));
  return worst;
}

bool CheckReport::all_pass() const {
  return std::all_of(ops.begin(), ops.end(), [](const OpCheck& c) { return c.pass; });
}

nlohmann::json CheckReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const OpCheck& c : ops) {
    rows.push_back({{"op", c.op}, {"max_rel_error", c.max_rel_error}, {"tolerance", c.tolerance}, {"pass", c.pass}});
  }
  return {{"resolution", config.resolution},
          {"trials", config.trials},
          {"seed", config.seed},
          {"pool", to_string(config.pool)},
          {"threads", config.threads},
          {"ops", rows},
          {"pass", all_pass()}};
}

namespace {

class CheckTally {
 public:
  void record(const std::string& op, double error, double tolerance) {
    auto it = std::find_if(ops_.begin(), ops_.end(), [&](const OpCheck& c) { return c.op == op; });
    if (it == ops_.end()) {
      ops_.push_back({op, 0.0, tolerance, true});
      it = std::prev(ops_.end());
    }
    it->max_rel_error = std::max(it->max_rel_error, error);
    it->pass = it->pass && error <= tolerance;
  }
  std::vector<OpCheck> take() { return std::move(ops_); }

 private:
  std::vector<OpCheck> ops_;
};

constexpr double kCheckSplitProbability = 0.45;

}  // namespace

CheckReport run_check(const CheckConfig& cfg) {
  if (cfg.resolution <= 0 || cfg.resolution % 16 != 0) {
    throw std::invalid_argument("check: resolution must be a positive multiple of 16");
  }
  if (cfg.trials < 1) throw std::invalid_argument("check: need at least one trial");
  const int trees = cfg.resolution / 8;
  const GridDims dims{trees, trees, trees};
  Rng rng(cfg.seed);
  CheckTally tally;
  constexpr int kChannelsIn = 2;
  constexpr int kChannelsOut = 2;

  for (int trial = 0; trial < cfg.trials; ++trial) {
    const GridOctree grid = random_grid(random_structure(dims, rng, kCheckSplitProbability), kChannelsIn, rng);
    const ConvKernel kernel = random_kernel(kChannelsOut, kChannelsIn, {3, 3, 3}, rng);
    const DenseTensor dense = oct_to_ten(grid, cfg.threads);

    const GridOctree reference = ten_to_oct(dense_conv(dense, kernel), grid.structure(), cfg.pool, cfg.threads);
    const auto naive = conv_naive(grid, kernel, cfg.pool, cfg.threads);
    const auto efficient = conv_efficient(grid, kernel, cfg.pool, cfg.threads);
    tally.record("conv_naive", max_relative_error(naive.grid.data(), reference.data()), kConvTolerance);
    tally.record("conv_efficient", max_relative_error(efficient.grid.data(), reference.data()), kConvTolerance);

    const ConvKernel identity = ConvKernel::identity(kChannelsIn);
    const GridOctree identity_ref = ten_to_oct(dense_conv(dense, identity), grid.structure(), cfg.pool, cfg.threads);
    tally.record("conv_identity",
                 std::max(max_relative_error(conv_naive(grid, identity, cfg.pool, cfg.threads).grid.data(),
                                             identity_ref.data()),
                          max_relative_error(conv_efficient(grid, identity, cfg.pool, cfg.threads).grid.data(),
                                             identity_ref.data())),
                 0.0);

    const GridOctree full = random_grid(GridStructure::uniform(dims, TreeBits::full()), kChannelsIn, rng);
    const DenseTensor full_dense = oct_to_ten(full, cfg.threads);
    for (PoolFn pool : {PoolFn::kMax, PoolFn::kAverage}) {
      const std::string suffix = pool == PoolFn::kMax ? "max" : "avg";
      tally.record("pool2_full_" + suffix,
                   max_relative_error(oct_to_ten(pool2(full, pool)).values(), dense_pool2(full_dense, pool).values()),
                   0.0);
      tally.record("pool2_mixed_" + suffix,
                   max_relative_error(oct_to_ten(pool2(grid, pool)).values(), dense_pool2(dense, pool).values()), 0.0);
    }

    tally.record("unpool2", max_relative_error(oct_to_ten(unpool2(grid)).values(), dense_unpool2(dense).values()),
                 0.0);

    // Guided unpooling as in an encoder/decoder: the guide is the structure
    // that went into the matching pooling layer.
    const GuideStructure guide = random_structure(dims, rng, kCheckSplitProbability);
    const GridOctree coarse = random_grid(pool2_structure(guide), kChannelsIn, rng);
    const GridOctree guided = unpool2_guided(coarse, guide);
    const double guided_err =
        guided.structure() == guide
            ? max_relative_error(oct_to_ten(guided).values(), dense_unpool2(oct_to_ten(coarse)).values())
            : std::numeric_limits<double>::infinity();
    tally.record("unpool2_guided", guided_err, 0.0);

    tally.record("pointwise_relu",
                 max_relative_error(oct_to_ten(pointwise(grid, relu)).values(),
                                    dense_pointwise(dense, relu).values()),
                 0.0);

    const GridOctree other = random_grid(grid.structure(), 1, rng);
    std::vector<float> expected(dense.values().begin(), dense.values().end());
    const DenseTensor other_dense = oct_to_ten(other);
    expected.insert(expected.end(), other_dense.values().begin(), other_dense.values().end());
    tally.record("concat", max_relative_error(oct_to_ten(concat(grid, other)).values(), expected), 0.0);
  }
  CheckReport report;
  report.config = cfg;
  report.ops = tally.take();
  return report;
}

std::string checksum(std::span<const float> values) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (float v : values) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) {
      h ^= (bits >> (8 * b)) & 0xFFu;
      h *= 0x100000001b3ull;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string bench_csv_header() {
  return "schema_version,op,resolution,target_occupancy,occupancy,threads,reps,wall_ms,multiplications,"
         "cells_visited,boundary_voxels_evaluated,mult_ratio,checksum";
}

std::string to_csv_row(const BenchRecord& r) {
  std::ostringstream s;
  s.precision(6);
  s << kBenchSchemaVersion << ',' << r.op << ',' << r.resolution << ',' << r.target_occupancy << ',' << r.occupancy
    << ',' << r.threads << ',' << r.reps << ',' << r.wall_ms << ',' << r.stats.multiplications << ','
    << r.stats.cells_visited << ',' << r.stats.boundary_voxels_evaluated << ',' << r.mult_ratio << ','
    << r.checksum;
  return s.str();
}

namespace {

template <typename Fn>
double time_ms(int reps, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto end = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(end - start).count() / std::max(reps, 1);
}

void bench_grid(const GridOctree& grid, const ConvKernel& kernel, const BenchConfig& cfg, double target,
                double occupancy, bool with_dense, std::vector<BenchRecord>& out) {
  BenchRecord base;
  base.resolution = grid.resolution()[0];
  base.target_occupancy = target;
  base.occupancy = occupancy;
  base.threads = cfg.threads;
  base.reps = cfg.reps;

  ConvResult naive;
  BenchRecord rn = base;
  rn.op = "conv_naive";
  rn.wall_ms = time_ms(cfg.reps, [&] { naive = conv_naive(grid, kernel, PoolFn::kAverage, cfg.threads); });
  rn.stats = naive.stats;
  rn.checksum = checksum(naive.grid.data());

  ConvResult efficient;
  BenchRecord re = base;
  re.op = "conv_efficient";
  re.wall_ms = time_ms(cfg.reps, [&] { efficient = conv_efficient(grid, kernel, PoolFn::kAverage, cfg.threads); });
  re.stats = efficient.stats;
  re.checksum = checksum(efficient.grid.data());

  const double naive_mults = static_cast<double>(naive.stats.multiplications);
  re.mult_ratio = static_cast<double>(efficient.stats.multiplications) / naive_mults;
  out.push_back(rn);
  out.push_back(re);

  if (!with_dense) return;
  const DenseTensor dense = oct_to_ten(grid, cfg.threads);
  DenseTensor result;
  BenchRecord rd = base;
  rd.op = "dense_conv";
  rd.wall_ms = time_ms(cfg.reps, [&] { result = dense_conv(dense, kernel); });
  rd.stats.multiplications = static_cast<std::uint64_t>(dense.spatial_size()) *
                             static_cast<std::uint64_t>(kernel.taps()) *
                             static_cast<std::uint64_t>(kernel.in_channels() * kernel.out_channels());
  rd.stats.cells_visited = dense.spatial_size();
  rd.stats.boundary_voxels_evaluated = dense.spatial_size();
  rd.mult_ratio = static_cast<double>(rd.stats.multiplications) / naive_mults;
  rd.checksum = checksum(result.values());
  out.push_back(rd);
}

}  // namespace

std::vector<BenchRecord> run_bench(const BenchConfig& cfg) {
  if (cfg.resolution <= 0 || cfg.resolution % 8 != 0) {
    throw std::invalid_argument("bench: resolution must be a positive multiple of 8");
  }
  Rng rng(cfg.seed);
  const ConvKernel kernel = random_kernel(1, 1, {3, 3, 3}, rng);
  std::vector<BenchRecord> rows;

  // One isolated 8^3 cell.
  const GridOctree cell = random_grid(GridStructure::uniform({1, 1, 1}, TreeBits::empty()), 1, rng);
  bench_grid(cell, kernel, cfg, 0.0, 0.0, false, rows);

  const int trees = cfg.resolution / 8;
  const GridDims dims{trees, trees, trees};
  for (double target : cfg.occupancies) {
    const auto masks = shell_masks(cfg.resolution, target);
    const GridOctree grid = random_grid(structure_from_masks(dims, masks), 1, rng);
    std::size_t occupied = 0;
    for (const auto& m : masks) occupied += m.count();
    const double occupancy = static_cast<double>(occupied) / static_cast<double>(dims.num_voxels());
    bench_grid(grid, kernel, cfg, target, occupancy, true, rows);
  }
  return rows;
}

}  // namespace octgrid
