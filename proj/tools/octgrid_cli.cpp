// Copyright Contributors to the octgrid Project
// SPDX-License-Identifier: Apache-2.0
//
// octgrid command line: voxelize, stats, check, bench, convert.
//
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "octgrid/builder.hpp"
#include "octgrid/harness.hpp"
#include "octgrid/io.hpp"

namespace {

using namespace octgrid;

struct CommonOptions {
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& common, bool with_out) {
  cmd->add_option("--seed", common.seed, "Random seed");
  cmd->add_option("--threads", common.threads, "Worker threads for per-tree parallelism")->check(CLI::PositiveNumber);
  if (with_out) cmd->add_option("--out", common.out, "Output path");
}

std::string lower_extension(const std::string& path) {
  auto ext = std::filesystem::path(path).extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

int cmd_voxelize(const std::string& input, std::string format, int resolution, int padding, bool labelled,
                 const std::string& labels_out, const CommonOptions& common) {
  if (common.out.empty()) throw std::invalid_argument("voxelize: --out is required");
  if (format.empty()) format = lower_extension(input) == ".off" ? "off" : "xyz";
  VoxelizeConfig cfg;
  cfg.resolution = resolution;
  cfg.padding = padding;
  cfg.validate();

  GridOctree grid;
  if (format == "off") {
    grid = voxelize_mesh(load_off(input), cfg);
  } else if (format == "xyz") {
    PointGrids built = build_from_points(load_xyz(input, labelled), cfg);
    if (built.labels && !labels_out.empty()) save_ocgr(labels_out, *built.labels);
    grid = std::move(built.features);
  } else {
    throw std::invalid_argument("voxelize: unknown format '" + format + "'");
  }
  save_ocgr(common.out, grid);
  std::cout << memory_report(grid).to_json().dump(2) << '\n';
  return 0;
}

int cmd_stats(const std::string& path) {
  const GridOctree grid = load_ocgr(path);
  nlohmann::json report = memory_report(grid).to_json();
  report["file_bytes"] = std::filesystem::file_size(path);
  std::cout << report.dump(2) << '\n';
  return 0;
}

int cmd_check(int resolution, int trials, const std::string& pool, const CommonOptions& common) {
  CheckConfig cfg;
  cfg.resolution = resolution;
  cfg.trials = trials;
  cfg.seed = common.seed;
  cfg.pool = parse_pool_fn(pool);
  cfg.threads = common.threads;
  const CheckReport report = run_check(cfg);
  std::cout << report.to_json().dump(2) << '\n';
  return report.all_pass() ? 0 : 1;
}

int cmd_bench(int resolution, const std::vector<double>& occupancies, int reps, const CommonOptions& common) {
  BenchConfig cfg;
  cfg.resolution = resolution;
  if (!occupancies.empty()) cfg.occupancies = occupancies;
  cfg.reps = reps;
  cfg.seed = common.seed;
  cfg.threads = common.threads;
  const auto rows = run_bench(cfg);

  std::ofstream file;
  if (!common.out.empty()) {
    file.open(common.out);
    if (!file) throw std::runtime_error("cannot write " + common.out);
  }
  std::ostream& out = common.out.empty() ? std::cout : file;
  out << bench_csv_header() << '\n';
  for (const auto& r : rows) out << to_csv_row(r) << '\n';

  // Wall-clock expectations are hardware dependent: warn, never fail.
  for (std::size_t n = 0; n + 2 < rows.size(); ++n) {
    const auto& eff = rows[n];
    if (eff.op != "conv_efficient" || eff.resolution < 128 || eff.occupancy > 0.05) continue;
    const auto& dense = rows[n + 1];
    if (dense.op == "dense_conv" && eff.wall_ms >= dense.wall_ms) {
      std::cerr << "warning: octree conv (" << eff.wall_ms << " ms) not faster than dense conv (" << dense.wall_ms
                << " ms) at " << eff.resolution << "^3, occupancy " << eff.occupancy << '\n';
    }
  }
  return 0;
}

int cmd_convert(const std::string& input, const std::string& output, const std::string& structure_mode, int channel,
                const std::string& pool) {
  const std::string magic = read_magic(input);
  if (magic == "OCGR") {
    save_dense(output, oct_to_ten(load_ocgr(input)));
    return 0;
  }
  if (magic != "DTEN") throw std::invalid_argument("convert: '" + input + "' is neither OCGR nor DTEN");

  const DenseTensor dense = load_dense(input);
  const auto shape = dense.shape();
  if (shape[0] % 8 != 0 || shape[1] % 8 != 0 || shape[2] % 8 != 0) {
    throw std::invalid_argument("convert: dense extents must be multiples of 8");
  }
  GridStructure structure;
  if (structure_mode == "from-occupancy") {
    structure = structure_from_dense(dense, channel);
  } else if (structure_mode == "from-nonzero") {
    DenseTensor mask(1, shape);
    for (int c = 0; c < dense.channels(); ++c) {
      for (int i = 0; i < shape[0]; ++i) {
        for (int j = 0; j < shape[1]; ++j) {
          for (int k = 0; k < shape[2]; ++k) {
            if (dense.at(c, i, j, k) != 0.0f) mask.at(0, i, j, k) = 1.0f;
          }
        }
      }
    }
    structure = structure_from_dense(mask);
  } else {
    throw std::invalid_argument("convert: unknown --structure '" + structure_mode + "'");
  }
  save_ocgr(output, ten_to_oct(dense, structure, parse_pool_fn(pool)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"octgrid: hybrid grid-octree tensors for sparse 3D data"};
  app.require_subcommand(1);

  CommonOptions common;

  std::string input, format, labels_out;
  int resolution = 64, padding = 2;
  bool labelled = false;
  auto* voxelize = app.add_subcommand("voxelize", "Voxelize an OFF mesh or XYZ point file into an OCGR grid");
  voxelize->add_option("input", input, "Input mesh or point file")->required();
  voxelize->add_option("--format", format, "Input format")->check(CLI::IsMember({"off", "xyz"}));
  voxelize->add_option("--resolution", resolution, "Voxels per axis (multiple of 8)");
  voxelize->add_option("--padding", padding, "Padding voxels around the fitted shape");
  voxelize->add_flag("--labels", labelled, "XYZ: last column is an integer class id");
  voxelize->add_option("--labels-out", labels_out, "XYZ: write the per-leaf label grid here");
  add_common(voxelize, common, true);

  std::string stats_path;
  auto* stats = app.add_subcommand("stats", "Print the memory report of an OCGR file");
  stats->add_option("file", stats_path, "OCGR file")->required();

  int check_resolution = 16, trials = 5;
  std::string pool = "avg";
  auto* check = app.add_subcommand("check", "Compare octree operations against the dense oracle");
  check->add_option("--resolution", check_resolution, "Voxels per axis")->check(CLI::IsMember({16, 32, 64}));
  check->add_option("--trials", trials, "Random grids per run")->check(CLI::PositiveNumber);
  check->add_option("--pool", pool, "Pooling for conv and ten2oct")->check(CLI::IsMember({"max", "avg"}));
  add_common(check, common, false);

  int bench_resolution = 64, reps = 1;
  std::vector<double> occupancies;
  auto* bench = app.add_subcommand("bench", "Time octree and dense convolution on shell-shaped occupancy");
  bench->add_option("--resolution", bench_resolution, "Voxels per axis (multiple of 8)");
  bench->add_option("--occupancy", occupancies, "Target occupancy fractions")->delimiter(',');
  bench->add_option("--reps", reps, "Repetitions per measurement")->check(CLI::PositiveNumber);
  add_common(bench, common, true);

  std::string convert_in, convert_to, structure_mode = "from-nonzero", convert_pool = "avg";
  int channel = 0;
  auto* convert = app.add_subcommand("convert", "Convert between OCGR grids and DTEN dense tensors");
  convert->add_option("input", convert_in, "OCGR or DTEN file")->required();
  convert->add_option("--to", convert_to, "Output path")->required();
  convert->add_option("--structure", structure_mode, "DTEN input: from-occupancy or from-nonzero")
      ->check(CLI::IsMember({"from-occupancy", "from-nonzero"}));
  convert->add_option("--channel", channel, "DTEN input: binary channel for from-occupancy");
  convert->add_option("--pool", convert_pool, "DTEN input: pooling onto the structure")
      ->check(CLI::IsMember({"max", "avg"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*voxelize) return cmd_voxelize(input, format, resolution, padding, labelled, labels_out, common);
    if (*stats) return cmd_stats(stats_path);
    if (*check) return cmd_check(check_resolution, trials, pool, common);
    if (*bench) return cmd_bench(bench_resolution, occupancies, reps, common);
    if (*convert) return cmd_convert(convert_in, convert_to, structure_mode, channel, convert_pool);
  } catch (const std::exception& e) {
    std::cerr << "octgrid: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
