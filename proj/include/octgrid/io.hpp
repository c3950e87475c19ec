// Copyright Contributors to the octgrid Project
// SPDX-License-Identifier: Apache-2.0
//
// File formats. All binary integers and floats are little-endian.
//
//   OCGR  "OCGR" u32 version(=1) u32 D H W C, D*H*W 10-byte tree records
//         (row-major d,h,w), then the leaf data as float32.
//   DTEN  "DTEN" u32 C X Y Z, then C*X*Y*Z float32 values, row-major.
//   OFF   ASCII mesh, triangle faces only.
//   XYZ   ASCII points, one per line: x y z [f1 .. fF] [label].
//
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "octgrid/builder.hpp"
#include "octgrid/grid_octree.hpp"

namespace octgrid {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kOcgrVersion = 1;
inline constexpr std::size_t kOcgrHeaderBytes = 24;
inline constexpr std::size_t kDtenHeaderBytes = 20;

void write_ocgr(std::ostream& out, const GridOctree& grid);
GridOctree read_ocgr(std::istream& in);
void save_ocgr(const std::filesystem::path& path, const GridOctree& grid);
GridOctree load_ocgr(const std::filesystem::path& path);

void write_dense(std::ostream& out, const DenseTensor& t);
DenseTensor read_dense(std::istream& in);
void save_dense(const std::filesystem::path& path, const DenseTensor& t);
DenseTensor load_dense(const std::filesystem::path& path);

TriangleMesh read_off(std::istream& in);
TriangleMesh load_off(const std::filesystem::path& path);

/// With `labelled`, the last column of every line is an integer class id.
/// Lines carrying only coordinates get a single occupancy feature of 1.
PointSet read_xyz(std::istream& in, bool labelled);
PointSet load_xyz(const std::filesystem::path& path, bool labelled);

/// First four bytes of a file, for format sniffing.
std::string read_magic(const std::filesystem::path& path);

}  // namespace octgrid
