// Copyright Contributors to the octgrid Project
// SPDX-License-Identifier: Apache-2.0
//
#include "octgrid/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace octgrid {
namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

void put_f32(std::ostream& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

void read_exact(std::istream& in, void* dst, std::size_t n, const char* what) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw FormatError(std::string("truncated ") + what);
}

std::uint32_t get_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  read_exact(in, b, 4, what);
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) | (std::uint32_t{b[3]} << 24);
}

std::vector<float> get_f32_array(std::istream& in, std::size_t n, const char* what) {
  std::vector<unsigned char> raw(n * 4);
  read_exact(in, raw.data(), raw.size(), what);
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t u = std::uint32_t{raw[4 * i]} | (std::uint32_t{raw[4 * i + 1]} << 8) |
                            (std::uint32_t{raw[4 * i + 2]} << 16) | (std::uint32_t{raw[4 * i + 3]} << 24);
    out[i] = std::bit_cast<float>(u);
  }
  return out;
}

void expect_magic(std::istream& in, const char* magic, const char* what) {
  char m[4];
  read_exact(in, m, 4, what);
  if (std::memcmp(m, magic, 4) != 0) throw FormatError(std::string(what) + ": bad magic");
}

void expect_eof(std::istream& in, const char* what) {
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError(std::string(what) + ": trailing bytes");
}

int checked_dim(std::uint32_t v, const char* what) {
  if (v == 0 || v > (1u << 20)) throw FormatError(std::string(what) + ": implausible dimension");
  return static_cast<int>(v);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

/// Next line that is neither blank nor a '#' comment.
bool next_content_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

}  // namespace

void write_ocgr(std::ostream& out, const GridOctree& grid) {
  out.write("OCGR", 4);
  put_u32(out, kOcgrVersion);
  put_u32(out, static_cast<std::uint32_t>(grid.dims().d));
  put_u32(out, static_cast<std::uint32_t>(grid.dims().h));
  put_u32(out, static_cast<std::uint32_t>(grid.dims().w));
  put_u32(out, static_cast<std::uint32_t>(grid.channels()));
  for (const TreeBits& tree : grid.structure().trees) {
    const auto rec = tree.serialize();
    out.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
  }
  for (float v : grid.data()) put_f32(out, v);
  if (!out) throw std::runtime_error("write_ocgr: stream error");
}

GridOctree read_ocgr(std::istream& in) {
  expect_magic(in, "OCGR", "OCGR header");
  const std::uint32_t version = get_u32(in, "OCGR header");
  if (version != kOcgrVersion) throw FormatError("OCGR: unsupported version " + std::to_string(version));
  GridDims dims;
  dims.d = checked_dim(get_u32(in, "OCGR header"), "OCGR");
  dims.h = checked_dim(get_u32(in, "OCGR header"), "OCGR");
  dims.w = checked_dim(get_u32(in, "OCGR header"), "OCGR");
  const int channels = checked_dim(get_u32(in, "OCGR header"), "OCGR");
  std::vector<TreeBits> trees;
  trees.reserve(dims.num_trees());
  for (std::size_t t = 0; t < dims.num_trees(); ++t) {
    std::array<std::uint8_t, kTreeRecordBytes> rec{};
    read_exact(in, rec.data(), rec.size(), "OCGR tree records");
    try {
      trees.push_back(TreeBits::deserialize(rec));
    } catch (const std::invalid_argument& e) {
      throw FormatError("OCGR tree " + std::to_string(t) + ": " + e.what());
    }
  }
  GridStructure structure(dims, std::move(trees));
  auto data = get_f32_array(in, structure.total_leaves() * static_cast<std::size_t>(channels), "OCGR data");
  expect_eof(in, "OCGR");
  return GridOctree(std::move(structure), channels, std::move(data));
}

void save_ocgr(const std::filesystem::path& path, const GridOctree& grid) {
  auto out = open_out(path);
  write_ocgr(out, grid);
}

GridOctree load_ocgr(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_ocgr(in);
}

void write_dense(std::ostream& out, const DenseTensor& t) {
  out.write("DTEN", 4);
  put_u32(out, static_cast<std::uint32_t>(t.channels()));
  for (int s : t.shape()) put_u32(out, static_cast<std::uint32_t>(s));
  for (float v : t.values()) put_f32(out, v);
  if (!out) throw std::runtime_error("write_dense: stream error");
}

DenseTensor read_dense(std::istream& in) {
  expect_magic(in, "DTEN", "DTEN header");
  const int c = checked_dim(get_u32(in, "DTEN header"), "DTEN");
  std::array<int, 3> shape{};
  for (int& s : shape) s = checked_dim(get_u32(in, "DTEN header"), "DTEN");
  const std::size_t n = static_cast<std::size_t>(c) * static_cast<std::size_t>(shape[0]) *
                        static_cast<std::size_t>(shape[1]) * static_cast<std::size_t>(shape[2]);
  auto values = get_f32_array(in, n, "DTEN data");
  expect_eof(in, "DTEN");
  return DenseTensor(c, shape, std::move(values));
}

void save_dense(const std::filesystem::path& path, const DenseTensor& t) {
  auto out = open_out(path);
  write_dense(out, t);
}

DenseTensor load_dense(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_dense(in);
}

TriangleMesh read_off(std::istream& in) {
  std::string line;
  if (!next_content_line(in, line)) throw FormatError("OFF: empty file");
  std::istringstream header(line);
  std::string magic;
  header >> magic;
  if (magic != "OFF") throw FormatError("OFF: missing 'OFF' header");
  long nv = -1, nf = -1, ne = 0;
  if (!(header >> nv >> nf)) {
    if (!next_content_line(in, line)) throw FormatError("OFF: missing counts");
    std::istringstream counts(line);
    if (!(counts >> nv >> nf)) throw FormatError("OFF: malformed counts line");
    counts >> ne;
  }
  if (nv < 0 || nf < 0) throw FormatError("OFF: negative counts");

  TriangleMesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(nv));
  for (long v = 0; v < nv; ++v) {
    if (!next_content_line(in, line)) throw FormatError("OFF: truncated vertex list");
    std::istringstream row(line);
    Vec3 p{};
    if (!(row >> p[0] >> p[1] >> p[2])) throw FormatError("OFF: malformed vertex " + std::to_string(v));
    mesh.vertices.push_back(p);
  }
  for (long f = 0; f < nf; ++f) {
    if (!next_content_line(in, line)) throw FormatError("OFF: truncated face list");
    std::istringstream row(line);
    int count = 0;
    std::array<int, 3> tri{};
    if (!(row >> count)) throw FormatError("OFF: malformed face " + std::to_string(f));
    if (count != 3) throw FormatError("OFF: face " + std::to_string(f) + " is not a triangle");
    if (!(row >> tri[0] >> tri[1] >> tri[2])) throw FormatError("OFF: malformed face " + std::to_string(f));
    mesh.triangles.push_back(tri);
  }
  try {
    mesh.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("OFF: ") + e.what());
  }
  return mesh;
}

TriangleMesh load_off(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_off(in);
}

PointSet read_xyz(std::istream& in, bool labelled) {
  PointSet pts;
  std::string line;
  std::size_t columns = 0;
  std::size_t line_no = 0;
  while (next_content_line(in, line)) {
    ++line_no;
    std::istringstream row(line);
    std::vector<double> cols;
    double v = 0.0;
    while (row >> v) cols.push_back(v);
    if (!row.eof()) throw FormatError("XYZ: non-numeric value on record " + std::to_string(line_no));
    if (columns == 0) {
      columns = cols.size();
      const std::size_t minimum = labelled ? 4 : 3;
      if (columns < minimum) throw FormatError("XYZ: too few columns");
      const std::size_t f = columns - 3 - (labelled ? 1 : 0);
      pts.feature_dim = f == 0 ? 1 : static_cast<int>(f);
    } else if (cols.size() != columns) {
      throw FormatError("XYZ: record " + std::to_string(line_no) + " has " + std::to_string(cols.size()) +
                        " columns, expected " + std::to_string(columns));
    }
    pts.points.push_back({cols[0], cols[1], cols[2]});
    const std::size_t feature_end = labelled ? columns - 1 : columns;
    if (feature_end == 3) {
      pts.features.push_back(1.0f);
    } else {
      for (std::size_t c = 3; c < feature_end; ++c) pts.features.push_back(static_cast<float>(cols[c]));
    }
    if (labelled) {
      const double label = cols.back();
      if (label != static_cast<double>(static_cast<long>(label)) || label < 0) {
        throw FormatError("XYZ: label on record " + std::to_string(line_no) + " is not a non-negative integer");
      }
      pts.labels.push_back(static_cast<int>(label));
    }
  }
  return pts;
}

PointSet load_xyz(const std::filesystem::path& path, bool labelled) {
  auto in = open_in(path);
  return read_xyz(in, labelled);
}

std::string read_magic(const std::filesystem::path& path) {
  auto in = open_in(path);
  char m[4] = {0, 0, 0, 0};
  in.read(m, 4);
  return std::string(m, static_cast<std::size_t>(in.gcount()));
}

}  // namespace octgrid
