// Copyright Contributors to the octgrid Project
// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "octgrid/harness.hpp"
#include "octgrid/io.hpp"

using namespace octgrid;

namespace {

GridOctree sample_grid() {
  Rng rng(31);
  return random_grid(random_structure({1, 2, 3}, rng, 0.5), 2, rng);
}

std::string ocgr_bytes(const GridOctree& g) {
  std::ostringstream out;
  write_ocgr(out, g);
  return out.str();
}

GridOctree parse_ocgr(const std::string& bytes) {
  std::istringstream in(bytes);
  return read_ocgr(in);
}

}  // namespace

TEST_CASE("OCGR roundtrip and layout") {
  const GridOctree g = sample_grid();
  const std::string bytes = ocgr_bytes(g);
  CHECK(bytes.size() == kOcgrHeaderBytes + 10 * g.num_trees() + 4 * g.data().size());
  CHECK(bytes.substr(0, 4) == "OCGR");
  CHECK(bytes[4] == 1);
  CHECK(bytes[12] == 2);  // H
  CHECK(bytes[16] == 3);  // W
  CHECK(bytes[20] == 2);  // C
  CHECK(parse_ocgr(bytes) == g);
  CHECK(ocgr_bytes(parse_ocgr(bytes)) == bytes);
}

TEST_CASE("corrupt OCGR files are rejected") {
  const std::string bytes = ocgr_bytes(sample_grid());
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(parse_ocgr(bad), FormatError);
  CHECK_THROWS_AS(parse_ocgr(bytes.substr(0, bytes.size() - 1)), FormatError);
  CHECK_THROWS_AS(parse_ocgr(bytes.substr(0, 10)), FormatError);
  CHECK_THROWS_AS(parse_ocgr(bytes + "x"), FormatError);
  bad = bytes;
  bad[4] = 2;
  CHECK_THROWS_AS(parse_ocgr(bad), FormatError);
  bad = bytes;
  bad[kOcgrHeaderBytes + 9] = static_cast<char>(0x80);  // padding bit of tree 0
  CHECK_THROWS_AS(parse_ocgr(bad), FormatError);
  bad = bytes;
  bad[kOcgrHeaderBytes] = 0;  // root cleared under split children
  if (static_cast<unsigned char>(bytes[kOcgrHeaderBytes]) > 1) CHECK_THROWS_AS(parse_ocgr(bad), FormatError);
  bad = bytes;
  bad[8] = 0;  // D = 0
  CHECK_THROWS_AS(parse_ocgr(bad), FormatError);
}

TEST_CASE("DTEN roundtrip") {
  DenseTensor t(2, {3, 1, 4});
  for (std::size_t n = 0; n < t.values().size(); ++n) t.values()[n] = 0.25f * static_cast<float>(n) - 1.0f;
  std::ostringstream out;
  write_dense(out, t);
  CHECK(out.str().size() == kDtenHeaderBytes + 4 * 24);
  std::istringstream in(out.str());
  CHECK(read_dense(in) == t);
  std::istringstream truncated(out.str().substr(0, 30));
  CHECK_THROWS_AS(read_dense(truncated), FormatError);
}

TEST_CASE("file helpers") {
  const auto dir = std::filesystem::temp_directory_path() / "octgrid_io_test";
  std::filesystem::create_directories(dir);
  const GridOctree g = sample_grid();
  save_ocgr(dir / "g.ocgr", g);
  CHECK(read_magic(dir / "g.ocgr") == "OCGR");
  CHECK(load_ocgr(dir / "g.ocgr") == g);
  CHECK(std::filesystem::file_size(dir / "g.ocgr") == memory_report(g).header_bytes + memory_report(g).octree_bytes);
  save_dense(dir / "g.dten", oct_to_ten(g));
  CHECK(read_magic(dir / "g.dten") == "DTEN");
  CHECK(load_dense(dir / "g.dten") == oct_to_ten(g));
  CHECK_THROWS(load_ocgr(dir / "missing.ocgr"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("OFF parsing") {
  std::istringstream in(
      "OFF\n# a comment\n4 2 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n\n3 0 1 2\n3 0 2 3\n");
  const TriangleMesh m = read_off(in);
  CHECK(m.vertices.size() == 4);
  CHECK(m.triangles.size() == 2);
  CHECK(m.triangles[1] == std::array<int, 3>{0, 2, 3});
  CHECK(m.vertices[3] == Vec3{0, 0, 1});

  std::istringstream inline_counts("OFF 3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
  CHECK(read_off(inline_counts).triangles.size() == 1);

  std::istringstream quad("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n");
  CHECK_THROWS_AS(read_off(quad), FormatError);
  std::istringstream bad_index("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 5\n");
  CHECK_THROWS_AS(read_off(bad_index), FormatError);
  std::istringstream no_header("3 1 0\n");
  CHECK_THROWS_AS(read_off(no_header), FormatError);
  std::istringstream truncated("OFF\n3 1 0\n0 0 0\n");
  CHECK_THROWS_AS(read_off(truncated), FormatError);
}

TEST_CASE("XYZ parsing") {
  std::istringstream plain("0 0 0\n1.5 2 3\n\n");
  const PointSet p = read_xyz(plain, false);
  CHECK(p.points.size() == 2);
  CHECK(p.feature_dim == 1);
  CHECK(p.features == std::vector<float>{1.0f, 1.0f});

  std::istringstream labelled("0 0 0 0.5 0.25 3\n1 1 1 -1 2 0\n");
  const PointSet l = read_xyz(labelled, true);
  CHECK(l.feature_dim == 2);
  CHECK(l.features == std::vector<float>{0.5f, 0.25f, -1.0f, 2.0f});
  CHECK(l.labels == std::vector<int>{3, 0});

  std::istringstream ragged("0 0 0 1\n1 1 1\n");
  CHECK_THROWS_AS(read_xyz(ragged, false), FormatError);
  std::istringstream junk("0 0 zero\n");
  CHECK_THROWS_AS(read_xyz(junk, false), FormatError);
  std::istringstream bad_label("0 0 0 1.5\n");
  CHECK_THROWS_AS(read_xyz(bad_label, true), FormatError);
  std::istringstream empty("");
  CHECK(read_xyz(empty, false).points.empty());
}
