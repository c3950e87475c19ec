// Copyright Contributors to the octgrid Project
// SPDX-License-Identifier: Apache-2.0
//
#include "octgrid/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace octgrid {
namespace {

/// True if `axis` separates the triangle (already relative to the box centre)
/// from the box. Degenerate (zero) axes never separate.
bool separated_on(const Vec3& axis, const std::array<Vec3, 3>& v, const Vec3& h) {
  const double p0 = dot(axis, v[0]);
  const double p1 = dot(axis, v[1]);
  const double p2 = dot(axis, v[2]);
  const double r = h[0] * std::abs(axis[0]) + h[1] * std::abs(axis[1]) + h[2] * std::abs(axis[2]);
  return std::min({p0, p1, p2}) > r || std::max({p0, p1, p2}) < -r;
}

}  // namespace

bool tri_box_overlap(const std::array<Vec3, 3>& tri, const Vec3& center, const Vec3& half_extent) {
  const std::array<Vec3, 3> v{tri[0] - center, tri[1] - center, tri[2] - center};
  const std::array<Vec3, 3> edges{v[1] - v[0], v[2] - v[1], v[0] - v[2]};

  // Box face normals.
  for (int a = 0; a < 3; ++a) {
    const double lo = std::min({v[0][a], v[1][a], v[2][a]});
    const double hi = std::max({v[0][a], v[1][a], v[2][a]});
    if (lo > half_extent[a] || hi < -half_extent[a]) return false;
  }
  // Triangle normal.
  if (separated_on(cross(edges[0], edges[1]), v, half_extent)) return false;
  // Edge x box-axis cross products.
  for (const Vec3& e : edges) {
    for (int a = 0; a < 3; ++a) {
      Vec3 unit{0.0, 0.0, 0.0};
      unit[a] = 1.0;
      if (separated_on(cross(e, unit), v, half_extent)) return false;
    }
  }
  return true;
}

}  // namespace octgrid
