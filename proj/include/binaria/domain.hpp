#pragma once

#include <vector>

#include "binaria/grid.hpp"

namespace binaria {

/// Closed ball constraint domain. A cell belongs to it when its center does.
struct Ball {
  Vec3 center;
  double radius = 0.0;

  bool contains(const Vec3& x) const { return norm(x - center) <= radius; }
};

/// Per-cell index of the containing ball, -1 outside all of them. Balls must
/// not share cells.
std::vector<int> ball_labels(const Grid3& grid, const std::vector<Ball>& balls);

/// Lower bound on dist(spt rho, boundary of the union of balls) treating each
/// occupied cell as a closed cube: min over occupied cells of
/// radius - |x - center| - (sqrt3/2) h, clamped at 0. Occupied cells outside
/// every ball also give 0. Infinity for a zero field.
double support_margin(const DensityField& rho, const std::vector<Ball>& balls);

}  // namespace binaria
