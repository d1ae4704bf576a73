#include "binaria/domain.hpp"

#include <algorithm>
#include <limits>

namespace binaria {

std::vector<int> ball_labels(const Grid3& grid, const std::vector<Ball>& balls) {
  std::vector<int> label(grid.size(), -1);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec3 x = grid.center(i);
    for (std::size_t b = 0; b < balls.size(); ++b) {
      if (!balls[b].contains(x)) continue;
      if (label[i] >= 0) throw DomainError("constraint balls overlap on the grid");
      label[i] = int(b);
    }
  }
  return label;
}

double support_margin(const DensityField& rho, const std::vector<Ball>& balls) {
  const Grid3& g = rho.grid();
  const double half_diag = 0.5 * std::sqrt(3.0) * g.h;
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] <= 0.0) continue;
    const Vec3 x = g.center(i);
    double best = 0.0;
    for (const auto& b : balls)
      if (b.contains(x)) best = std::max(best, b.radius - norm(x - b.center) - half_diag);
    margin = std::min(margin, best);
  }
  return margin;
}

}  // namespace binaria
