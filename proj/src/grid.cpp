#include "binaria/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace binaria {

Grid3::Grid3(Vec3 o, double spacing, std::size_t nx_, std::size_t ny_, std::size_t nz_)
    : origin(o), h(spacing), nx(nx_), ny(ny_), nz(nz_) {
  if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("grid spacing must be positive and finite");
  if (nx == 0 || ny == 0 || nz == 0) throw DomainError("grid dimensions must be positive");
}

Grid3 Grid3::centered(Vec3 c, double spacing, std::size_t nx, std::size_t ny, std::size_t nz) {
  const Vec3 o{c.x - 0.5 * spacing * double(nx), c.y - 0.5 * spacing * double(ny), c.z - 0.5 * spacing * double(nz)};
  return Grid3(o, spacing, nx, ny, nz);
}

ScalarField::ScalarField(const Grid3& g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size())
    throw DomainError("field has " + std::to_string(values.size()) + " values for a grid of " +
                      std::to_string(grid.size()) + " cells");
}

DensityField::DensityField(const Grid3& g, std::vector<double> values) : field_(g, std::move(values)) { validate(); }

DensityField::DensityField(ScalarField f) : field_(std::move(f)) { validate(); }

void DensityField::validate() const {
  for (std::size_t i = 0; i < field_.values.size(); ++i) {
    const double v = field_.values[i];
    if (!(v >= 0.0) || !std::isfinite(v))
      throw DomainError("density must be finite and non-negative (cell " + std::to_string(i) + ")");
  }
}

void DensityField::set(std::size_t i, double v) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("density must be finite and non-negative");
  field_.values.at(i) = v;
}

void DensityField::scale(double s) {
  if (!(s >= 0.0) || !std::isfinite(s)) throw DomainError("density scale factor must be non-negative");
  for (auto& v : field_.values) v *= s;
}

double DensityField::max() const {
  return field_.values.empty() ? 0.0 : *std::max_element(field_.values.begin(), field_.values.end());
}

}  // namespace binaria
