#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "binaria/common.hpp"

namespace binaria {

/// Uniform cubic-cell grid. `origin` is the lower corner of cell (0,0,0); cell
/// (i,j,k) has center origin + (i+1/2, j+1/2, k+1/2) h. Index order is x fastest.
struct Grid3 {
  Vec3 origin;
  double h = 1.0;
  std::size_t nx = 1;
  std::size_t ny = 1;
  std::size_t nz = 1;

  Grid3() = default;
  Grid3(Vec3 origin, double spacing, std::size_t nx, std::size_t ny, std::size_t nz);

  /// Grid of n cells per axis (nx, ny, nz) centred on `center` with spacing h.
  static Grid3 centered(Vec3 center, double spacing, std::size_t nx, std::size_t ny, std::size_t nz);

  std::size_t size() const { return nx * ny * nz; }
  double cell_volume() const { return h * h * h; }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return i + nx * (j + ny * k); }
  std::array<std::size_t, 3> coords(std::size_t idx) const {
    return {idx % nx, (idx / nx) % ny, idx / (nx * ny)};
  }
  Vec3 center(std::size_t i, std::size_t j, std::size_t k) const {
    return {origin.x + (double(i) + 0.5) * h, origin.y + (double(j) + 0.5) * h, origin.z + (double(k) + 0.5) * h};
  }
  Vec3 center(std::size_t idx) const {
    const auto c = coords(idx);
    return center(c[0], c[1], c[2]);
  }
  Vec3 upper() const { return {origin.x + double(nx) * h, origin.y + double(ny) * h, origin.z + double(nz) * h}; }

  friend bool operator==(const Grid3&, const Grid3&) = default;
};

/// Possibly signed scalar sampled at cell centers.
struct ScalarField {
  Grid3 grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const Grid3& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
  ScalarField(const Grid3& g, std::vector<double> v);

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }
};

/// Non-negative density on a grid. Support is the set of cells with value > 0,
/// so compact support is structural.
class DensityField {
 public:
  DensityField() = default;
  explicit DensityField(const Grid3& g) : field_(g) {}
  /// Throws DomainError on negative or non-finite values.
  DensityField(const Grid3& g, std::vector<double> values);
  explicit DensityField(ScalarField f);

  const Grid3& grid() const { return field_.grid; }
  const std::vector<double>& values() const { return field_.values; }
  const ScalarField& field() const { return field_; }
  double operator[](std::size_t i) const { return field_.values[i]; }
  std::size_t size() const { return field_.values.size(); }

  /// Mutation through a callback that must keep values non-negative; re-validated.
  template <class F>
  void modify(F&& f) {
    f(field_.values);
    validate();
  }
  void set(std::size_t i, double v);
  void scale(double s);
  /// Moves the grid origin; values stay attached to their cells.
  void translate(const Vec3& shift) { field_.grid.origin += shift; }
  double max() const;

 private:
  void validate() const;
  ScalarField field_;
};

struct VectorField {
  Grid3 grid;
  std::vector<Vec3> values;

  VectorField() = default;
  explicit VectorField(const Grid3& g) : grid(g), values(g.size()) {}
};

}  // namespace binaria
