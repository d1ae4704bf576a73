#pragma once

#include <memory>

#include "binaria/grid.hpp"

namespace binaria {

/// Potential at the center of a uniform unit-density cube of unit edge,
/// int_{[-1/2,1/2]^3} |x|^-1 dx = 3 ln((sqrt3+1)/(sqrt3-1)) - pi/2.
inline constexpr double kCubeSelfPotential = 2.380077363979553;

/// Newtonian potential V(x) = int rho(y)/|x-y| dy (G = 1, V >= 0 for rho >= 0)
/// and its gradient on a uniform grid, by midpoint quadrature over cells:
///   V_i = h^3 sum_j rho_j K(i-j),  K(d) = 1/(h|d|),  K(0) = kCubeSelfPotential / h.
/// The direct path sums pairs; the FFT path evaluates the same discrete
/// convolution on a zero-padded (2n)^3 lattice. Both agree to round-off.
///
/// A solver owns scratch buffers, so one instance must not be used from two
/// threads at once.
class PotentialSolver {
 public:
  enum class Method { automatic, direct, fft };

  /// Grids up to this many cells use the direct sum under Method::automatic.
  static constexpr std::size_t direct_cell_limit = 8192;

  explicit PotentialSolver(const Grid3& grid, Method method = Method::automatic);
  ~PotentialSolver();
  PotentialSolver(PotentialSolver&&) noexcept;
  PotentialSolver& operator=(PotentialSolver&&) noexcept;

  const Grid3& grid() const { return grid_; }
  Method method() const { return method_; }

  ScalarField potential(const ScalarField& rho) const;
  VectorField gradient(const ScalarField& rho) const;

 private:
  struct FftState;
  void require_grid(const Grid3& g) const;

  Grid3 grid_;
  Method method_;
  std::unique_ptr<FftState> fft_;
};

ScalarField potential(const ScalarField& rho, PotentialSolver::Method method = PotentialSolver::Method::automatic);
VectorField potential_gradient(const ScalarField& rho,
                               PotentialSolver::Method method = PotentialSolver::Method::automatic);

}  // namespace binaria
