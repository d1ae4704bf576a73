#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "binaria/grid.hpp"
#include "binaria/measure.hpp"

namespace binaria {

/// Raised when two clouds differ in atom count or total mass.
struct IncomparableMeasuresError : DomainError {
  using DomainError::DomainError;
};

struct BottleneckResult {
  double distance = 0.0;
  /// a.atoms[i] is paired with b.atoms[matching[i]].
  std::vector<std::size_t> matching;
  /// max_i |a_i - b_matching[i]|, recomputed from the pairing.
  double certificate = 0.0;
  std::size_t atoms = 0;
};

/// Exact W-infinity between equal-weight clouds: minimum over bijections of the
/// largest matched distance. Binary search over the sorted distinct pairwise
/// distances with a Hopcroft-Karp perfect-matching test at each threshold.
BottleneckResult winf_distance(const DiscreteMeasure& a, const DiscreteMeasure& b);

DiscreteMeasure push_forward(const DiscreteMeasure& a, const std::function<Vec3(const Vec3&)>& f);

struct PropertyCheck {
  std::string name;
  bool applicable = true;
  bool pass = true;
  double lhs = 0.0;
  double rhs = 0.0;
  std::string detail;
};

struct LemmaPropertyReport {
  std::optional<double> distance;  // empty when the clouds are incomparable
  std::vector<PropertyCheck> checks;
  bool all_pass() const;
};

/// (i)   W <= diam of the multiset symmetric difference of the clouds
/// (ii)  if W < delta, each single-linkage cluster of a at distance < 2 delta
///       holds equal a-mass and b-mass
/// (iv)  |xbar(a) - xbar(b)| <= W
LemmaPropertyReport check_lemma_properties(const DiscreteMeasure& a, const DiscreteMeasure& b, double delta);

struct RearrangementAudit {
  double epsilon = 0.0;
  std::size_t cube_cells = 0;  // cube edge in cells
  double cube_edge = 0.0;
  double cube_volume = 0.0;    // V of a full cube
  double R = 0.0;
  double tail_mass = 0.0;      // mass on {rho > R}
  double sup_sigma = 0.0;
  std::size_t capped_cells = 0;
  double max_cube_mass_error = 0.0;  // relative to the total mass
  double global_mass_error = 0.0;    // relative
  std::size_t atoms = 0;
  std::optional<double> atomized_distance;
  bool pass = false;
};

struct Rearrangement {
  DensityField sigma;
  double R = 0.0;
  RearrangementAudit audit;
};

/// Caps rho at 2R inside grid-aligned cubes of diagonal <= epsilon/2 and spreads
/// the excised mass uniformly over each cube's {rho <= R} cells. R is the first
/// integer >= 2 whose tail mass is below V/4 and for which every cube can absorb
/// its excess. With atoms > 0 the audit also measures W-infinity between
/// cube-ordered atomizations of rho and sigma.
Rearrangement rearrange_to_bounded(const DensityField& rho, double epsilon, std::size_t atoms = 256);

/// Unit-mass field on the unit cube (cells^3): a background uniform in
/// [0.5, 1.5] plus `spikes` Gaussian bumps of mass 0.004 and width 1 to 2
/// cells, so that rearrangement with cubes of 16 cells has cells to cap.
DensityField spiked_density(std::size_t cells, int spikes, std::uint64_t seed);

/// Equal-mass atoms from the cumulative mass of cells ordered cube by cube
/// (cubes of `cube_cells` cells per edge anchored at the grid origin). Two
/// fields with equal per-cube masses get atoms that share per-cube weights.
DiscreteMeasure cube_ordered_atomization(const DensityField& rho, std::size_t cube_cells, std::size_t n);

struct PerturbationCone {
  double R = 1.0;
  DensityField rho;
};

struct ConeViolation {
  std::size_t index = 0;
  Vec3 position;
  std::string rule;
  double sigma = 0.0;
  double rho = 0.0;
};

struct ConeMembership {
  bool member = true;
  std::optional<ConeViolation> first_violation;
};

/// sigma = 0 where rho > R or |x| > R; sigma >= 0 where rho < 1/R.
ConeMembership cone_membership(const PerturbationCone& cone, const ScalarField& sigma);

}  // namespace binaria
