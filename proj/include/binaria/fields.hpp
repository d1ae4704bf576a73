#pragma once

#include "binaria/eos.hpp"
#include "binaria/grid.hpp"
#include "binaria/measure.hpp"
#include "binaria/potential.hpp"

namespace binaria {

// Integral functionals on grid densities. All integrals use the midpoint rule
// over cells, so quadrature error is O(h^2) for smooth fields and zero for the
// discrete identities (moment-of-inertia expansion, G symmetry).

double mass(const DensityField& rho);
/// Throws DegenerateInputError for zero mass.
Vec3 center_of_mass(const DensityField& rho);
/// h^3 sum rho r^2(x - center).
double moment_of_inertia(const DensityField& rho, const Vec3& center);
/// I(rho) about its own center of mass; 0 for a zero field.
double moment_of_inertia(const DensityField& rho);

struct MoiExpansion {
  double lhs = 0.0;  // I(rho + sigma)
  double rhs = 0.0;  // I(rho) + I(sigma) + m1 m2/(m1+m2) r^2(xbar(rho) - xbar(sigma))
};
/// Both sides of the parallel-axis expansion; (0, 0) when both masses vanish.
MoiExpansion moi_expansion(const DensityField& rho, const DensityField& sigma);

double internal_energy(const EquationOfState& eos, const DensityField& rho);
/// G(sigma, rho) = h^3 sum V_sigma rho.
double interaction_energy(const ScalarField& sigma, const ScalarField& rho, const PotentialSolver& solver);
double interaction_energy(const ScalarField& sigma, const ScalarField& rho);

struct RotationalEnergy {
  double T_J = 0.0;
  double omega = 0.0;
};
/// T_J = J^2/(2I), omega = J/I with I about the center of mass. I = 0 throws.
RotationalEnergy rotational_energy(const DensityField& rho, double J);

/// Uniform rotation v(x) = omega e_z x (x - center).
struct RigidRotation {
  double omega = 0.0;
  Vec3 center;

  Vec3 velocity(const Vec3& x) const { return {-omega * (x.y - center.y), omega * (x.x - center.x), 0.0}; }
  VectorField sample(const Grid3& grid) const;
};

double kinetic_energy(const DensityField& rho, const VectorField& v);
/// e_z . h^3 sum (x - xbar) x v rho. Zero mass throws.
double angular_momentum_z(const DensityField& rho, const VectorField& v);

struct EnergyLedger {
  double internal = 0.0;     // U
  double interaction = 0.0;  // G(rho, rho)
  double rotational = 0.0;   // T_J
  double total = 0.0;        // E_J = U - G/2 + T_J
  double mass = 0.0;
  Vec3 center_of_mass;
  double moment_of_inertia = 0.0;
  double omega = 0.0;
  double J = 0.0;
};

/// Ledger with V_rho supplied by the caller (it is usually already at hand).
EnergyLedger total_energy(const EquationOfState& eos, const DensityField& rho, double J, const ScalarField& potential);
EnergyLedger total_energy(const EquationOfState& eos, const DensityField& rho, double J);

/// rho(R_{-theta} x) about the z-axis through the origin, trilinear resampling.
DensityField rotate_field(const DensityField& rho, double theta);

struct Discretization {
  DiscreteMeasure measure;
  /// max |atom mass - mass/n| / (mass/n)
  double quantization_slack = 0.0;
};

struct QuantizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Equal-mass atomization by recursive coordinate bisection of the cell masses.
/// A cell straddling a split is divided fractionally, so each atom carries
/// mass/n exactly up to round-off and the first moment is preserved.
/// Throws QuantizationError when n exceeds the number of occupied cells or the
/// measured slack exceeds `slack_tolerance`.
Discretization discretize(const DensityField& rho, std::size_t n_atoms, double slack_tolerance = 1e-3);

/// 6-connected components of {rho > 0}; label 0 is empty, components numbered from 1.
std::vector<int> support_components(const DensityField& rho, int* count = nullptr);

}  // namespace binaria
