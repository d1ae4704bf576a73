#pragma once

#include <optional>
#include <string>
#include <vector>

#include "binaria/domain.hpp"
#include "binaria/eos.hpp"
#include "binaria/fields.hpp"

namespace binaria {

struct EquilibriumSolution;

struct ResidualReport {
  /// sup over {rho > 0} of |A'(rho) - [W + lambda_i]_+|
  double el_sup = 0.0;
  double el_l2 = 0.0;
  /// sup of [W + lambda_i]_+ over empty cells within delta of the support
  double el_sup_neighbourhood = 0.0;
  std::optional<double> ep_sup;
  std::vector<double> lambda;
  bool lambda_refit = false;
  double delta = 0.0;
  double support_margin = 0.0;
  double tol_el = 0.0;
  bool pass = false;
};

/// W(x) = J^2/(2I^2) r^2(x - xbar) + V_rho(x); the rotational term is skipped for J = 0.
ScalarField effective_potential(const DensityField& rho, double J, const ScalarField& V);

/// Euler-Lagrange defect per component ball. Without `lambda` each multiplier
/// is the median of A'(rho) - W over {rho > 0.01 max rho} in its ball.
/// delta <= 0 selects 2h. Throws DegenerateInputError for an empty component.
ResidualReport el_residual(const EquationOfState& eos, const DensityField& rho, double J,
                           const std::vector<Ball>& components,
                           const std::optional<std::vector<double>>& lambda = std::nullopt, double tol_el = 1e-4,
                           double delta = 0.0);

struct EpResidual {
  /// sup over grid-interior cells of |-omega^2 rho P12(x - xbar) + grad P(rho) - rho grad V|
  double ep_sup = 0.0;
  /// sup over interior cells whose whole difference stencil is empty (0 by construction)
  double zero_cell_sup = 0.0;
  double omega = 0.0;
  std::size_t interior_cells = 0;
  VectorField defect;
};

/// Reduced Euler-Poisson defect with grad P(rho) by central differences of the
/// composed pressure field and grad V from the kernel.
EpResidual ep_residual(const EquationOfState& eos, const DensityField& rho, double J);

/// E_J'(rho) = A'(rho) - V_rho - J^2/(2I^2) r^2(x - xbar).
ScalarField variational_derivative_field(const EquationOfState& eos, const DensityField& rho, double J);

struct TermCheck {
  std::string name;
  double analytic = 0.0;
  std::vector<double> fd_slopes;
  std::vector<double> gaps;
  bool gaps_decreasing = false;
};

struct DerivativeCheck {
  std::vector<double> t;
  double sigma_integral = 0.0;  // h^3 sum sigma
  double analytic = 0.0;        // h^3 sum E_J'(rho) sigma
  std::vector<double> fd_slopes;
  std::vector<double> gaps;
  bool gaps_decreasing = false;
  TermCheck internal;     // U against int A' sigma
  TermCheck interaction;  // -G/2 against -int sigma V
  TermCheck rotational;   // T_J against -J^2/(2I^2) int r^2 sigma
  std::vector<std::string> notes;
};

/// Finite-difference slopes of E_J along sigma for each t of a positive
/// decreasing ladder. sigma must lie in the cone P_R(rho) (PreconditionError
/// otherwise). Ladder entries with rho + t sigma < 0 somewhere are dropped
/// with a note.
DerivativeCheck directional_derivative_check(const EquationOfState& eos, const DensityField& rho, double J,
                                             const ScalarField& sigma, const std::vector<double>& t_ladder,
                                             double cone_R);

struct MultiplierAudit {
  std::vector<double> lambda;
  double lambda_margin = 0.0;  // required |lambda_i|
  bool lambda_negative = false;
  /// standard deviation of E_J'(rho) over each component's support
  std::vector<double> derivative_spread;
  bool derivative_constant = false;
  double support_margin = 0.0;
  bool support_interior = false;
  /// Heuristic continuity statistic: largest |rho_i - rho_j| over adjacent cells, over max rho.
  double max_adjacent_jump = 0.0;
  bool pass = false;
  std::vector<std::string> details;
};

/// lambda_i < 0 with |lambda_i| > 10 tol_el, E_J'(rho) constant to tol_el on
/// each support, and positive support margin.
MultiplierAudit multiplier_audit(const EquationOfState& eos, const DensityField& rho, double J,
                                 const std::vector<Ball>& components, const std::vector<double>& lambda,
                                 double tol_el);
MultiplierAudit multiplier_audit(const EquationOfState& eos, const EquilibriumSolution& solution);

/// Non-rotating polytrope from the Lane-Emden equation of index n = 1/(gamma-1),
/// scaled to pressure coefficient K and the requested mass.
struct LaneEmdenProfile {
  double n = 0.0;
  double xi1 = 0.0;      // first zero of theta
  double dtheta1 = 0.0;  // theta'(xi1)
  double alpha = 0.0;    // length scale, r = alpha xi
  double central_density = 0.0;
  double radius = 0.0;
  double mass = 0.0;
  std::vector<double> xi;
  std::vector<double> theta;
  std::vector<double> dtheta;

  double theta_at(double x) const;
  /// rho_c theta(r/alpha)^n, zero beyond the radius.
  double density(double r) const;
  /// 4 pi int_0^R rho r^2 dr by Simpson's rule on the stored samples.
  double integrated_mass() const;
};

LaneEmdenProfile lane_emden_reference(double gamma, double K, double total_mass);

/// sup |rho(x) - rho(-x)| / max rho under the reflection i -> nx-1-i.
double mirror_asymmetry(const DensityField& rho);

struct LaneEmdenRow {
  double r = 0.0;  // bin center
  std::size_t cells = 0;
  double density = 0.0;    // mean grid density in the bin
  double fitted = 0.0;     // mean of rho_c,fit theta^n(r / alpha_fit)
  double reference = 0.0;  // mean of the unfitted reference density
};

/// Grid density against the Lane-Emden profile about the center of mass.
/// The fitted profile takes alpha from the second radial moment and rho_c from
/// the grid mass. Errors are cell-wise sups relative to the respective central density.
struct LaneEmdenComparison {
  LaneEmdenProfile reference;
  double alpha_fit = 0.0;
  double radius_fit = 0.0;
  double central_density_fit = 0.0;
  double sup_error_fitted = 0.0;
  double sup_error_reference = 0.0;
  std::vector<LaneEmdenRow> table;
};

/// Polytropes only (DomainError otherwise).
LaneEmdenComparison lane_emden_comparison(const EquationOfState& eos, const DensityField& rho,
                                          std::size_t table_rows = 32);

}  // namespace binaria
