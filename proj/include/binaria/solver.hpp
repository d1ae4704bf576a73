#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "binaria/domain.hpp"
#include "binaria/eos.hpp"
#include "binaria/fields.hpp"

namespace binaria {

/// Two-ball admissible class for mass fraction m and angular momentum J.
struct BinaryProblem {
  double m = 0.5;
  double J = 0.0;
  double mu_r = 0.0;      // m(1-m)
  double eta = 0.0;       // J^2 / mu_r^2, the center separation
  double radius = 0.0;    // eta / 4
  double distance = 0.0;  // dist(Omega_m, Omega_{1-m}) = eta / 2
  double diameter = 0.0;  // diam of the union = 3 eta / 2
  Vec3 center_m;          // ball holding mass m
  Vec3 center_rest;       // ball holding mass 1 - m
};

/// Centers on the x-axis with the point-mass center of mass at the origin;
/// the m ball sits at negative x. Throws DomainError for m outside (0,1) or J = 0.
BinaryProblem build_problem(double m, double J);

/// Generic SCF problem: fixed balls with pinned masses.
struct ScfProblem {
  std::vector<Ball> domains;
  std::vector<double> masses;
  double J = 0.0;
};

ScfProblem scf_problem(const BinaryProblem& p);

struct GridSpec {
  std::size_t nx = 64;
  std::size_t ny = 64;
  std::size_t nz = 64;
  /// Cell size; 0 picks the smallest spacing that covers the domains.
  double spacing = 0.0;
};

struct SolverConfig {
  GridSpec grid;
  double theta = 0.5;  // relaxation
  int max_iters = 500;
  double tol_el = 1e-4;
  double tol_mass = 1e-10;
  double lambda_expansion = 2.0;
  int lambda_max_expansions = 200;
  /// Initial bump radius as a fraction of the domain radius.
  double initial_radius_fraction = 0.5;
  /// Single-star grid half-width; the constraint ball has 0.95 of it.
  double single_star_extent = 2.0;
  PotentialSolver::Method potential_method = PotentialSolver::Method::automatic;

  std::vector<std::string> violations() const;
  /// Throws ConfigurationError listing every violated bound.
  void validate() const;
};

/// Grid for a binary: covers both balls, centered on their union.
Grid3 binary_grid(const BinaryProblem& p, const GridSpec& spec);

/// Truncated (1 - r^2/a^2)_+ bumps of the pinned masses centered in each ball,
/// with a = initial_radius_fraction * radius. Throws ConfigurationError when a
/// bump would not cover at least one cell or would reach within a cell of the
/// ball boundary.
DensityField initial_guess(const ScfProblem& problem, const Grid3& grid, double radius_fraction = 0.5);
DensityField initial_guess(const BinaryProblem& problem, const Grid3& grid, double radius_fraction = 0.5);

/// h^3 sum phi([w + lambda]_+) over the given W values.
double component_mass_at_lambda(const EquationOfState& eos, std::span<const double> w, double cell_volume,
                                double lambda);

/// Raised when no multiplier reproduces the target mass.
struct NoSolutionError : NumericError {
  using NumericError::NumericError;
};

struct LambdaOptions {
  double expansion = 2.0;
  int max_expansions = 200;
};

/// Multiplier with |mass(lambda) - target| <= tol_mass * target. The bracket
/// starts at -max w (zero mass) and expands geometrically; the root is then
/// refined to adjacent doubles.
double solve_lambda(const EquationOfState& eos, std::span<const double> w, double cell_volume, double target,
                    double tol_mass, const LambdaOptions& options = {});

struct StepDiagnostics {
  double energy = 0.0;           // E_J(rho_k)
  double el_sup = 0.0;           // sup over {rho_k > 0} of |A'(rho_k) - [W_k + lambda]_+|
  double candidate_change = 0.0; // sup |rho* - rho_k|
  double moment_of_inertia = 0.0;
  double omega = 0.0;
  Vec3 center_of_mass;
  bool support_touches_boundary = false;
};

struct StepResult {
  DensityField rho;  // relaxed iterate rho_{k+1}
  DensityField candidate;
  std::vector<double> lambda;
  StepDiagnostics diagnostics;
};

StepResult scf_step(const EquationOfState& eos, const ScfProblem& problem, const DensityField& rho,
                    const SolverConfig& config);
StepResult scf_step(const EquationOfState& eos, const ScfProblem& problem, const DensityField& rho,
                    const SolverConfig& config, const PotentialSolver& solver);

enum class SolveStatus { converged, max_iters, suspect };
const char* to_string(SolveStatus s);

struct IterationRecord {
  int iteration = 0;
  double energy = 0.0;
  double el_sup = 0.0;
  double theta = 0.0;
  double change = 0.0;
  std::vector<double> lambda;
};

struct EquilibriumSolution {
  DensityField rho;  // translated so that its center of mass is the origin
  ScfProblem problem;  // domains translated with rho
  std::vector<double> lambda;
  std::vector<double> component_mass;
  double omega = 0.0;
  EnergyLedger ledger;
  double el_residual_sup = 0.0;
  double ep_residual_sup = 0.0;
  int iterations = 0;
  double support_margin = 0.0;
  int support_components = 0;
  bool energy_decreased = false;
  double initial_energy = 0.0;
  SolveStatus status = SolveStatus::max_iters;
  std::vector<std::string> notes;
  std::vector<IterationRecord> trace;
  double tol_el = 0.0;
};

/// SCF iteration from `initial` until el_sup <= tol_el or max_iters.
/// Throws NumericError on divergence (NaN, mass drift, I below 1e-12).
EquilibriumSolution solve(const EquationOfState& eos, const ScfProblem& problem, const DensityField& initial,
                          const SolverConfig& config);
EquilibriumSolution solve(const EquationOfState& eos, const BinaryProblem& problem, const SolverConfig& config);

/// J = 0, one ball of radius 0.95 * single_star_extent at the origin.
EquilibriumSolution solve_single_star(const EquationOfState& eos, double total_mass, const SolverConfig& config);

}  // namespace binaria
