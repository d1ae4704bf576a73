#include "binaria/solver.hpp"

#include <algorithm>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "binaria/diagnostics.hpp"

namespace binaria {

namespace {

constexpr double kMinInertia = 1e-12;

bool finite_field(const DensityField& f) {
  return std::all_of(f.values().begin(), f.values().end(), [](double v) { return std::isfinite(v); });
}

struct Components {
  std::vector<int> label;                       // per cell, -1 outside
  std::vector<std::vector<std::size_t>> cells;  // per component
};

Components components_of(const Grid3& g, const std::vector<Ball>& balls) {
  Components c;
  c.label = ball_labels(g, balls);
  c.cells.resize(balls.size());
  for (std::size_t i = 0; i < c.label.size(); ++i)
    if (c.label[i] >= 0) c.cells[std::size_t(c.label[i])].push_back(i);
  for (std::size_t b = 0; b < balls.size(); ++b)
    if (c.cells[b].empty()) throw ConfigurationError("constraint ball " + std::to_string(b) + " holds no grid cell");
  return c;
}

void pin_masses(std::vector<double>& v, const Components& comp, const std::vector<double>& masses, double hv) {
  for (std::size_t b = 0; b < comp.cells.size(); ++b) {
    double m = 0.0;
    for (std::size_t i : comp.cells[b]) m += v[i];
    m *= hv;
    if (!(m > 0.0)) throw NumericError("component " + std::to_string(b) + " lost all of its mass");
    const double s = masses[b] / m;
    for (std::size_t i : comp.cells[b]) v[i] *= s;
  }
}

struct StepContext {
  const EquationOfState& eos;
  const ScfProblem& problem;
  const SolverConfig& config;
  const PotentialSolver& solver;
  const Components& comp;
};

StepResult step_impl(const StepContext& ctx, const DensityField& rho) {
  const Grid3& g = rho.grid();
  const double hv = g.cell_volume();
  StepResult out;
  StepDiagnostics& d = out.diagnostics;

  const ScalarField V = ctx.solver.potential(rho.field());
  d.center_of_mass = center_of_mass(rho);
  d.moment_of_inertia = moment_of_inertia(rho, d.center_of_mass);
  const double J = ctx.problem.J;
  if (J != 0.0 && !(d.moment_of_inertia >= kMinInertia))
    throw NumericError("SCF divergence: moment of inertia " + std::to_string(d.moment_of_inertia) +
                       " fell below 1e-12");
  const EnergyLedger ledger = total_energy(ctx.eos, rho, J, V);
  d.energy = ledger.total;
  d.omega = ledger.omega;
  const ScalarField W = effective_potential(rho, J, V);

  std::vector<double> cand(rho.size(), 0.0);
  out.lambda.resize(ctx.comp.cells.size());
  const LambdaOptions lopt{ctx.config.lambda_expansion, ctx.config.lambda_max_expansions};
  for (std::size_t b = 0; b < ctx.comp.cells.size(); ++b) {
    const auto& cells = ctx.comp.cells[b];
    std::vector<double> w(cells.size());
    for (std::size_t t = 0; t < cells.size(); ++t) w[t] = W[cells[t]];
    const double lam = solve_lambda(ctx.eos, w, hv, ctx.problem.masses[b], ctx.config.tol_mass, lopt);
    out.lambda[b] = lam;
    for (std::size_t t = 0; t < cells.size(); ++t) {
      const std::size_t i = cells[t];
      const double y = std::max(w[t] + lam, 0.0);
      cand[i] = ctx.eos.inverse_enthalpy(y);
      if (rho[i] > 0.0)
        d.el_sup = std::max(d.el_sup, std::abs(ctx.eos.enthalpy(rho[i]) - y));
      d.candidate_change = std::max(d.candidate_change, std::abs(cand[i] - rho[i]));
    }
  }
  pin_masses(cand, ctx.comp, ctx.problem.masses, hv);
  out.candidate = DensityField(g, cand);

  const double th = ctx.config.theta;
  std::vector<double> next(rho.size());
  for (std::size_t i = 0; i < next.size(); ++i) next[i] = (1.0 - th) * rho[i] + th * cand[i];
  pin_masses(next, ctx.comp, ctx.problem.masses, hv);
  out.rho = DensityField(g, std::move(next));
  d.support_touches_boundary = !(support_margin(out.rho, ctx.problem.domains) > 0.0);
  return out;
}

void validate_problem(const ScfProblem& p) {
  if (p.domains.empty() || p.domains.size() != p.masses.size())
    throw ConfigurationError("SCF problem needs one pinned mass per constraint ball");
  for (double m : p.masses)
    if (!(m > 0.0) || !std::isfinite(m)) throw DomainError("component masses must be positive");
  if (!(p.J >= 0.0) || !std::isfinite(p.J)) throw DomainError("angular momentum J must be finite and >= 0");
}

}  // namespace

BinaryProblem build_problem(double m, double J) {
  if (!(m > 0.0 && m < 1.0)) throw DomainError("mass fraction m must lie in (0, 1)");
  if (!(J > 0.0) || !std::isfinite(J)) throw DomainError("binary mode needs J > 0 (J = 0 collapses the separation)");
  BinaryProblem p;
  p.m = m;
  p.J = J;
  p.mu_r = m * (1.0 - m);
  p.eta = J * J / (p.mu_r * p.mu_r);
  p.radius = p.eta / 4.0;
  p.distance = p.eta / 2.0;
  p.diameter = 1.5 * p.eta;
  // m x_m + (1-m) x_rest = 0 with x_rest - x_m = eta
  p.center_m = {-(1.0 - m) * p.eta, 0.0, 0.0};
  p.center_rest = {m * p.eta, 0.0, 0.0};
  return p;
}

ScfProblem scf_problem(const BinaryProblem& p) {
  return ScfProblem{{Ball{p.center_m, p.radius}, Ball{p.center_rest, p.radius}}, {p.m, 1.0 - p.m}, p.J};
}

std::vector<std::string> SolverConfig::violations() const {
  std::vector<std::string> bad;
  if (!(theta > 0.0 && theta <= 1.0)) bad.push_back("theta must lie in (0, 1]");
  if (max_iters < 1) bad.push_back("max_iters must be >= 1");
  if (!(tol_el > 0.0)) bad.push_back("tol_el must be > 0");
  if (!(tol_mass > 0.0)) bad.push_back("tol_mass must be > 0");
  if (!(lambda_expansion > 1.0)) bad.push_back("lambda_expansion must exceed 1");
  if (lambda_max_expansions < 1) bad.push_back("lambda_max_expansions must be >= 1");
  if (!(initial_radius_fraction > 0.0 && initial_radius_fraction < 1.0))
    bad.push_back("initial_radius_fraction must lie in (0, 1)");
  if (!(single_star_extent > 0.0)) bad.push_back("single_star_extent must be > 0");
  if (grid.nx < 4 || grid.ny < 4 || grid.nz < 4) bad.push_back("grid needs at least 4 cells per axis");
  if (grid.spacing < 0.0) bad.push_back("grid spacing must be >= 0");
  return bad;
}

void SolverConfig::validate() const {
  const auto bad = violations();
  if (!bad.empty()) {
    std::string msg = "invalid solver configuration:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw ConfigurationError(msg);
  }
}

Grid3 binary_grid(const BinaryProblem& p, const GridSpec& spec) {
  const double lo = p.center_m.x - p.radius;
  const double hi = p.center_rest.x + p.radius;
  double h = spec.spacing;
  if (h == 0.0)
    h = std::max({(hi - lo) / double(spec.nx), 2.0 * p.radius / double(spec.ny), 2.0 * p.radius / double(spec.nz)});
  return Grid3::centered({0.5 * (lo + hi), 0.0, 0.0}, h, spec.nx, spec.ny, spec.nz);
}

DensityField initial_guess(const ScfProblem& problem, const Grid3& grid, double radius_fraction) {
  validate_problem(problem);
  DensityField rho(grid);
  const Components comp = components_of(grid, problem.domains);
  std::vector<double> v(grid.size(), 0.0);
  for (std::size_t b = 0; b < problem.domains.size(); ++b) {
    const Ball& ball = problem.domains[b];
    const double a = radius_fraction * ball.radius;
    if (ball.radius - a < grid.h * std::sqrt(3.0))
      throw ConfigurationError("grid too coarse: initial bump reaches within a cell of its ball boundary");
    std::size_t covered = 0;
    for (std::size_t i : comp.cells[b]) {
      const double r = norm(grid.center(i) - ball.center);
      if (r < a) {
        v[i] = 1.0 - (r * r) / (a * a);
        ++covered;
      }
    }
    if (covered == 0) throw ConfigurationError("grid too coarse: initial bump covers no cell");
  }
  pin_masses(v, comp, problem.masses, grid.cell_volume());
  return DensityField(grid, std::move(v));
}

DensityField initial_guess(const BinaryProblem& problem, const Grid3& grid, double radius_fraction) {
  return initial_guess(scf_problem(problem), grid, radius_fraction);
}

double component_mass_at_lambda(const EquationOfState& eos, std::span<const double> w, double cell_volume,
                                double lambda) {
  double s = 0.0;
  for (double x : w)
    if (x + lambda > 0.0) s += eos.inverse_enthalpy(x + lambda);
  return s * cell_volume;
}

double solve_lambda(const EquationOfState& eos, std::span<const double> w, double cell_volume, double target,
                    double tol_mass, const LambdaOptions& options) {
  if (!(target > 0.0) || !std::isfinite(target)) throw PreconditionError("solve_lambda: target mass must be > 0");
  if (w.empty()) throw PreconditionError("solve_lambda: empty component");
  // Sorted descending, mass(lambda) only touches the prefix with w > -lambda.
  std::vector<double> sorted(w.begin(), w.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  auto mass_at = [&](double lam) {
    double s = 0.0;
    for (double x : sorted) {
      if (!(x + lam > 0.0)) break;
      s += eos.inverse_enthalpy(x + lam);
    }
    return s * cell_volume;
  };

  const double lo = -sorted.front();
  double hi = lo;
  double step = std::max(std::abs(sorted.front()), 1.0) * 1e-3;
  double m_hi = 0.0;
  int expansions = 0;
  while (true) {
    hi = lo + step;
    try {
      m_hi = mass_at(hi);
    } catch (const RangeError& e) {
      throw NoSolutionError("solve_lambda: target mass " + std::to_string(target) +
                            " needs densities above the EOS range (" + e.what() + "); reached mass " +
                            std::to_string(m_hi));
    }
    if (m_hi >= target) break;
    if (++expansions > options.max_expansions)
      throw NoSolutionError("solve_lambda: bracket expansion exhausted; achievable mass range [0, " +
                            std::to_string(m_hi) + "] excludes target " + std::to_string(target));
    step *= options.expansion;
  }
  double a = lo;
  double b = hi;
  if (m_hi != target) {
    std::uintmax_t iters = 400;
    const auto r = boost::math::tools::toms748_solve([&](double lam) { return mass_at(lam) - target; }, lo, hi,
                                                     -target, m_hi - target,
                                                     boost::math::tools::eps_tolerance<double>(52), iters);
    a = r.first;
    b = r.second;
  }
  // Both ends bracket the root to round-off; keep the one with the smaller defect.
  const double lam = std::abs(mass_at(a) - target) <= std::abs(mass_at(b) - target) ? a : b;
  const double err = std::abs(mass_at(lam) - target);
  if (err > tol_mass * target)
    throw NoSolutionError("solve_lambda: mass defect " + std::to_string(err / target) +
                          " exceeds tol_mass after bracketing");
  return lam;
}

StepResult scf_step(const EquationOfState& eos, const ScfProblem& problem, const DensityField& rho,
                    const SolverConfig& config, const PotentialSolver& solver) {
  config.validate();
  validate_problem(problem);
  const Components comp = components_of(rho.grid(), problem.domains);
  return step_impl({eos, problem, config, solver, comp}, rho);
}

StepResult scf_step(const EquationOfState& eos, const ScfProblem& problem, const DensityField& rho,
                    const SolverConfig& config) {
  return scf_step(eos, problem, rho, config, PotentialSolver(rho.grid(), config.potential_method));
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::suspect: return "suspect";
  }
  return "unknown";
}

EquilibriumSolution solve(const EquationOfState& eos, const ScfProblem& problem, const DensityField& initial,
                          const SolverConfig& config) {
  config.validate();
  validate_problem(problem);
  const Grid3& g = initial.grid();
  const Components comp = components_of(g, problem.domains);
  const PotentialSolver solver(g, config.potential_method);
  double total = 0.0;
  for (double m : problem.masses) total += m;

  SolverConfig cfg = config;
  DensityField rho = initial;
  EquilibriumSolution sol;
  sol.tol_el = config.tol_el;
  double prev_energy = std::numeric_limits<double>::quiet_NaN();
  int rises = 0;
  bool converged = false;
  StepResult step;
  for (int k = 0; k < cfg.max_iters; ++k) {
    step = step_impl({eos, problem, cfg, solver, comp}, rho);
    const StepDiagnostics& d = step.diagnostics;
    if (!std::isfinite(d.energy) || !finite_field(step.rho)) {
      std::ostringstream os;
      os << "SCF divergence at iteration " << k << ": non-finite energy or density (E=" << d.energy << ")";
      throw NumericError(os.str());
    }
    const double drift = std::abs(mass(step.rho) - total) / total;
    if (drift > 2.0 * cfg.tol_mass + 1e-12) {
      std::ostringstream os;
      os << "SCF divergence at iteration " << k << ": total mass drift " << drift;
      throw NumericError(os.str());
    }
    if (k == 0) sol.initial_energy = d.energy;
    sol.trace.push_back({k, d.energy, d.el_sup, cfg.theta, d.candidate_change, step.lambda});
    sol.iterations = k;
    if (d.el_sup <= cfg.tol_el) {
      converged = true;
      break;
    }
    if (k > 0 && d.energy > prev_energy + 1e-14 * std::abs(prev_energy)) {
      if (++rises >= 2) {
        cfg.theta = std::max(cfg.theta / 2.0, 1e-6);
        rises = 0;
        sol.notes.push_back("theta halved to " + std::to_string(cfg.theta) + " at iteration " + std::to_string(k));
      }
    } else {
      rises = 0;
    }
    prev_energy = d.energy;
    rho = step.rho;
  }
  if (!converged) sol.iterations = cfg.max_iters;

  // rho is the iterate whose residual was last measured.
  sol.lambda = step.lambda;
  const Vec3 xbar = center_of_mass(rho);
  rho.translate(xbar * -1.0);
  sol.problem = problem;
  for (auto& b : sol.problem.domains) b.center -= xbar;
  sol.rho = rho;

  sol.ledger = total_energy(eos, sol.rho, problem.J, PotentialSolver(sol.rho.grid(), config.potential_method)
                                                         .potential(sol.rho.field()));
  sol.omega = sol.ledger.omega;
  sol.component_mass.assign(problem.domains.size(), 0.0);
  const auto labels = ball_labels(sol.rho.grid(), sol.problem.domains);
  for (std::size_t i = 0; i < sol.rho.size(); ++i)
    if (labels[i] >= 0) sol.component_mass[std::size_t(labels[i])] += sol.rho[i] * g.cell_volume();
  const ResidualReport el =
      el_residual(eos, sol.rho, problem.J, sol.problem.domains, sol.lambda, config.tol_el);
  sol.el_residual_sup = el.el_sup;
  sol.ep_residual_sup = ep_residual(eos, sol.rho, problem.J).ep_sup;
  sol.support_margin = support_margin(sol.rho, sol.problem.domains);
  support_components(sol.rho, &sol.support_components);
  sol.energy_decreased = sol.ledger.total < sol.initial_energy;

  if (!converged) {
    sol.status = SolveStatus::max_iters;
  } else {
    sol.status = SolveStatus::converged;
    for (std::size_t b = 0; b < sol.lambda.size(); ++b)
      if (!(sol.lambda[b] < 0.0) || !(std::abs(sol.lambda[b]) > 10.0 * config.tol_el)) {
        sol.status = SolveStatus::suspect;
        sol.notes.push_back("lambda_" + std::to_string(b) + " = " + std::to_string(sol.lambda[b]) +
                            " is not negative with margin 10 tol_el");
      }
    if (!(sol.support_margin > 0.0)) {
      sol.status = SolveStatus::suspect;
      sol.notes.push_back("support touches the constraint boundary");
    }
  }
  return sol;
}

EquilibriumSolution solve(const EquationOfState& eos, const BinaryProblem& problem, const SolverConfig& config) {
  config.validate();
  const Grid3 g = binary_grid(problem, config.grid);
  const ScfProblem p = scf_problem(problem);
  return solve(eos, p, initial_guess(p, g, config.initial_radius_fraction), config);
}

EquilibriumSolution solve_single_star(const EquationOfState& eos, double total_mass, const SolverConfig& config) {
  if (!(total_mass > 0.0) || !std::isfinite(total_mass)) throw DomainError("single star mass must be positive");
  config.validate();
  const GridSpec& s = config.grid;
  const double L = config.single_star_extent;
  double h = s.spacing;
  if (h == 0.0) h = 2.0 * L / double(std::min({s.nx, s.ny, s.nz}));
  const Grid3 g = Grid3::centered({}, h, s.nx, s.ny, s.nz);
  const ScfProblem p{{Ball{{}, 0.95 * L}}, {total_mass}, 0.0};
  return solve(eos, p, initial_guess(p, g, config.initial_radius_fraction), config);
}

}  // namespace binaria
