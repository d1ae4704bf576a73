#include <cmath>
#include <random>

#include "binaria/diagnostics.hpp"
#include "binaria/solver.hpp"
#include "doctest.h"

using namespace binaria;

namespace {

const EquationOfState& n1() {
  static const auto eos = EquationOfState::polytrope(1.0, 2.0);
  return eos;
}

SolverConfig small_config(std::size_t n = 24) {
  SolverConfig c;
  c.grid = {n, n, n, 0.0};
  return c;
}

double mirror_gap(const DensityField& f) {
  const Grid3& g = f.grid();
  double worst = 0.0;
  for (std::size_t k = 0; k < g.nz; ++k)
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i)
        worst = std::max(worst, std::abs(f[g.index(i, j, k)] - f[g.index(g.nx - 1 - i, j, k)]));
  return worst;
}

}  // namespace

TEST_CASE("binary problem geometry") {
  const auto p = build_problem(0.5, 1.0);
  CHECK(p.mu_r == 0.25);
  CHECK(p.eta == 16.0);
  CHECK(p.radius == 4.0);
  CHECK(p.distance == 8.0);
  CHECK(p.diameter == 24.0);
  CHECK(norm(p.center_rest - p.center_m) == doctest::Approx(p.eta));
  // distance between the balls and diameter of their union from the centers
  CHECK(norm(p.center_rest - p.center_m) - 2 * p.radius == doctest::Approx(p.distance));
  CHECK(norm(p.center_rest - p.center_m) + 2 * p.radius == doctest::Approx(p.diameter));
  const auto q = build_problem(0.1, 1.0);
  CHECK(q.mu_r == doctest::Approx(0.09));
  CHECK(q.eta == doctest::Approx(1.0 / 0.0081).epsilon(1e-14));
  CHECK(std::abs(0.1 * q.center_m.x + 0.9 * q.center_rest.x) <= 1e-12);
  CHECK_THROWS_AS(build_problem(0.5, 0.0), DomainError);
  CHECK_THROWS_AS(build_problem(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(build_problem(1.0, 1.0), DomainError);
}

TEST_CASE("solver configuration validation lists every violation") {
  SolverConfig c;
  c.theta = 1.5;
  c.tol_el = -1.0;
  c.max_iters = 0;
  try {
    c.validate();
    FAIL("expected ConfigurationError");
  } catch (const ConfigurationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("theta") != std::string::npos);
    CHECK(msg.find("tol_el") != std::string::npos);
    CHECK(msg.find("max_iters") != std::string::npos);
  }
}

TEST_CASE("initial guess") {
  const auto p = build_problem(0.5, 1.0);
  const Grid3 g = binary_grid(p, {48, 32, 32, 0.0});
  const DensityField rho = initial_guess(p, g);
  CHECK(mirror_gap(rho) <= 1e-15 * rho.max());
  const auto sp = scf_problem(p);
  const auto labels = ball_labels(g, sp.domains);
  double m0 = 0.0;
  double m1 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (labels[i] == 0) m0 += rho[i] * g.cell_volume();
    if (labels[i] == 1) m1 += rho[i] * g.cell_volume();
  }
  CHECK(m0 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(m1 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(mass(rho) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(support_margin(rho, sp.domains) >= g.h * 0.5);
  const Grid3 coarse = binary_grid(p, {6, 4, 4, 0.0});
  CHECK_THROWS_AS(initial_guess(p, coarse), ConfigurationError);
}

TEST_CASE("component mass at lambda") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  std::vector<double> w(500);
  for (auto& x : w) x = u(rng);
  const double wmax = *std::max_element(w.begin(), w.end());
  CHECK(component_mass_at_lambda(n1(), w, 0.01, -wmax - 1e-9) == 0.0);
  CHECK(component_mass_at_lambda(n1(), w, 0.01, 0.0) > 0.0);
  double prev = component_mass_at_lambda(n1(), w, 0.01, -wmax + 0.01);
  for (double lam = -wmax + 0.02; lam < 1.0; lam += 0.05) {
    const double m = component_mass_at_lambda(n1(), w, 0.01, lam);
    CHECK(m > prev);
    prev = m;
  }
}

TEST_CASE("multiplier solve") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::vector<double> w(2000);
  for (auto& x : w) x = u(rng);
  const double target = component_mass_at_lambda(n1(), w, 1e-3, -1.0);
  const double lam = solve_lambda(n1(), w, 1e-3, target, 1e-12);
  CHECK(lam == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(solve_lambda(n1(), w, 1e-3, 2 * target, 1e-12) > lam);
  // seed independence: a different expansion factor lands on the same root
  CHECK(solve_lambda(n1(), w, 1e-3, target, 1e-12, {7.0, 200}) == doctest::Approx(lam).epsilon(1e-13));
  CHECK_THROWS_AS(solve_lambda(n1(), w, 1e-3, 0.0, 1e-12), PreconditionError);

  std::vector<std::pair<double, double>> rows;
  for (int i = 0; i < 40; ++i) rows.emplace_back(std::pow(10.0, -3 + 0.1 * i), std::pow(10.0, 2 * (-3 + 0.1 * i)));
  const auto small = EquationOfState::tabulated(rows, 5.0);
  CHECK_THROWS_AS(solve_lambda(small, w, 1e-3, 1e6, 1e-12), NoSolutionError);
}

TEST_CASE("scf step keeps masses and mirror symmetry") {
  const auto p = build_problem(0.5, 1.0);
  const Grid3 g = binary_grid(p, {48, 32, 32, 0.0});
  SolverConfig c;
  c.theta = 1.0;
  const auto sp = scf_problem(p);
  const StepResult s = scf_step(n1(), sp, initial_guess(sp, g), c);
  const auto labels = ball_labels(g, sp.domains);
  double m0 = 0.0;
  double m1 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (labels[i] == 0) m0 += s.rho[i] * g.cell_volume();
    if (labels[i] == 1) m1 += s.rho[i] * g.cell_volume();
  }
  CHECK(m0 == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(m1 == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(s.diagnostics.candidate_change > 0.0);
  CHECK(mirror_gap(s.rho) <= 1e-12 * s.rho.max());
  CHECK(s.lambda[0] == doctest::Approx(s.lambda[1]).epsilon(1e-12));
}

TEST_CASE("single star converges and is a fixed point") {
  const auto c = small_config();
  const auto sol = solve_single_star(n1(), 1.0, c);
  CHECK(sol.status == SolveStatus::converged);
  CHECK(sol.el_residual_sup <= c.tol_el);
  CHECK(sol.lambda[0] < -10 * c.tol_el);
  CHECK(sol.support_margin > 0.0);
  CHECK(sol.energy_decreased);
  CHECK(sol.support_components == 1);
  CHECK(mass(sol.rho) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(norm(center_of_mass(sol.rho)) <= 1e-12);
  // E_0 of the n = 1 polytrope, -M^2/(2R) with R = sqrt(pi/2), within grid error
  CHECK(sol.ledger.total == doctest::Approx(-0.5 / std::sqrt(M_PI / 2)).epsilon(0.02));

  // feeding the solution back changes it at the level set by tol_el
  const StepResult again = scf_step(n1(), sol.problem, sol.rho, c);
  CHECK(again.diagnostics.el_sup <= c.tol_el);
  CHECK(again.diagnostics.candidate_change <= 10 * c.tol_el);

  CHECK_THROWS_AS(solve_single_star(n1(), 0.0, c), DomainError);
}

TEST_CASE("iteration cap reports max_iters") {
  auto c = small_config(16);
  c.max_iters = 2;
  const auto sol = solve_single_star(n1(), 1.0, c);
  CHECK(sol.status == SolveStatus::max_iters);
  CHECK(sol.trace.size() == 2);
}

TEST_CASE("rotating single-ball problem") {
  // one ball with J > 0 exercises the centrifugal term
  const Grid3 g = Grid3::centered({}, 0.125, 32, 32, 32);
  const ScfProblem p{{Ball{{}, 1.9}}, {1.0}, 0.1};
  SolverConfig c = small_config(32);
  const auto sol = solve(n1(), p, initial_guess(p, g), c);
  CHECK(sol.status == SolveStatus::converged);
  CHECK(sol.omega > 0.0);
  // rotation flattens the star: I grows relative to the non-rotating case
  const auto still = solve(n1(), ScfProblem{p.domains, {1.0}, 0.0}, initial_guess(p, g), c);
  CHECK(sol.ledger.moment_of_inertia > still.ledger.moment_of_inertia);
  // rotating the equilibrium about the z-axis leaves E_J unchanged up to interpolation error
  const auto turned = rotate_field(sol.rho, 0.5);
  CHECK(total_energy(n1(), turned, p.J).total == doctest::Approx(sol.ledger.total).epsilon(5e-3));
}

TEST_CASE("fast rotation reaching the ball is flagged suspect") {
  const Grid3 g = Grid3::centered({}, 0.125, 32, 32, 32);
  const ScfProblem p{{Ball{{}, 1.9}}, {1.0}, 0.3};
  const auto sol = solve(n1(), p, initial_guess(p, g), small_config(32));
  CHECK(sol.status == SolveStatus::suspect);
  CHECK(sol.support_margin == 0.0);
  CHECK_FALSE(sol.notes.empty());
}
