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

const EquilibriumSolution& star() {
  static const EquilibriumSolution s = [] {
    SolverConfig c;
    c.grid = {24, 24, 24, 0.0};
    return solve_single_star(n1(), 1.0, c);
  }();
  return s;
}

DensityField gaussian(const Grid3& g, double width) {
  DensityField f(g);
  f.modify([&](std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double r = norm(g.center(i));
      v[i] = r < 1.5 ? std::exp(-r * r / (width * width)) : 0.0;
    }
  });
  f.scale(1.0 / mass(f));
  return f;
}

}  // namespace

TEST_CASE("Lane-Emden reference at n = 1 against sin(xi)/xi") {
  const auto p = lane_emden_reference(2.0, 1.0, 1.0);
  CHECK(p.n == 1.0);
  CHECK(std::abs(p.xi1 - M_PI) <= 1e-8);
  CHECK(p.dtheta[0] == 0.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1e-3, M_PI);
  for (int i = 0; i < 200; ++i) {
    const double x = u(rng);
    CHECK(std::abs(p.theta_at(x) - std::sin(x) / x) <= 1e-8);
  }
  CHECK(p.radius == doctest::Approx(std::sqrt(M_PI / 2)).epsilon(1e-8));
  CHECK(std::abs(p.integrated_mass() - 1.0) <= 1e-6);
  // n = 1: M = 4 rho_c R^3 / pi
  CHECK(p.central_density == doctest::Approx(M_PI / (4 * std::pow(p.radius, 3))).epsilon(1e-8));
  CHECK(p.density(p.radius * 1.01) == 0.0);

  const auto p15 = lane_emden_reference(5.0 / 3.0, 2.0, 0.7);
  CHECK(std::abs(p15.integrated_mass() - 0.7) <= 1e-5);
  CHECK_THROWS_AS(lane_emden_reference(4.0 / 3.0, 1.0, 1.0), DomainError);
}

TEST_CASE("EL residual") {
  const auto& s = star();
  const auto rep = el_residual(n1(), s.rho, 0.0, s.problem.domains, s.lambda, s.tol_el);
  CHECK(rep.el_sup <= s.tol_el);
  CHECK(rep.el_sup_neighbourhood <= s.tol_el);
  CHECK(rep.pass);
  const auto refit = el_residual(n1(), s.rho, 0.0, s.problem.domains);
  CHECK(refit.lambda_refit);
  CHECK(refit.lambda[0] == doctest::Approx(s.lambda[0]).epsilon(1e-3));

  const DensityField blob = gaussian(s.rho.grid(), 0.5);
  const auto bad = el_residual(n1(), blob, 0.0, s.problem.domains);
  CHECK(bad.el_sup > 100 * s.tol_el);
  CHECK_FALSE(bad.pass);

  CHECK_THROWS_AS(el_residual(n1(), DensityField(s.rho.grid()), 0.0, s.problem.domains), DegenerateInputError);
}

TEST_CASE("EP residual") {
  const auto& s = star();
  const auto ep = ep_residual(n1(), s.rho, 0.0);
  const double h = s.rho.grid().h;
  CHECK(ep.ep_sup <= 50 * (h * h + s.tol_el));
  CHECK(ep.zero_cell_sup == 0.0);

  // arbitrary input with holes: empty interior stencils give exactly zero
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Grid3 g = Grid3::centered({}, 0.2, 12, 12, 12);
  DensityField r(g);
  r.modify([&](std::vector<double>& v) {
    for (auto& x : v) x = u(rng) < 0.2 ? u(rng) : 0.0;
  });
  const auto any = ep_residual(n1(), r, 0.7);
  CHECK(any.zero_cell_sup == 0.0);
  std::size_t empty_cells = 0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (r[i] == 0.0 && norm(any.defect.values[i]) == 0.0) ++empty_cells;
  CHECK(empty_cells > 0);

  // uniform non-rotating ball: pressure gradient vanishes inside, gravity does not
  DensityField ball(s.rho.grid());
  ball.modify([&](std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = norm(ball.grid().center(i)) < 1.0 ? 1.0 : 0.0;
  });
  const auto eb = ep_residual(n1(), ball, 0.0);
  const Grid3& bg = ball.grid();
  const std::size_t probe = bg.index(15, 12, 12);  // x ~ 0.5
  CHECK(eb.defect.values[probe].x > 0.1);
}

TEST_CASE("variational derivative field") {
  const auto& s = star();
  const ScalarField d = variational_derivative_field(n1(), s.rho, 0.0);
  const ScalarField V = PotentialSolver(s.rho.grid()).potential(s.rho.field());
  for (std::size_t i = 0; i < d.size(); i += 97) CHECK(d[i] == doctest::Approx(n1().enthalpy(s.rho[i]) - V[i]));
  for (std::size_t i = 0; i < d.size(); ++i)
    if (s.rho[i] > 0.0) CHECK(std::abs(d[i] - s.lambda[0]) <= 2 * s.tol_el);
  // inequality side on the delta-neighbourhood
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(d[i] >= s.lambda[0] - s.tol_el);
}

TEST_CASE("directional derivative") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Grid3 g = Grid3::centered({}, 0.15, 12, 12, 12);
  DensityField rho(g);
  rho.modify([&](std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = norm(g.center(i)) < 0.8 ? 0.5 + u(rng) : 0.0;
  });
  rho.scale(1.0 / mass(rho));
  const double R = 50.0;
  const std::vector<double> ladder{1e-3, 1e-4, 1e-5};

  const auto zero = directional_derivative_check(n1(), rho, 0.4, ScalarField(g), ladder, R);
  for (double gap : zero.gaps) CHECK(gap == 0.0);
  CHECK(zero.analytic == 0.0);

  // mass-neutral direction supported where rho is moderate
  ScalarField sigma(g);
  double plus = 0.0;
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (rho[i] > 1.0 / R && norm(g.center(i)) < 0.7) cells.push_back(i);
  for (std::size_t i : cells) {
    sigma[i] = u(rng) - 0.5;
    plus += sigma[i];
  }
  for (std::size_t i : cells) sigma[i] -= plus / double(cells.size());
  const auto chk = directional_derivative_check(n1(), rho, 0.4, sigma, ladder, R);
  CHECK(std::abs(chk.sigma_integral) <= 1e-12);
  CHECK(chk.gaps_decreasing);
  CHECK(chk.internal.gaps_decreasing);
  CHECK(chk.interaction.gaps_decreasing);
  CHECK(chk.rotational.gaps_decreasing);
  CHECK(chk.gaps.back() <= 1e-3 * std::max(1.0, std::abs(chk.analytic)));

  ScalarField outside(g);
  outside[0] = -1.0;  // rho = 0 there, so negative sigma leaves the cone
  CHECK_THROWS_AS(directional_derivative_check(n1(), rho, 0.4, outside, ladder, R), PreconditionError);

  ScalarField drain(g);
  drain[cells.front()] = -rho[cells.front()] / 5e-4;  // rho + t sigma < 0 only at t = 1e-3
  const auto dropped = directional_derivative_check(n1(), rho, 0.4, drain, ladder, R);
  CHECK(dropped.t.size() == 2);
  CHECK(dropped.notes.size() == 1);
}

TEST_CASE("multiplier audit") {
  const auto& s = star();
  const auto a = multiplier_audit(n1(), s);
  CHECK(a.pass);
  CHECK(a.lambda_negative);
  CHECK(a.support_margin > 0.0);

  // a field filling its ball touches the boundary
  DensityField full(s.rho.grid());
  const Ball ball = s.problem.domains[0];
  full.modify([&](std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = ball.contains(full.grid().center(i)) ? 1.0 : 0.0;
  });
  const auto b = multiplier_audit(n1(), full, 0.0, s.problem.domains, {-0.5}, 1e-4);
  CHECK_FALSE(b.pass);
  CHECK(b.support_margin == 0.0);
}
