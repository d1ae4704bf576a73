#include "binaria/audit.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "binaria/diagnostics.hpp"
#include "binaria/fields.hpp"
#include "binaria/solver.hpp"
#include "binaria/wasserstein.hpp"

namespace binaria {

namespace {

struct Suite {
  std::vector<SuiteCheck>& out;
  std::string module;

  // pass when measured <= bound
  void at_most(const std::string& name, double measured, double bound, const std::string& detail = "") {
    out.push_back({module, name, measured <= bound, measured, bound, detail});
  }
  void holds(const std::string& name, bool ok, const std::string& detail = "") {
    out.push_back({module, name, ok, ok ? 1.0 : 0.0, 1.0, detail});
  }
  // exceptions become failed checks so one broken suite does not hide the rest
  template <class F>
  void guarded(const std::string& name, F&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      out.push_back({module, name, false, 0.0, 0.0, std::string("raised: ") + e.what()});
    }
  }
};

double brute_bottleneck(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  std::vector<std::size_t> p(a.size());
  std::iota(p.begin(), p.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) worst = std::max(worst, norm(a.atoms[i] - b.atoms[p[i]]));
    best = std::min(best, worst);
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

DiscreteMeasure random_cloud(std::mt19937_64& rng, std::size_t n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  return DiscreteMeasure(std::move(pts), 1.0);
}

DensityField random_density(std::mt19937_64& rng, const Grid3& g, double zero_fraction) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(g.size());
  for (auto& x : v) x = u(rng) < zero_fraction ? 0.0 : u(rng);
  if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) v[0] = 1.0;
  return DensityField(g, std::move(v));
}

void eos_suite(std::vector<SuiteCheck>& out, const EquationOfState& eos) {
  Suite s{out, "eos"};
  const bool tab = eos.kind() == EquationOfState::Kind::tabulated;
  const double top = tab ? std::min(1e3, eos.table_max_density()) : 1e3;
  s.guarded("identity A'(s)s - A(s) = P(s)", [&] {
    double worst = 0.0;
    for (int i = 0; i < 60; ++i) {
      const double x = std::exp(std::log(1e-6) + (std::log(top) - std::log(1e-6)) * i / 59.0);
      const double p = eos.pressure(x);
      worst = std::max(worst, std::abs(eos.enthalpy(x) * x - eos.energy_density(x) - p) / p);
    }
    s.at_most("identity A'(s)s - A(s) = P(s)", worst, tab ? 1e-8 : 1e-12, "60-point log ladder");
  });
  s.guarded("inverse enthalpy round trip", [&] {
    double worst = 0.0;
    for (int i = 0; i < 40; ++i) {
      const double x = std::exp(std::log(1e-6) + (std::log(top) - std::log(1e-6)) * i / 39.0);
      worst = std::max(worst, std::abs(eos.inverse_enthalpy(eos.enthalpy(x)) - x) / x);
    }
    s.at_most("inverse enthalpy round trip", worst, 1e-10);
  });
  s.guarded("d/dy P(phi(y)) = phi(y)", [&] {
    double worst = 0.0;
    bool second_order = true;
    const double ymax = eos.enthalpy(top);
    for (double y : {0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0}) {
      if (y + 2e-4 > ymax) continue;
      const auto c1 = pressure_of_enthalpy_derivative_check(eos, y, 1e-4);
      worst = std::max(worst, c1.gap);
      const double g1 = pressure_of_enthalpy_derivative_check(eos, y, 1e-2 * y).gap;
      const double g2 = pressure_of_enthalpy_derivative_check(eos, y, 5e-3 * y).gap;
      // quadratic P(phi) makes the central difference exact up to round-off
      if (g1 > 1e-11 * std::max(1.0, y)) second_order = second_order && g1 / g2 > 3.5 && g1 / g2 < 4.5;
    }
    s.at_most("d/dy P(phi(y)) = phi(y)", worst, 1e-5, "h = 1e-4");
    s.holds("finite-difference gap decays at second order", second_order);
  });
  s.guarded("F1-F4", [&] {
    const auto r = audit_assumptions(eos);
    std::ostringstream d;
    d << "f1 " << r.f1_ok << " f2 " << r.f2_ok << " f3 " << r.f3_ok << " f4 " << r.f4_ok;
    s.holds("F1-F4", r.f1_ok && r.f2_ok && r.f3_ok && r.f4_ok, d.str());
  });
}

void fields_suite(std::vector<SuiteCheck>& out, std::mt19937_64& rng, int instances) {
  Suite s{out, "fields"};
  s.guarded("moment of inertia expansion", [&] {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < instances; ++t) {
      const Grid3 g({u(rng), u(rng), u(rng)}, 0.3, 6, 6, 6);
      const auto a = random_density(rng, g, 0.5);
      const auto b = random_density(rng, g, 0.5);
      const auto e = moi_expansion(a, b);
      worst = std::max(worst, std::abs(e.lhs - e.rhs) / std::max(std::abs(e.lhs), 1e-300));
    }
    const Grid3 g({}, 0.3, 4, 4, 4);
    const auto z = moi_expansion(DensityField(g), DensityField(g));
    s.at_most("moment of inertia expansion", worst, 1e-12);
    s.holds("moment of inertia expansion of zero fields", z.lhs == 0.0 && z.rhs == 0.0);
  });
  s.guarded("rigid rotation J_z = omega I", [&] {
    const Grid3 g = Grid3::centered({0.2, -0.1, 0.0}, 0.1, 10, 10, 10);
    const auto rho = random_density(rng, g, 0.3);
    const RigidRotation rot{0.7, center_of_mass(rho)};
    const double Jz = angular_momentum_z(rho, rot.sample(g));
    const double wI = 0.7 * moment_of_inertia(rho);
    s.at_most("rigid rotation J_z = omega I", std::abs(Jz - wI) / wI, 1e-12);
  });
  s.guarded("energy ledger identity", [&] {
    const auto eos = EquationOfState::polytrope(1.0, 2.0);
    const Grid3 g = Grid3::centered({}, 0.2, 8, 8, 8);
    const auto rho = random_density(rng, g, 0.3);
    const auto L = total_energy(eos, rho, 0.4);
    s.holds("energy ledger identity", L.total == L.internal - L.interaction / 2.0 + L.rotational);
  });
}

void potential_suite(std::vector<SuiteCheck>& out, std::mt19937_64& rng) {
  Suite s{out, "potential"};
  s.guarded("direct and FFT agree", [&] {
    const Grid3 g({}, 0.25, 10, 8, 6);
    const auto rho = random_density(rng, g, 0.2);
    const auto d = PotentialSolver(g, PotentialSolver::Method::direct).potential(rho.field());
    const auto f = PotentialSolver(g, PotentialSolver::Method::fft).potential(rho.field());
    double worst = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      worst = std::max(worst, std::abs(d[i] - f[i]));
      scale = std::max(scale, std::abs(d[i]));
    }
    s.at_most("direct and FFT agree", worst / scale, 1e-12);
  });
  s.guarded("uniform ball", [&] {
    // cells centered on the origin: odd count
    const Grid3 g = Grid3::centered({}, 0.1, 41, 41, 41);
    DensityField ball(g);
    ball.modify([&](std::vector<double>& v) {
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = norm(g.center(i)) < 1.0 ? 1.0 : 0.0;
    });
    const double M = mass(ball);
    const auto V = PotentialSolver(g).potential(ball.field());
    const double inside = V[g.index(20, 20, 20)] / (1.5 * M);
    const double outside = V[g.index(40, 20, 20)] * 2.0 / M;
    s.at_most("uniform ball interior", std::abs(inside - 1.0), 0.02, "V(0) against 3M/(2a), 41^3");
    s.at_most("uniform ball exterior", std::abs(outside - 1.0), 0.02, "V at r = 2a against M/r");
  });
}

void wasserstein_suite(std::vector<SuiteCheck>& out, std::mt19937_64& rng, int instances) {
  Suite s{out, "wasserstein"};
  s.guarded("bottleneck equals permutation oracle", [&] {
    std::uniform_int_distribution<std::size_t> size(1, 6);
    double worst = 0.0;
    for (int t = 0; t < instances; ++t) {
      const std::size_t n = size(rng);
      const auto a = random_cloud(rng, n, 1.0);
      const auto b = random_cloud(rng, n, 1.0);
      worst = std::max(worst, std::abs(winf_distance(a, b).distance - brute_bottleneck(a, b)));
    }
    s.at_most("bottleneck equals permutation oracle", worst, 0.0);
  });
  s.guarded("metric axioms", [&] {
    double slack = 0.0;
    bool symmetric = true;
    bool identity = true;
    for (int t = 0; t < instances; ++t) {
      const auto a = random_cloud(rng, 20, 1.0);
      const auto b = random_cloud(rng, 20, 1.0);
      const auto c = random_cloud(rng, 20, 1.0);
      const double ab = winf_distance(a, b).distance;
      const double bc = winf_distance(b, c).distance;
      const double ac = winf_distance(a, c).distance;
      slack = std::min(slack, ab + bc - ac);
      symmetric = symmetric && ab == winf_distance(b, a).distance;
      identity = identity && winf_distance(a, a).distance == 0.0;
    }
    s.at_most("triangle inequality deficit", -slack, 1e-12);
    s.holds("symmetry and identity", symmetric && identity);
  });
  s.guarded("translation push-forward", [&] {
    const auto a = random_cloud(rng, 30, 1.0);
    const Vec3 v{0.3, -0.2, 0.1};
    const auto b = push_forward(a, [&](const Vec3& x) { return x + v; });
    s.at_most("translation push-forward", std::abs(winf_distance(a, b).distance - norm(v)), 1e-15);
  });
  s.guarded("lemma properties", [&] {
    bool ok = true;
    for (int t = 0; t < instances; ++t) {
      const auto a = random_cloud(rng, 12, 1.0);
      const auto b = random_cloud(rng, 12, 1.0);
      const double d = winf_distance(a, b).distance;
      ok = ok && check_lemma_properties(a, b, 2.0 * d).all_pass();
    }
    s.holds("lemma properties", ok);
  });
  s.guarded("rearrangement bounds", [&] {
    const int fields = std::max(3, instances / 5);
    bool ok = true;
    std::size_t capped = 0;
    double worst_mass = 0.0;
    for (int t = 0; t < fields; ++t) {
      const auto rho = spiked_density(32, 1 + t % 4, rng());
      const auto r = rearrange_to_bounded(rho, 32.0 * std::sqrt(3.0) * rho.grid().h, 128);
      ok = ok && r.audit.pass && r.audit.sup_sigma <= 2.0 * r.R;
      capped += r.audit.capped_cells;
      worst_mass = std::max({worst_mass, r.audit.max_cube_mass_error, r.audit.global_mass_error});
    }
    s.holds("rearrangement bounds", ok && capped > 0, std::to_string(capped) + " cells capped");
    s.at_most("rearrangement mass conservation", worst_mass, 1e-12);
  });
}

void solver_suite(std::vector<SuiteCheck>& out, const EquationOfState& eos, std::mt19937_64& rng, std::size_t n) {
  Suite s{out, "solver"};
  SolverConfig config;
  config.grid = {n, n, n, 0.0};
  std::optional<EquilibriumSolution> star;
  s.guarded("single star converges", [&] {
    star = solve_single_star(eos, 1.0, config);
    s.holds("single star converges", star->status == SolveStatus::converged, to_string(star->status));
  });
  if (!star) return;
  const auto& sol = *star;

  s.guarded("lambda is seed independent", [&] {
    const auto V = PotentialSolver(sol.rho.grid()).potential(sol.rho.field());
    const auto W = effective_potential(sol.rho, 0.0, V);
    const auto labels = ball_labels(sol.rho.grid(), sol.problem.domains);
    std::vector<double> w;
    for (std::size_t i = 0; i < W.size(); ++i)
      if (labels[i] == 0) w.push_back(W[i]);
    const double cv = sol.rho.grid().cell_volume();
    const double l2 = solve_lambda(eos, w, cv, 1.0, 1e-12, {2.0, 200});
    const double l7 = solve_lambda(eos, w, cv, 1.0, 1e-12, {7.0, 200});
    s.at_most("lambda is seed independent", std::abs(l2 - l7), 1e-12 * std::abs(l2));
  });

  Suite d{out, "diagnostics"};
  d.guarded("EL residual", [&] {
    const auto el = el_residual(eos, sol.rho, 0.0, sol.problem.domains, sol.lambda, sol.tol_el);
    d.at_most("EL residual", el.el_sup, sol.tol_el);
  });
  d.guarded("EP residual", [&] {
    const auto ep = ep_residual(eos, sol.rho, 0.0);
    const double h = sol.rho.grid().h;
    d.at_most("EP residual constant", ep.ep_sup / (h * h + sol.tol_el), 50.0);
    d.at_most("EP residual on empty cells", ep.zero_cell_sup, 0.0);
    const auto junk = random_density(rng, Grid3::centered({}, 0.2, 10, 10, 10), 0.7);
    d.at_most("EP residual on empty cells of random input", ep_residual(eos, junk, 0.3).zero_cell_sup, 0.0);
  });
  d.guarded("multiplier audit", [&] {
    const auto a = multiplier_audit(eos, sol);
    d.holds("multiplier audit", a.pass);
  });
  d.guarded("variational derivative", [&] {
    const double R = 10.0;
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    ScalarField sigma(sol.rho.grid());
    std::vector<std::size_t> cells;
    for (std::size_t i = 0; i < sigma.size(); ++i)
      if (sol.rho[i] >= 1.0 / R) cells.push_back(i);
    double sum = 0.0;
    for (std::size_t i : cells) sum += (sigma[i] = u(rng));
    for (std::size_t i : cells) sigma[i] -= sum / double(cells.size());
    const auto c = directional_derivative_check(eos, sol.rho, 0.0, sigma, {1e-3, 1e-4, 1e-5}, R);
    d.holds("variational derivative gaps decrease",
            c.internal.gaps_decreasing && c.interaction.gaps_decreasing && c.rotational.gaps_decreasing);
  });
  if (eos.kind() == EquationOfState::Kind::polytrope) {
    d.guarded("Lane-Emden shape", [&] {
      const auto cmp = lane_emden_comparison(eos, sol.rho);
      d.at_most("Lane-Emden shape", cmp.sup_error_fitted, 0.01);
    });
  }
}

}  // namespace

std::vector<SuiteCheck> run_audit_suite(const EquationOfState& eos, const AuditOptions& options) {
  std::vector<SuiteCheck> out;
  std::mt19937_64 rng(options.seed);
  eos_suite(out, eos);
  fields_suite(out, rng, options.instances);
  potential_suite(out, rng);
  wasserstein_suite(out, rng, options.instances);
  solver_suite(out, eos, rng, options.grid);
  return out;
}

}  // namespace binaria
