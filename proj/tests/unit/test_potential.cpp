#include <cmath>
#include <random>

#include "binaria/fields.hpp"
#include "binaria/potential.hpp"
#include "doctest.h"

using namespace binaria;
using Method = PotentialSolver::Method;

namespace {

// Brute-force oracle written independently of the library kernels.
ScalarField brute_potential(const ScalarField& rho) {
  const Grid3& g = rho.grid;
  ScalarField v(g);
  for (std::size_t a = 0; a < g.size(); ++a) {
    double s = 0.0;
    for (std::size_t b = 0; b < g.size(); ++b) {
      if (rho[b] == 0.0) continue;
      const double d = norm(g.center(a) - g.center(b));
      s += rho[b] * (a == b ? 2.380077363979553 / g.h : 1.0 / d);
    }
    v[a] = s * g.cell_volume();
  }
  return v;
}

ScalarField random_field(const Grid3& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ScalarField f(g);
  for (auto& x : f.values) x = u(rng) < 0.3 ? 0.0 : u(rng);
  return f;
}

DensityField uniform_ball(const Grid3& g, double a, double m = 1.0) {
  DensityField rho(g);
  rho.modify([&](std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = norm(g.center(i)) <= a ? 1.0 : 0.0;
  });
  rho.scale(m / mass(rho));
  return rho;
}

}  // namespace

TEST_CASE("cube self-potential constant") {
  CHECK(kCubeSelfPotential == doctest::Approx(3.0 * std::log((std::sqrt(3.0) + 1) / (std::sqrt(3.0) - 1)) - M_PI / 2)
                                   .epsilon(1e-15));
}

TEST_CASE("point mass potential is exact away from the source cell") {
  const Grid3 g = Grid3::centered({}, 1.0, 7, 7, 7);
  ScalarField rho(g);
  rho[g.index(3, 3, 3)] = 1.0;
  for (auto m : {Method::direct, Method::fft}) {
    const ScalarField v = PotentialSolver(g, m).potential(rho);
    CHECK(v[g.index(5, 3, 3)] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(v[g.index(3, 3, 3)] == doctest::Approx(kCubeSelfPotential).epsilon(1e-12));
    const VectorField gr = PotentialSolver(g, m).gradient(rho);
    const Vec3 at2 = gr.values[g.index(5, 3, 3)];
    CHECK(at2.x == doctest::Approx(-0.25).epsilon(1e-12));
    CHECK(std::abs(at2.y) <= 1e-14);
    CHECK(std::abs(at2.z) <= 1e-14);
    CHECK(norm(gr.values[g.index(3, 3, 3)]) <= 1e-14);
  }
}

TEST_CASE("direct and FFT paths agree with the brute-force sum") {
  const Grid3 g({0.3, -1.0, 2.0}, 0.37, 9, 6, 5);
  const ScalarField rho = random_field(g, 11);
  const ScalarField ref = brute_potential(rho);
  const ScalarField vd = PotentialSolver(g, Method::direct).potential(rho);
  const ScalarField vf = PotentialSolver(g, Method::fft).potential(rho);
  double worst_d = 0.0;
  double worst_f = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    worst_d = std::max(worst_d, std::abs(vd[i] - ref[i]) / ref[i]);
    worst_f = std::max(worst_f, std::abs(vf[i] - ref[i]) / ref[i]);
  }
  CHECK(worst_d <= 1e-13);
  CHECK(worst_f <= 1e-12);

  const VectorField gd = PotentialSolver(g, Method::direct).gradient(rho);
  const VectorField gf = PotentialSolver(g, Method::fft).gradient(rho);
  double scale = 0.0;
  double diff = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    scale = std::max(scale, norm(gd.values[i]));
    diff = std::max(diff, norm(gd.values[i] - gf.values[i]));
  }
  CHECK(diff <= 1e-12 * scale);
}

TEST_CASE("uniform ball potential") {
  const double a = 1.0;
  const Grid3 g = Grid3::centered({}, 0.08, 65, 65, 65);
  const DensityField rho = uniform_ball(g, a);
  const ScalarField v = PotentialSolver(g).potential(rho.field());
  // V(0) = 3M/(2a), V(r >= a) = M/r; the grid ball's effective radius differs
  // from a by O(h), hence the percent-level tolerance.
  CHECK(v[g.index(32, 32, 32)] == doctest::Approx(1.5 / a).epsilon(0.01));
  CHECK(v[g.index(32 + 25, 32, 32)] == doctest::Approx(1.0 / (2 * a)).epsilon(0.01));
}

TEST_CASE("gradient is odd under reflection and matches differences of V") {
  const Grid3 g = Grid3::centered({}, 0.1, 21, 21, 21);
  const DensityField rho = uniform_ball(g, 0.6);
  const PotentialSolver solver(g);
  const VectorField gr = solver.gradient(rho.field());
  CHECK(norm(gr.values[g.index(10, 10, 10)]) <= 1e-12);
  const Vec3 l = gr.values[g.index(4, 10, 10)];
  const Vec3 r = gr.values[g.index(16, 10, 10)];
  CHECK(l.x == doctest::Approx(-r.x).epsilon(1e-12));
  // outside the ball central differences of V track the kernel gradient
  const ScalarField v = solver.potential(rho.field());
  const double fd = (v[g.index(18, 10, 10)] - v[g.index(16, 10, 10)]) / (2 * g.h);
  CHECK(gr.values[g.index(17, 10, 10)].x == doctest::Approx(fd).epsilon(0.01));
}

TEST_CASE("solver rejects foreign grids") {
  const Grid3 g = Grid3::centered({}, 0.1, 4, 4, 4);
  const PotentialSolver s(g);
  CHECK_THROWS_AS(s.potential(ScalarField(Grid3::centered({}, 0.2, 4, 4, 4))), DomainError);
}
