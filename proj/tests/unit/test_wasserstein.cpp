#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "binaria/fields.hpp"
#include "binaria/wasserstein.hpp"
#include "doctest.h"

using namespace binaria;

namespace {

// Exhaustive oracle: min over permutations of the max matched distance.
double brute_bottleneck(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  std::vector<std::size_t> p(a.size());
  std::iota(p.begin(), p.end(), 0);
  double best = INFINITY;
  do {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, norm(a[i] - b[p[i]]));
    best = std::min(best, worst);
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

std::vector<Vec3> random_cloud(std::mt19937_64& rng, std::size_t n, double spread = 1.0) {
  std::normal_distribution<double> g(0.0, spread);
  std::vector<Vec3> v(n);
  for (auto& p : v) p = {g(rng), g(rng), g(rng)};
  return v;
}

DiscreteMeasure cloud(std::vector<Vec3> v) { return DiscreteMeasure(std::move(v), 1.0); }

}  // namespace

TEST_CASE("bottleneck examples") {
  CHECK(winf_distance(cloud({{0, 0, 0}}), cloud({{3, 4, 0}})).distance == 5.0);
  const auto r = winf_distance(cloud({{0, 0, 0}, {1, 0, 0}}), cloud({{0, 0, 0}, {3, 0, 0}}));
  CHECK(r.distance == 2.0);
  CHECK(r.matching == std::vector<std::size_t>{0, 1});
  CHECK(winf_distance(cloud({{0, 0, 0}, {1, 0, 0}}), cloud({{0.5, 0, 0}, {1.5, 0, 0}})).distance == 0.5);
  CHECK_THROWS_AS(winf_distance(cloud({{0, 0, 0}}), cloud({{0, 0, 0}, {1, 0, 0}})), IncomparableMeasuresError);
  CHECK_THROWS_AS(winf_distance(DiscreteMeasure({{0, 0, 0}}, 1.0), DiscreteMeasure({{0, 0, 0}}, 2.0)),
                  IncomparableMeasuresError);
  CHECK_THROWS_AS(DiscreteMeasure({}, 1.0), DomainError);
}

TEST_CASE("bottleneck equals the permutation oracle") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + trial % 7;
    const auto a = random_cloud(rng, n);
    const auto b = random_cloud(rng, n);
    const auto r = winf_distance(cloud(a), cloud(b));
    CHECK(r.distance == brute_bottleneck(a, b));
    CHECK(r.certificate == r.distance);
    std::vector<std::size_t> sorted = r.matching;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n; ++i) CHECK(sorted[i] == i);
  }
}

TEST_CASE("metric axioms") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = cloud(random_cloud(rng, 30));
    const auto b = cloud(random_cloud(rng, 30));
    const auto c = cloud(random_cloud(rng, 30));
    const double ab = winf_distance(a, b).distance;
    CHECK(ab == winf_distance(b, a).distance);
    CHECK(winf_distance(a, a).distance == 0.0);
    CHECK(ab > 0.0);
    CHECK(winf_distance(a, c).distance <= ab + winf_distance(b, c).distance + 1e-12);
  }
  // permuted copy is the same multiset
  auto v = random_cloud(rng, 12);
  auto w = v;
  std::shuffle(w.begin(), w.end(), rng);
  CHECK(winf_distance(cloud(v), cloud(w)).distance == 0.0);
  // weights never enter the cost
  CHECK(winf_distance(DiscreteMeasure(v, 3.0), DiscreteMeasure(w, 3.0)).distance == 0.0);
}

TEST_CASE("push-forward bound") {
  std::mt19937_64 rng(29);
  const auto a = cloud(random_cloud(rng, 6));
  CHECK(winf_distance(a, push_forward(a, [](const Vec3& x) { return x; })).distance == 0.0);
  const Vec3 shift{0.3, -0.1, 0.2};
  const auto moved = push_forward(a, [&](const Vec3& x) { return x + shift; });
  CHECK(winf_distance(a, moved).distance <= norm(shift) + 1e-15);
  const auto single = cloud({{1, 2, 3}});
  CHECK(winf_distance(single, push_forward(single, [&](const Vec3& x) { return x + shift; })).distance ==
        doctest::Approx(norm(shift)).epsilon(1e-15));

  const double th = 0.4;
  auto rot = [&](const Vec3& x) { return Vec3{std::cos(th) * x.x - std::sin(th) * x.y, std::sin(th) * x.x + std::cos(th) * x.y, x.z}; };
  const auto turned = push_forward(a, rot);
  double bound = 0.0;
  for (const auto& p : a.atoms) bound = std::max(bound, norm(rot(p) - p));
  const double d = winf_distance(a, turned).distance;
  CHECK(d <= bound + 1e-15);
  CHECK(d == brute_bottleneck(a.atoms, turned.atoms));
}

TEST_CASE("lemma property checks") {
  std::mt19937_64 rng(31);
  const auto a = cloud(random_cloud(rng, 8));
  const auto same = check_lemma_properties(a, a, 0.1);
  CHECK(same.all_pass());
  REQUIRE(same.distance);
  CHECK(*same.distance == 0.0);

  // two separated clusters, one shuffled internally
  std::vector<Vec3> pts;
  for (int i = 0; i < 4; ++i) pts.push_back({0.1 * i, 0.0, 0.0});
  for (int i = 0; i < 4; ++i) pts.push_back({10.0 + 0.1 * i, 0.05 * i, 0.0});
  std::vector<Vec3> shuffled = pts;
  shuffled[4] = {10.02, 0.01, 0.0};
  shuffled[5] = {10.15, 0.0, 0.0};
  const auto rep = check_lemma_properties(cloud(pts), cloud(shuffled), 1.0);
  CHECK(rep.all_pass());
  CHECK(rep.checks[1].applicable);

  for (int trial = 0; trial < 30; ++trial) {
    const auto x = random_cloud(rng, 6);
    const auto y = random_cloud(rng, 6);
    const auto r = check_lemma_properties(cloud(x), cloud(y), 0.5);
    CHECK(r.all_pass());
    CHECK(r.checks[2].rhs - r.checks[2].lhs >= 0.0);
    CHECK(*r.distance == brute_bottleneck(x, y));
  }
  const auto inc = check_lemma_properties(cloud({{0, 0, 0}}), cloud({{0, 0, 0}, {1, 1, 1}}), 1.0);
  CHECK_FALSE(inc.distance);
  CHECK_FALSE(inc.checks[0].applicable);
}

TEST_CASE("rearrangement to a bounded density") {
  const Grid3 g({0, 0, 0}, 1.0 / 32, 32, 32, 32);
  const double eps = 2.0 * std::sqrt(3.0) * 8 * g.h;
  // smooth field below the ladder bottom: unchanged
  DensityField flat(g);
  flat.modify([](std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.5); });
  const auto same = rearrange_to_bounded(flat, eps, 0);
  CHECK(same.sigma.values() == flat.values());
  CHECK(same.R == 2.0);

  // spike of mass 0.9 on a background of mass 0.1; V = (1/4)^3, V/4 ~ 0.0039
  DensityField spiky(g);
  spiky.modify([&](std::vector<double>& v) {
    std::fill(v.begin(), v.end(), 0.1);
    v[g.index(13, 17, 5)] += 0.9 / g.cell_volume();
  });
  const auto r = rearrange_to_bounded(spiky, eps, 256);
  CHECK(r.audit.pass);
  CHECK(r.sigma.max() <= 2.0 * r.R);
  CHECK(std::abs(mass(r.sigma) - mass(spiky)) <= 1e-12 * mass(spiky));
  CHECK(r.audit.max_cube_mass_error <= 1e-12);
  REQUIRE(r.audit.atomized_distance);
  CHECK(*r.audit.atomized_distance <= eps);

  CHECK_THROWS_AS(rearrange_to_bounded(spiky, g.h, 0), ConfigurationError);
}

TEST_CASE("cube-ordered atomizations of equal cube masses stay within a diagonal") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Grid3 g({0, 0, 0}, 1.0, 8, 8, 8);
  DensityField a(g);
  a.modify([&](std::vector<double>& v) { for (auto& x : v) x = u(rng); });
  // permute values inside each 4-cell cube
  DensityField b = a;
  b.modify([&](std::vector<double>& v) {
    for (std::size_t c = 0; c < 8; ++c) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const auto [x, y, z] = g.coords(i);
        if (x / 4 + 2 * (y / 4 + 2 * (z / 4)) == c) idx.push_back(i);
      }
      std::vector<double> vals;
      for (auto i : idx) vals.push_back(v[i]);
      std::shuffle(vals.begin(), vals.end(), rng);
      for (std::size_t t = 0; t < idx.size(); ++t) v[idx[t]] = vals[t];
    }
  });
  const auto pa = cube_ordered_atomization(a, 4, 100);
  const auto pb = cube_ordered_atomization(b, 4, 100);
  CHECK(pa.size() == 100);
  double worst = 0.0;
  for (std::size_t i = 0; i < 100; ++i) worst = std::max(worst, norm(pa.atoms[i] - pb.atoms[i]));
  CHECK(worst <= std::sqrt(3.0) * 3.0 + 1e-12);
  CHECK(norm(pa.center_of_mass() - center_of_mass(a)) <= 1e-9);
}

TEST_CASE("perturbation cone") {
  const Grid3 g = Grid3::centered({}, 0.25, 16, 16, 16);
  DensityField rho(g);
  rho.modify([&](std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::max(0.0, 5.0 - 3.0 * norm(g.center(i)));
  });
  const PerturbationCone cone{2.0, rho};
  CHECK(cone_membership(cone, ScalarField(g)).member);
  ScalarField ind(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    ind[i] = (rho[i] > 0.5 && rho[i] < 2.0 && norm(g.center(i)) <= 2.0) ? 1.0 : 0.0;
  CHECK(cone_membership(cone, ind).member);

  ScalarField bad(g);
  const std::size_t far = g.index(0, 0, 0);  // rho = 0 there
  bad[far] = -1.0;
  const auto m = cone_membership(cone, bad);
  CHECK_FALSE(m.member);
  REQUIRE(m.first_violation);
  CHECK(m.first_violation->index == far);

  ScalarField core(g);
  core[g.index(8, 8, 8)] = 0.1;  // rho > R at the center
  CHECK_FALSE(cone_membership(cone, core).member);
  CHECK_THROWS_AS(cone_membership(cone, ScalarField(Grid3::centered({}, 0.5, 4, 4, 4))), DomainError);
}
