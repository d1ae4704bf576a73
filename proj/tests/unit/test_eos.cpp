#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>

#include "binaria/common.hpp"
#include "binaria/eos.hpp"
#include "doctest.h"

using binaria::EquationOfState;

namespace {

// Independent oracle for A(s) = s int_0^s P(t) t^-2 dt by tanh-sinh quadrature
// directly on the defining integral.
double energy_density_oracle(const EquationOfState& eos, double s) {
  boost::math::quadrature::tanh_sinh<double> q;
  return s * q.integrate([&](double t) { return t < 1e-100 ? 0.0 : eos.pressure(t) / (t * t); }, 0.0, s);
}

EquationOfState tabulated_power_law(double exponent, double lo = 1e-7, double hi = 1e5, int n = 241) {
  std::vector<std::pair<double, double>> rows{{0.0, 0.0}};
  for (int i = 0; i < n; ++i) {
    const double r = lo * std::pow(hi / lo, double(i) / (n - 1));
    rows.emplace_back(r, std::pow(r, exponent));
  }
  return EquationOfState::tabulated(rows);
}

std::vector<double> log_ladder(double lo, double hi, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(lo * std::pow(hi / lo, double(i) / (n - 1)));
  return v;
}

}  // namespace

TEST_CASE("pressure closed form") {
  const auto p1 = EquationOfState::polytrope(1.0, 2.0);
  CHECK(p1.pressure(0.0) == 0.0);
  CHECK(p1.pressure(2.0) == doctest::Approx(4.0).epsilon(1e-15));
  const auto p2 = EquationOfState::polytrope(2.0, 5.0 / 3.0);
  CHECK(p2.pressure(8.0) == doctest::Approx(64.0).epsilon(1e-13));
  CHECK_THROWS_AS(p1.pressure(-1.0), binaria::DomainError);
}

TEST_CASE("tabulated pressure refuses extrapolation") {
  const auto t = tabulated_power_law(2.0);
  CHECK_THROWS_AS(t.pressure(2e5), binaria::RangeError);
  CHECK_THROWS_AS(t.pressure(-1e-3), binaria::DomainError);
  CHECK(t.pressure(3.0) == doctest::Approx(9.0).epsilon(1e-12));
  // below the first sample the head power law continues the table
  CHECK(t.pressure(1e-9) == doctest::Approx(1e-18).epsilon(1e-10));
}

TEST_CASE("construction rejects invalid laws") {
  CHECK_THROWS_AS(EquationOfState::polytrope(1.0, 4.0 / 3.0), binaria::DomainError);
  CHECK_THROWS_AS(EquationOfState::polytrope(0.0, 2.0), binaria::DomainError);
  CHECK_THROWS_AS(EquationOfState::tabulated({{0.0, 0.0}, {1.0, 1.0}, {1.0, 2.0}}), binaria::DomainError);
  CHECK_THROWS_AS(EquationOfState::tabulated({{1.0, 2.0}, {2.0, 1.0}}), binaria::DomainError);
  CHECK_THROWS_AS(EquationOfState::tabulated({{0.0, 1.0}, {1.0, 2.0}, {2.0, 3.0}}), binaria::DomainError);
  // P ~ rho near zero makes int P t^-2 diverge
  CHECK_THROWS_AS(EquationOfState::tabulated({{1.0, 1.0}, {2.0, 2.0}}), binaria::DomainError);
}

TEST_CASE("energy density against quadrature oracle") {
  const auto p = EquationOfState::polytrope(1.0, 2.0);
  CHECK(p.energy_density(0.0) == 0.0);
  CHECK(p.energy_density(2.0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(std::abs(energy_density_oracle(p, 2.0) - p.energy_density(2.0)) <= 1e-10);

  const auto t = tabulated_power_law(2.0);
  CHECK(std::abs(t.energy_density(2.0) - 4.0) <= 1e-8);
  const auto t53 = tabulated_power_law(5.0 / 3.0);
  for (double s : {1e-3, 0.7, 12.0, 900.0}) {
    const double oracle = energy_density_oracle(t53, s);
    CHECK(t53.energy_density(s) == doctest::Approx(oracle).epsilon(1e-9));
  }
}

TEST_CASE("enthalpy values and the A'(s)s - A(s) = P(s) identity") {
  const auto p = EquationOfState::polytrope(1.0, 2.0);
  CHECK(p.enthalpy(0.0) == 0.0);
  CHECK(tabulated_power_law(1.5).enthalpy(0.0) == 0.0);
  CHECK(p.enthalpy(3.0) == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(p.enthalpy(5.0) * 5.0 - p.energy_density(5.0) == doctest::Approx(25.0).epsilon(1e-14));

  const auto t = tabulated_power_law(1.8);
  for (double s : log_ladder(1e-6, 1e3, 60)) {
    CHECK(std::abs(p.enthalpy(s) * s - p.energy_density(s) - p.pressure(s)) <= 1e-12 * p.pressure(s));
    CHECK(std::abs(t.enthalpy(s) * s - t.energy_density(s) - t.pressure(s)) <= 1e-8 * t.pressure(s));
  }
}

TEST_CASE("enthalpy is strictly increasing and A is convex") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-6.0, 3.0);
  for (const auto& eos : {EquationOfState::polytrope(1.0, 2.0), EquationOfState::polytrope(0.3, 1.4),
                          tabulated_power_law(1.6)}) {
    for (int trial = 0; trial < 200; ++trial) {
      double a = std::pow(10.0, u(rng));
      double b = std::pow(10.0, u(rng));
      if (a > b) std::swap(a, b);
      if (a == b) continue;
      CHECK(eos.enthalpy(b) > eos.enthalpy(a));
      CHECK(eos.energy_density(b) >= eos.energy_density(a));
      const double mid = 0.5 * (a + b);
      CHECK(eos.energy_density(mid) <= 0.5 * (eos.energy_density(a) + eos.energy_density(b)) * (1 + 1e-12));
    }
  }
}

TEST_CASE("inverse enthalpy") {
  const auto p = EquationOfState::polytrope(1.0, 2.0);
  CHECK(p.inverse_enthalpy(0.0) == 0.0);
  CHECK(p.inverse_enthalpy(6.0) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK_THROWS_AS(p.inverse_enthalpy(-1.0), binaria::DomainError);

  for (const auto& eos : {p, EquationOfState::polytrope(2.0, 5.0 / 3.0), tabulated_power_law(2.0),
                          tabulated_power_law(1.45)}) {
    CHECK(eos.inverse_enthalpy(0.0) == 0.0);
    for (double s : log_ladder(1e-6, 1e3, 46)) {
      CHECK(std::abs(eos.inverse_enthalpy(eos.enthalpy(s)) - s) <= 1e-9 * s);
      const double y = eos.enthalpy(1e-6) + s * eos.enthalpy(1e4) / 1e3;
      CHECK(std::abs(eos.enthalpy(eos.inverse_enthalpy(y)) - y) <= 1e-10 * y);
    }
  }
}

TEST_CASE("inverse enthalpy bracket respects the density ceiling") {
  std::vector<std::pair<double, double>> rows;
  for (int i = 0; i < 50; ++i) {
    const double r = std::pow(10.0, -3.0 + 0.1 * i);
    rows.emplace_back(r, r * r);
  }
  const auto t = EquationOfState::tabulated(rows, 10.0);
  CHECK_NOTHROW(t.inverse_enthalpy(t.enthalpy(9.0)));
  CHECK_THROWS_AS(t.inverse_enthalpy(t.enthalpy(20.0)), binaria::RangeError);
}

TEST_CASE("derivative of P(phi(y)) is phi(y)") {
  const auto p = EquationOfState::polytrope(1.0, 2.0);
  const auto c = binaria::pressure_of_enthalpy_derivative_check(p, 4.0, 1e-4);
  CHECK(c.phi == doctest::Approx(2.0));
  CHECK(c.gap <= 1e-6);

  // right derivative at 0+ tends to phi(0) = 0
  double prev = 1.0;
  for (double h : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const auto r = binaria::pressure_of_enthalpy_right_derivative(p, 0.0, h);
    CHECK(r.fd_slope < prev);
    prev = r.fd_slope;
  }
  CHECK(prev <= 1e-4);

  const auto p2 = EquationOfState::polytrope(2.0, 5.0 / 3.0);
  const auto c2 = binaria::pressure_of_enthalpy_derivative_check(p2, p2.enthalpy(8.0), 1e-4);
  CHECK(std::abs(c2.fd_slope - 8.0) <= 1e-5);

  CHECK_THROWS_AS(binaria::pressure_of_enthalpy_derivative_check(p, 1.0, 2.0), binaria::PreconditionError);
}

TEST_CASE("finite-difference gap decays at second order") {
  const auto p = EquationOfState::polytrope(2.0, 5.0 / 3.0);
  for (double y : {0.5, 3.0, 40.0}) {
    const double g1 = binaria::pressure_of_enthalpy_derivative_check(p, y, 1e-2 * y).gap;
    const double g2 = binaria::pressure_of_enthalpy_derivative_check(p, y, 5e-3 * y).gap;
    CHECK(g1 / g2 == doctest::Approx(4.0).epsilon(0.05));
  }
}

TEST_CASE("assumption audit") {
  const auto r = binaria::audit_assumptions(EquationOfState::polytrope(1.0, 2.0));
  CHECK(r.f1_ok);
  CHECK(r.f2_ok);
  CHECK(r.f3_ok);
  CHECK(r.f4_ok);
  REQUIRE(r.f5_ratio_limsup_estimate);
  CHECK(*r.f5_ratio_limsup_estimate == doctest::Approx(1.0).epsilon(1e-12));

  const auto t32 = binaria::audit_assumptions(tabulated_power_law(1.5, 1e-7, 1e6));
  CHECK(t32.f1_ok);
  CHECK(t32.f2_ok);
  CHECK_FALSE(t32.f3_ok);
  // the direct ratio oracle: rho^(3/2) rho^(-4/3) = rho^(1/6) at the ladder top
  CHECK(t32.f3_ratio_at_top == doctest::Approx(std::pow(1e6, 1.0 / 6.0)).epsilon(1e-9));
  REQUIRE(t32.f5_ratio_limsup_estimate);
  CHECK(*t32.f5_ratio_limsup_estimate == doctest::Approx((1 - std::sqrt(0.5)) / std::sqrt(0.5)).epsilon(1e-8));

  const auto t2 = binaria::audit_assumptions(tabulated_power_law(2.0, 1e-7, 1e8));
  CHECK(t2.f3_ok);
  CHECK(t2.aprime_high_ratio > t2.aprime_low_ratio);
}

TEST_CASE("tabulated EOS from CSV") {
  const auto path = std::filesystem::temp_directory_path() / "binaria_eos_test.csv";
  {
    std::ofstream out(path);
    out << std::setprecision(17) << "density,pressure\n0,0\n";
    for (int i = 0; i < 80; ++i) {
      const double r = std::pow(10.0, -4.0 + 0.1 * i);
      out << r << "," << 3.0 * r * r << "\n";
    }
  }
  const auto t = EquationOfState::from_csv(path);
  CHECK(t.kind() == EquationOfState::Kind::tabulated);
  CHECK(t.pressure(0.5) == doctest::Approx(0.75).epsilon(1e-10));
  {
    std::ofstream out(path);
    out << "density,pressure\n1,1\n0.5,2\n";
  }
  CHECK_THROWS_AS(EquationOfState::from_csv(path), binaria::DomainError);
  std::filesystem::remove(path);
}
