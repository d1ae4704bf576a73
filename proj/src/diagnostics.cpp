#include "binaria/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <limits>

#include "binaria/solver.hpp"
#include "binaria/wasserstein.hpp"

namespace binaria {

namespace {

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + long(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + long(mid));
  return 0.5 * (lo + hi);
}

struct Terms {
  double U = 0.0;
  double G = 0.0;
  double I = 0.0;
  double T = 0.0;
};

Terms energy_terms(const EquationOfState& eos, const DensityField& rho, double J, const PotentialSolver& solver) {
  Terms t;
  t.U = internal_energy(eos, rho);
  const ScalarField V = solver.potential(rho.field());
  double g = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) g += V[i] * rho[i];
  t.G = g * rho.grid().cell_volume();
  t.I = moment_of_inertia(rho);
  if (J != 0.0) {
    if (!(t.I > 0.0)) throw DegenerateInputError("derivative check: rotating density with zero moment of inertia");
    t.T = J * J / (2.0 * t.I);
  }
  return t;
}

bool strictly_decreasing(const std::vector<double>& g) {
  for (std::size_t i = 1; i < g.size(); ++i)
    if (!(g[i] < g[i - 1] || g[i] == 0.0)) return false;
  return true;
}

}  // namespace

ScalarField effective_potential(const DensityField& rho, double J, const ScalarField& V) {
  ScalarField W = V;
  if (J == 0.0) return W;
  const Vec3 xbar = center_of_mass(rho);
  const double I = moment_of_inertia(rho, xbar);
  if (!(I > 0.0)) throw DegenerateInputError("effective potential: zero moment of inertia with J > 0");
  const double c = J * J / (2.0 * I * I);
  const Grid3& g = rho.grid();
  for (std::size_t i = 0; i < W.size(); ++i) W[i] += c * axial_r2(g.center(i) - xbar);
  return W;
}

ResidualReport el_residual(const EquationOfState& eos, const DensityField& rho, double J,
                           const std::vector<Ball>& components, const std::optional<std::vector<double>>& lambda,
                           double tol_el, double delta) {
  const Grid3& g = rho.grid();
  if (lambda && lambda->size() != components.size())
    throw PreconditionError("el_residual: one multiplier per component required");
  ResidualReport rep;
  rep.tol_el = tol_el;
  rep.delta = delta > 0.0 ? delta : 2.0 * g.h;
  const auto labels = ball_labels(g, components);
  const ScalarField W = effective_potential(rho, J, PotentialSolver(g).potential(rho.field()));

  const std::size_t nc = components.size();
  std::vector<double> peak(nc, 0.0);
  for (std::size_t i = 0; i < rho.size(); ++i)
    if (labels[i] >= 0) peak[std::size_t(labels[i])] = std::max(peak[std::size_t(labels[i])], rho[i]);
  for (std::size_t b = 0; b < nc; ++b)
    if (!(peak[b] > 0.0)) throw DegenerateInputError("el_residual: component " + std::to_string(b) + " is empty");

  if (lambda) {
    rep.lambda = *lambda;
  } else {
    rep.lambda_refit = true;
    std::vector<std::vector<double>> samples(nc);
    for (std::size_t i = 0; i < rho.size(); ++i) {
      if (labels[i] < 0) continue;
      const auto b = std::size_t(labels[i]);
      if (rho[i] > 0.01 * peak[b]) samples[b].push_back(eos.enthalpy(rho[i]) - W[i]);
    }
    for (auto& s : samples) rep.lambda.push_back(median(std::move(s)));
  }

  double l2 = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] <= 0.0 || labels[i] < 0) continue;
    const double y = std::max(W[i] + rep.lambda[std::size_t(labels[i])], 0.0);
    const double d = std::abs(eos.enthalpy(rho[i]) - y);
    rep.el_sup = std::max(rep.el_sup, d);
    l2 += d * d;
  }
  rep.el_l2 = std::sqrt(l2 * g.cell_volume());

  // empty cells within delta of a component's support
  const long reach = long(std::floor(rep.delta / g.h + 1e-9));
  std::vector<std::array<long, 3>> offsets;
  for (long c = -reach; c <= reach; ++c)
    for (long b = -reach; b <= reach; ++b)
      for (long a = -reach; a <= reach; ++a)
        if ((a || b || c) && double(a * a + b * b + c * c) * g.h * g.h <= rep.delta * rep.delta * (1 + 1e-12))
          offsets.push_back({a, b, c});
  std::vector<int> owner(rho.size(), -1);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] <= 0.0 || labels[i] < 0) continue;
    const auto [x, y, z] = g.coords(i);
    for (const auto& o : offsets) {
      const long a = long(x) + o[0];
      const long b = long(y) + o[1];
      const long c = long(z) + o[2];
      if (a < 0 || b < 0 || c < 0 || a >= long(g.nx) || b >= long(g.ny) || c >= long(g.nz)) continue;
      const std::size_t n = g.index(std::size_t(a), std::size_t(b), std::size_t(c));
      if (rho[n] == 0.0 && owner[n] < 0) owner[n] = labels[i];
    }
  }
  for (std::size_t i = 0; i < rho.size(); ++i)
    if (owner[i] >= 0)
      rep.el_sup_neighbourhood = std::max(rep.el_sup_neighbourhood, std::max(W[i] + rep.lambda[std::size_t(owner[i])], 0.0));

  rep.support_margin = support_margin(rho, components);
  rep.pass = rep.el_sup <= tol_el && rep.el_sup_neighbourhood <= tol_el;
  return rep;
}

EpResidual ep_residual(const EquationOfState& eos, const DensityField& rho, double J) {
  const Grid3& g = rho.grid();
  EpResidual r;
  r.defect = VectorField(g);
  const double m = mass(rho);
  if (!(m > 0.0)) return r;
  const Vec3 xbar = center_of_mass(rho);
  const double I = moment_of_inertia(rho, xbar);
  if (J != 0.0) {
    if (!(I > 0.0)) throw DegenerateInputError("ep_residual: zero moment of inertia with J > 0");
    r.omega = J / I;
  }
  const double w2 = r.omega * r.omega;
  const VectorField gradV = PotentialSolver(g).gradient(rho.field());
  std::vector<double> P(rho.size());
  for (std::size_t i = 0; i < P.size(); ++i) P[i] = eos.pressure(rho[i]);
  const std::size_t sx = 1;
  const std::size_t sy = g.nx;
  const std::size_t sz = g.nx * g.ny;
  const double inv2h = 1.0 / (2.0 * g.h);
  for (std::size_t k = 1; k + 1 < g.nz; ++k)
    for (std::size_t j = 1; j + 1 < g.ny; ++j)
      for (std::size_t i = 1; i + 1 < g.nx; ++i) {
        const std::size_t c = g.index(i, j, k);
        const Vec3 gradP{(P[c + sx] - P[c - sx]) * inv2h, (P[c + sy] - P[c - sy]) * inv2h,
                         (P[c + sz] - P[c - sz]) * inv2h};
        const Vec3 d = g.center(c) - xbar;
        const Vec3 planar{d.x, d.y, 0.0};
        const Vec3 defect = planar * (-w2 * rho[c]) + gradP - gradV.values[c] * rho[c];
        r.defect.values[c] = defect;
        const double n = norm(defect);
        r.ep_sup = std::max(r.ep_sup, n);
        ++r.interior_cells;
        const bool empty_stencil = rho[c] == 0.0 && rho[c + sx] == 0.0 && rho[c - sx] == 0.0 &&
                                   rho[c + sy] == 0.0 && rho[c - sy] == 0.0 && rho[c + sz] == 0.0 &&
                                   rho[c - sz] == 0.0;
        if (empty_stencil) r.zero_cell_sup = std::max(r.zero_cell_sup, n);
      }
  return r;
}

ScalarField variational_derivative_field(const EquationOfState& eos, const DensityField& rho, double J) {
  if (!(mass(rho) > 0.0)) throw DegenerateInputError("variational derivative of a zero-mass density");
  const ScalarField W = effective_potential(rho, J, PotentialSolver(rho.grid()).potential(rho.field()));
  ScalarField d(rho.grid());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = eos.enthalpy(rho[i]) - W[i];
  return d;
}

DerivativeCheck directional_derivative_check(const EquationOfState& eos, const DensityField& rho, double J,
                                             const ScalarField& sigma, const std::vector<double>& t_ladder,
                                             double cone_R) {
  const Grid3& g = rho.grid();
  if (!(sigma.grid == g)) throw PreconditionError("derivative check: sigma lives on a different grid");
  const ConeMembership cm = cone_membership(PerturbationCone{cone_R, rho}, sigma);
  if (!cm.member)
    throw PreconditionError("derivative check: direction outside P_R(rho): " + cm.first_violation->rule +
                            " at cell " + std::to_string(cm.first_violation->index));
  for (std::size_t i = 0; i < t_ladder.size(); ++i)
    if (!(t_ladder[i] > 0.0) || (i > 0 && !(t_ladder[i] < t_ladder[i - 1])))
      throw PreconditionError("derivative check: t ladder must be positive and strictly decreasing");

  const double hv = g.cell_volume();
  const PotentialSolver solver(g);
  DerivativeCheck out;
  out.internal.name = "U";
  out.interaction.name = "-G/2";
  out.rotational.name = "T_J";

  const ScalarField V0 = solver.potential(rho.field());
  const Vec3 xbar = center_of_mass(rho);
  const double I0 = moment_of_inertia(rho, xbar);
  double dU = 0.0;
  double dG = 0.0;
  double dI = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (sigma[i] == 0.0) continue;
    out.sigma_integral += sigma[i];
    dU += eos.enthalpy(rho[i]) * sigma[i];
    dG -= V0[i] * sigma[i];
    dI += axial_r2(g.center(i) - xbar) * sigma[i];
  }
  out.sigma_integral *= hv;
  out.internal.analytic = dU * hv;
  out.interaction.analytic = dG * hv;
  out.rotational.analytic = J == 0.0 ? 0.0 : -J * J / (2.0 * I0 * I0) * dI * hv;
  out.analytic = out.internal.analytic + out.interaction.analytic + out.rotational.analytic;

  const Terms base = energy_terms(eos, rho, J, solver);
  for (double t : t_ladder) {
    std::vector<double> v(rho.values());
    bool negative = false;
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] += t * sigma[i];
      if (v[i] < 0.0) negative = true;
    }
    if (negative) {
      out.notes.push_back("t = " + std::to_string(t) + " dropped: rho + t sigma < 0");
      continue;
    }
    const DensityField moved(g, std::move(v));
    // Cell-wise difference of U avoids cancelling two large sums.
    double du = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (sigma[i] != 0.0) du += eos.energy_density(moved[i]) - eos.energy_density(rho[i]);
    const Terms tt = energy_terms(eos, moved, J, solver);
    const double su = du * hv / t;
    const double sg = -0.5 * (tt.G - base.G) / t;
    const double st = (tt.T - base.T) / t;
    out.t.push_back(t);
    out.internal.fd_slopes.push_back(su);
    out.interaction.fd_slopes.push_back(sg);
    out.rotational.fd_slopes.push_back(st);
    out.internal.gaps.push_back(std::abs(su - out.internal.analytic));
    out.interaction.gaps.push_back(std::abs(sg - out.interaction.analytic));
    out.rotational.gaps.push_back(std::abs(st - out.rotational.analytic));
    out.fd_slopes.push_back(su + sg + st);
    out.gaps.push_back(std::abs(su + sg + st - out.analytic));
  }
  out.gaps_decreasing = strictly_decreasing(out.gaps);
  out.internal.gaps_decreasing = strictly_decreasing(out.internal.gaps);
  out.interaction.gaps_decreasing = strictly_decreasing(out.interaction.gaps);
  out.rotational.gaps_decreasing = strictly_decreasing(out.rotational.gaps);
  return out;
}

MultiplierAudit multiplier_audit(const EquationOfState& eos, const DensityField& rho, double J,
                                 const std::vector<Ball>& components, const std::vector<double>& lambda,
                                 double tol_el) {
  if (lambda.size() != components.size()) throw PreconditionError("multiplier_audit: one multiplier per component");
  MultiplierAudit a;
  a.lambda = lambda;
  a.lambda_margin = 10.0 * tol_el;
  a.lambda_negative = true;
  for (std::size_t b = 0; b < lambda.size(); ++b)
    if (!(lambda[b] < -a.lambda_margin)) {
      a.lambda_negative = false;
      a.details.push_back("lambda_" + std::to_string(b) + " = " + std::to_string(lambda[b]) +
                          " is not below -" + std::to_string(a.lambda_margin));
    }

  const Grid3& g = rho.grid();
  const auto labels = ball_labels(g, components);
  const ScalarField d = variational_derivative_field(eos, rho, J);
  a.derivative_constant = true;
  for (std::size_t b = 0; b < components.size(); ++b) {
    double s = 0.0;
    double s2 = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < rho.size(); ++i)
      if (labels[i] == int(b) && rho[i] > 0.0) {
        s += d[i];
        s2 += d[i] * d[i];
        ++n;
      }
    const double mean = n ? s / double(n) : 0.0;
    const double spread = n ? std::sqrt(std::max(s2 / double(n) - mean * mean, 0.0)) : 0.0;
    a.derivative_spread.push_back(spread);
    if (n == 0) {
      a.derivative_constant = false;
      a.details.push_back("component " + std::to_string(b) + " is empty");
    } else if (!(spread <= tol_el)) {
      a.derivative_constant = false;
      a.details.push_back("E_J' spread " + std::to_string(spread) + " on component " + std::to_string(b) +
                          " exceeds tol_el");
    }
  }

  a.support_margin = support_margin(rho, components);
  if (!std::isfinite(a.support_margin)) a.support_margin = 0.0;
  a.support_interior = a.support_margin > 0.0;
  if (!a.support_interior) a.details.push_back("support touches the constraint boundary (margin 0)");

  const double peak = rho.max();
  if (peak > 0.0)
    for (std::size_t i = 0; i < rho.size(); ++i) {
      const auto [x, y, z] = g.coords(i);
      if (x + 1 < g.nx) a.max_adjacent_jump = std::max(a.max_adjacent_jump, std::abs(rho[i] - rho[i + 1]));
      if (y + 1 < g.ny) a.max_adjacent_jump = std::max(a.max_adjacent_jump, std::abs(rho[i] - rho[i + g.nx]));
      if (z + 1 < g.nz)
        a.max_adjacent_jump = std::max(a.max_adjacent_jump, std::abs(rho[i] - rho[i + g.nx * g.ny]));
    }
  if (peak > 0.0) a.max_adjacent_jump /= peak;
  a.pass = a.lambda_negative && a.derivative_constant && a.support_interior;
  return a;
}

MultiplierAudit multiplier_audit(const EquationOfState& eos, const EquilibriumSolution& s) {
  return multiplier_audit(eos, s.rho, s.problem.J, s.problem.domains, s.lambda, s.tol_el);
}

double LaneEmdenProfile::theta_at(double x) const {
  if (x <= 0.0) return 1.0;
  if (x >= xi1) return 0.0;
  const auto it = std::upper_bound(xi.begin(), xi.end(), x);
  const std::size_t i = std::min<std::size_t>(std::size_t(std::distance(xi.begin(), it)), xi.size() - 1) - 1;
  const double h = xi[i + 1] - xi[i];
  const double t = (x - xi[i]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * theta[i] + (t3 - 2 * t2 + t) * h * dtheta[i] + (-2 * t3 + 3 * t2) * theta[i + 1] +
         (t3 - t2) * h * dtheta[i + 1];
}

double LaneEmdenProfile::density(double r) const {
  if (r < 0.0 || r >= radius) return 0.0;
  return central_density * std::pow(std::max(theta_at(r / alpha), 0.0), n);
}

double LaneEmdenProfile::integrated_mass() const {
  // xi is uniform with an even number of intervals
  const std::size_t N = xi.size() - 1;
  const double h = xi[1] - xi[0];
  auto f = [&](std::size_t i) { return std::pow(std::max(theta[i], 0.0), n) * xi[i] * xi[i]; };
  double s = f(0) + f(N);
  for (std::size_t i = 1; i < N; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i);
  return 4.0 * M_PI * std::pow(alpha, 3) * central_density * s * h / 3.0;
}

LaneEmdenProfile lane_emden_reference(double gamma, double K, double total_mass) {
  namespace ode = boost::numeric::odeint;
  if (!(gamma > 4.0 / 3.0)) throw DomainError("Lane-Emden reference needs gamma > 4/3");
  if (!(K > 0.0) || !(total_mass > 0.0)) throw DomainError("Lane-Emden reference needs K > 0 and mass > 0");
  using State = std::array<double, 2>;
  const double n = 1.0 / (gamma - 1.0);
  auto rhs = [n](const State& s, State& ds, double x) {
    const double th = s[0];
    ds[0] = s[1];
    ds[1] = -std::copysign(std::pow(std::abs(th), n), th) - 2.0 * s[1] / x;
  };
  const double x0 = 1e-3;
  const State start{1.0 - x0 * x0 / 6.0 + n * std::pow(x0, 4) / 120.0, -x0 / 3.0 + n * std::pow(x0, 3) / 30.0};

  auto stepper = ode::make_dense_output(1e-14, 1e-14, ode::runge_kutta_dopri5<State>());
  // First pass: bracket and refine the first zero.
  stepper.initialize(start, x0, 1e-4);
  double xi1 = 0.0;
  for (int guard = 0;; ++guard) {
    if (guard > 1000000) throw NumericError("Lane-Emden integration found no zero of theta");
    const auto [a, b] = stepper.do_step(rhs);
    if (!std::isfinite(stepper.current_state()[0])) throw NumericError("Lane-Emden integration diverged");
    if (stepper.current_state()[0] <= 0.0) {
      double lo = a;
      double hi = b;
      State s;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        stepper.calc_state(mid, s);
        (s[0] > 0.0 ? lo : hi) = mid;
      }
      xi1 = 0.5 * (lo + hi);
      break;
    }
  }

  // Second pass: uniform samples on [0, xi1] for interpolation and Simpson.
  LaneEmdenProfile p;
  p.n = n;
  p.xi1 = xi1;
  const std::size_t N = 8000;
  const double dx = xi1 / double(N);
  p.xi.resize(N + 1);
  p.theta.resize(N + 1);
  p.dtheta.resize(N + 1);
  p.xi[0] = 0.0;
  p.theta[0] = 1.0;
  p.dtheta[0] = 0.0;
  stepper.initialize(start, x0, 1e-4);
  std::size_t next = 1;
  while (next <= N) {
    const auto [a, b] = stepper.do_step(rhs);
    (void)a;
    while (next <= N && double(next) * dx <= b) {
      const double x = next == N ? xi1 : double(next) * dx;
      State s;
      if (x < x0) {
        s = {1.0 - x * x / 6.0 + n * std::pow(x, 4) / 120.0, -x / 3.0 + n * std::pow(x, 3) / 30.0};
      } else {
        stepper.calc_state(x, s);
      }
      p.xi[next] = x;
      p.theta[next] = s[0];
      p.dtheta[next] = s[1];
      ++next;
    }
  }
  p.theta[N] = 0.0;
  p.dtheta1 = p.dtheta[N];

  // rho_c from M = 4 pi alpha^3 rho_c xi1^2 |theta'(xi1)|, alpha^2 = (n+1) K rho_c^(1/n - 1) / (4 pi)
  const double c = (n + 1.0) * K / (4.0 * M_PI);
  const double base = total_mass / (4.0 * M_PI * xi1 * xi1 * std::abs(p.dtheta1) * std::pow(c, 1.5));
  p.central_density = std::pow(base, 2.0 * n / (3.0 - n));
  p.alpha = std::sqrt(c * std::pow(p.central_density, 1.0 / n - 1.0));
  p.radius = p.alpha * xi1;
  p.mass = 4.0 * M_PI * std::pow(p.alpha, 3) * p.central_density * xi1 * xi1 * std::abs(p.dtheta1);
  return p;
}

LaneEmdenComparison lane_emden_comparison(const EquationOfState& eos, const DensityField& rho,
                                          std::size_t table_rows) {
  if (eos.kind() != EquationOfState::Kind::polytrope) throw DomainError("Lane-Emden comparison needs a polytrope");
  if (table_rows == 0) throw DomainError("Lane-Emden table needs at least one row");
  const Grid3& g = rho.grid();
  const double M = mass(rho);
  if (!(M > 0.0)) throw DegenerateInputError("Lane-Emden comparison of an empty field");
  const Vec3 c = center_of_mass(rho);

  LaneEmdenComparison out;
  out.reference = lane_emden_reference(eos.gamma(), eos.K(), M);
  const LaneEmdenProfile& le = out.reference;

  // <xi^2> of the dimensionless profile, Simpson on the uniform samples
  const std::size_t N = le.xi.size() - 1;
  double s2 = 0.0;
  double s4 = 0.0;
  for (std::size_t i = 0; i <= N; ++i) {
    const double w = (i == 0 || i == N) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double f = std::pow(std::max(le.theta[i], 0.0), le.n) * le.xi[i] * le.xi[i];
    s2 += w * f;
    s4 += w * f * le.xi[i] * le.xi[i];
  }
  double r2 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) r2 += rho[i] * dot(g.center(i) - c, g.center(i) - c);
  r2 *= g.cell_volume() / M;

  out.alpha_fit = std::sqrt(r2 / (s4 / s2));
  out.radius_fit = out.alpha_fit * le.xi1;
  out.central_density_fit =
      M / (4.0 * M_PI * std::pow(out.alpha_fit, 3) * le.xi1 * le.xi1 * std::abs(le.dtheta1));

  const double bin = 1.1 * std::max(out.radius_fit, le.radius) / double(table_rows);
  out.table.resize(table_rows);
  for (std::size_t k = 0; k < table_rows; ++k) out.table[k].r = (double(k) + 0.5) * bin;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = norm(g.center(i) - c);
    const double fitted = r < out.radius_fit
                              ? out.central_density_fit * std::pow(std::max(le.theta_at(r / out.alpha_fit), 0.0), le.n)
                              : 0.0;
    const double ref = le.density(r);
    out.sup_error_fitted = std::max(out.sup_error_fitted, std::abs(rho[i] - fitted) / out.central_density_fit);
    out.sup_error_reference = std::max(out.sup_error_reference, std::abs(rho[i] - ref) / le.central_density);
    const auto k = std::size_t(r / bin);
    if (k < table_rows) {
      auto& row = out.table[k];
      ++row.cells;
      row.density += rho[i];
      row.fitted += fitted;
      row.reference += ref;
    }
  }
  for (auto& row : out.table)
    if (row.cells > 0) {
      row.density /= double(row.cells);
      row.fitted /= double(row.cells);
      row.reference /= double(row.cells);
    }
  return out;
}

double mirror_asymmetry(const DensityField& rho) {
  const Grid3& g = rho.grid();
  const double peak = rho.max();
  if (!(peak > 0.0)) return 0.0;
  double worst = 0.0;
  for (std::size_t k = 0; k < g.nz; ++k)
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i)
        worst = std::max(worst, std::abs(rho[g.index(i, j, k)] - rho[g.index(g.nx - 1 - i, j, k)]));
  return worst / peak;
}

}  // namespace binaria
