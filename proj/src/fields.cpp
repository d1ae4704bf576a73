#include "binaria/fields.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace binaria {

double mass(const DensityField& rho) {
  double s = 0.0;
  for (double v : rho.values()) s += v;
  return s * rho.grid().cell_volume();
}

Vec3 center_of_mass(const DensityField& rho) {
  const Grid3& g = rho.grid();
  double m = 0.0;
  Vec3 first;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] == 0.0) continue;
    m += rho[i];
    first += g.center(i) * rho[i];
  }
  if (!(m > 0.0)) throw DegenerateInputError("center of mass of a zero-mass density");
  return first * (1.0 / m);
}

double moment_of_inertia(const DensityField& rho, const Vec3& center) {
  const Grid3& g = rho.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i)
    if (rho[i] != 0.0) s += rho[i] * axial_r2(g.center(i) - center);
  return s * g.cell_volume();
}

double moment_of_inertia(const DensityField& rho) {
  if (!(mass(rho) > 0.0)) return 0.0;
  return moment_of_inertia(rho, center_of_mass(rho));
}

MoiExpansion moi_expansion(const DensityField& rho, const DensityField& sigma) {
  if (!(rho.grid() == sigma.grid())) throw DomainError("moi_expansion: fields live on different grids");
  const double m1 = mass(rho);
  const double m2 = mass(sigma);
  if (m1 + m2 == 0.0) return {0.0, 0.0};
  std::vector<double> sum(rho.size());
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = rho[i] + sigma[i];
  const DensityField total(rho.grid(), std::move(sum));
  MoiExpansion r;
  r.lhs = moment_of_inertia(total);
  r.rhs = moment_of_inertia(rho) + moment_of_inertia(sigma);
  if (m1 > 0.0 && m2 > 0.0)
    r.rhs += m1 * m2 / (m1 + m2) * axial_r2(center_of_mass(rho) - center_of_mass(sigma));
  return r;
}

double internal_energy(const EquationOfState& eos, const DensityField& rho) {
  double s = 0.0;
  for (double v : rho.values())
    if (v != 0.0) s += eos.energy_density(v);
  return s * rho.grid().cell_volume();
}

double interaction_energy(const ScalarField& sigma, const ScalarField& rho, const PotentialSolver& solver) {
  if (!(sigma.grid == rho.grid)) throw DomainError("interaction_energy: fields live on different grids");
  const ScalarField v = solver.potential(sigma);
  double s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) s += v[i] * rho[i];
  return s * rho.grid.cell_volume();
}

double interaction_energy(const ScalarField& sigma, const ScalarField& rho) {
  return interaction_energy(sigma, rho, PotentialSolver(rho.grid));
}

RotationalEnergy rotational_energy(const DensityField& rho, double J) {
  const double I = moment_of_inertia(rho);
  if (!(I > 0.0)) throw DegenerateInputError("rotational energy needs a positive moment of inertia");
  return {J * J / (2.0 * I), J / I};
}

VectorField RigidRotation::sample(const Grid3& grid) const {
  VectorField v(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) v.values[i] = velocity(grid.center(i));
  return v;
}

double kinetic_energy(const DensityField& rho, const VectorField& v) {
  if (!(rho.grid() == v.grid)) throw DomainError("kinetic_energy: velocity sampled on a different grid");
  double s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i)
    if (rho[i] != 0.0) s += dot(v.values[i], v.values[i]) * rho[i];
  return 0.5 * s * rho.grid().cell_volume();
}

double angular_momentum_z(const DensityField& rho, const VectorField& v) {
  if (!(rho.grid() == v.grid)) throw DomainError("angular_momentum_z: velocity sampled on a different grid");
  const Vec3 xbar = center_of_mass(rho);
  const Grid3& g = rho.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i)
    if (rho[i] != 0.0) s += cross(g.center(i) - xbar, v.values[i]).z * rho[i];
  return s * g.cell_volume();
}

EnergyLedger total_energy(const EquationOfState& eos, const DensityField& rho, double J, const ScalarField& pot) {
  if (!(pot.grid == rho.grid())) throw DomainError("total_energy: potential sampled on a different grid");
  EnergyLedger L;
  L.J = J;
  L.mass = mass(rho);
  if (!(L.mass > 0.0)) throw DegenerateInputError("total energy of a zero-mass density");
  L.center_of_mass = center_of_mass(rho);
  L.moment_of_inertia = moment_of_inertia(rho, L.center_of_mass);
  L.internal = internal_energy(eos, rho);
  double g = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) g += pot[i] * rho[i];
  L.interaction = g * rho.grid().cell_volume();
  if (J != 0.0) {
    if (!(L.moment_of_inertia > 0.0)) throw DegenerateInputError("rotating density with zero moment of inertia");
    L.rotational = J * J / (2.0 * L.moment_of_inertia);
    L.omega = J / L.moment_of_inertia;
  }
  L.total = L.internal - L.interaction / 2.0 + L.rotational;
  return L;
}

EnergyLedger total_energy(const EquationOfState& eos, const DensityField& rho, double J) {
  return total_energy(eos, rho, J, PotentialSolver(rho.grid()).potential(rho.field()));
}

DensityField rotate_field(const DensityField& rho, double theta) {
  const Grid3& g = rho.grid();
  std::vector<double> out(rho.size(), 0.0);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  auto sample = [&](long i, long j, long k) -> double {
    if (i < 0 || j < 0 || k < 0 || i >= long(g.nx) || j >= long(g.ny) || k >= long(g.nz)) return 0.0;
    return rho[g.index(std::size_t(i), std::size_t(j), std::size_t(k))];
  };
  for (std::size_t idx = 0; idx < rho.size(); ++idx) {
    const Vec3 x = g.center(idx);
    // R_{-theta} x
    const Vec3 p{c * x.x + s * x.y, -s * x.x + c * x.y, x.z};
    // Snap near-integer coordinates so exact lattice maps copy values.
    auto lattice = [&](double q, double o) {
      const double t = (q - o) / g.h - 0.5;
      return std::abs(t - std::round(t)) < 1e-9 ? std::round(t) : t;
    };
    const double u = lattice(p.x, g.origin.x);
    const double v = lattice(p.y, g.origin.y);
    const double w = lattice(p.z, g.origin.z);
    const double fu = std::floor(u);
    const double fv = std::floor(v);
    const double fw = std::floor(w);
    const long i0 = long(fu);
    const long j0 = long(fv);
    const long k0 = long(fw);
    const double tu = u - fu;
    const double tv = v - fv;
    const double tw = w - fw;
    double acc = 0.0;
    for (int dk = 0; dk < 2; ++dk)
      for (int dj = 0; dj < 2; ++dj)
        for (int di = 0; di < 2; ++di) {
          const double wt = (di ? tu : 1 - tu) * (dj ? tv : 1 - tv) * (dk ? tw : 1 - tw);
          if (wt != 0.0) acc += wt * sample(i0 + di, j0 + dj, k0 + dk);
        }
    out[idx] = std::max(acc, 0.0);
  }
  return DensityField(g, std::move(out));
}

namespace {

struct MassItem {
  Vec3 x;
  double m;
};

void bisect_atoms(std::vector<MassItem> items, std::size_t n, double weight, std::vector<Vec3>& atoms,
                  double& worst) {
  double total = 0.0;
  for (const auto& it : items) total += it.m;
  if (n == 1) {
    Vec3 c;
    for (const auto& it : items) c += it.x * it.m;
    atoms.push_back(c * (1.0 / total));
    worst = std::max(worst, std::abs(total - weight) / weight);
    return;
  }
  Vec3 lo = items.front().x;
  Vec3 hi = lo;
  for (const auto& it : items)
    for (std::size_t a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], it.x[a]);
      hi[a] = std::max(hi[a], it.x[a]);
    }
  std::size_t axis = 0;
  for (std::size_t a = 1; a < 3; ++a)
    if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
  std::stable_sort(items.begin(), items.end(), [axis](const MassItem& p, const MassItem& q) {
    if (p.x[axis] != q.x[axis]) return p.x[axis] < q.x[axis];
    for (std::size_t a = 0; a < 3; ++a)
      if (p.x[a] != q.x[a]) return p.x[a] < q.x[a];
    return false;
  });

  const std::size_t n_left = n / 2;
  const double target = total * double(n_left) / double(n);
  std::vector<MassItem> left;
  std::vector<MassItem> right;
  double acc = 0.0;
  std::size_t i = 0;
  for (; i < items.size(); ++i) {
    if (acc + items[i].m <= target) {
      acc += items[i].m;
      left.push_back(items[i]);
      continue;
    }
    const double part = target - acc;
    if (part > 0.0) left.push_back({items[i].x, part});
    if (items[i].m - part > 0.0) right.push_back({items[i].x, items[i].m - part});
    ++i;
    break;
  }
  for (; i < items.size(); ++i) right.push_back(items[i]);
  bisect_atoms(std::move(left), n_left, weight, atoms, worst);
  bisect_atoms(std::move(right), n - n_left, weight, atoms, worst);
}

}  // namespace

Discretization discretize(const DensityField& rho, std::size_t n_atoms, double slack_tolerance) {
  if (n_atoms == 0) throw PreconditionError("discretize: need at least one atom");
  const double m = mass(rho);
  if (!(m > 0.0)) throw DegenerateInputError("discretize: zero-mass density");
  const Grid3& g = rho.grid();
  std::vector<MassItem> items;
  for (std::size_t i = 0; i < rho.size(); ++i)
    if (rho[i] > 0.0) items.push_back({g.center(i), rho[i] * g.cell_volume()});
  if (n_atoms > items.size())
    throw QuantizationError("discretize: " + std::to_string(n_atoms) + " atoms exceed the " +
                            std::to_string(items.size()) + " occupied cells");
  Discretization d;
  std::vector<Vec3> atoms;
  atoms.reserve(n_atoms);
  bisect_atoms(std::move(items), n_atoms, m / double(n_atoms), atoms, d.quantization_slack);
  if (d.quantization_slack > slack_tolerance)
    throw QuantizationError("discretize: atom mass slack " + std::to_string(d.quantization_slack) +
                            " exceeds tolerance");
  d.measure = DiscreteMeasure(std::move(atoms), m);
  return d;
}

std::vector<int> support_components(const DensityField& rho, int* count) {
  const Grid3& g = rho.grid();
  std::vector<int> label(rho.size(), 0);
  int next = 0;
  std::deque<std::size_t> queue;
  for (std::size_t s = 0; s < rho.size(); ++s) {
    if (rho[s] <= 0.0 || label[s] != 0) continue;
    label[s] = ++next;
    queue.push_back(s);
    while (!queue.empty()) {
      const std::size_t c = queue.front();
      queue.pop_front();
      const auto [i, j, k] = g.coords(c);
      const std::array<std::array<long, 3>, 6> nb{{{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}}};
      for (const auto& d : nb) {
        const long a = long(i) + d[0];
        const long b = long(j) + d[1];
        const long e = long(k) + d[2];
        if (a < 0 || b < 0 || e < 0 || a >= long(g.nx) || b >= long(g.ny) || e >= long(g.nz)) continue;
        const std::size_t n = g.index(std::size_t(a), std::size_t(b), std::size_t(e));
        if (rho[n] > 0.0 && label[n] == 0) {
          label[n] = next;
          queue.push_back(n);
        }
      }
    }
  }
  if (count) *count = next;
  return label;
}

}  // namespace binaria
