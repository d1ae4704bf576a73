#include "binaria/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <random>

#include "binaria/fields.hpp"

namespace binaria {

namespace {

// Hopcroft-Karp on the bipartite graph {(i, j) : d(i, j) <= threshold}.
class ThresholdMatcher {
 public:
  explicit ThresholdMatcher(const std::vector<double>& dist, std::size_t n) : d_(dist), n_(n) {}

  bool perfect(double threshold, std::vector<std::size_t>* out) {
    const std::size_t none = n_;
    match_a_.assign(n_, none);
    match_b_.assign(n_, none);
    std::size_t matched = 0;
    while (bfs(threshold)) {
      for (std::size_t a = 0; a < n_; ++a)
        if (match_a_[a] == none && dfs(a, threshold)) ++matched;
    }
    if (matched != n_) return false;
    if (out) *out = match_a_;
    return true;
  }

 private:
  double cost(std::size_t a, std::size_t b) const { return d_[a * n_ + b]; }

  bool bfs(double t) {
    const std::size_t none = n_;
    const auto inf = std::numeric_limits<std::size_t>::max();
    layer_.assign(n_, inf);
    std::queue<std::size_t> q;
    for (std::size_t a = 0; a < n_; ++a)
      if (match_a_[a] == none) {
        layer_[a] = 0;
        q.push(a);
      }
    bool found = false;
    while (!q.empty()) {
      const std::size_t a = q.front();
      q.pop();
      for (std::size_t b = 0; b < n_; ++b) {
        if (cost(a, b) > t) continue;
        const std::size_t next = match_b_[b];
        if (next == none) {
          found = true;
        } else if (layer_[next] == inf) {
          layer_[next] = layer_[a] + 1;
          q.push(next);
        }
      }
    }
    return found;
  }

  bool dfs(std::size_t a, double t) {
    const std::size_t none = n_;
    for (std::size_t b = 0; b < n_; ++b) {
      if (cost(a, b) > t) continue;
      const std::size_t next = match_b_[b];
      if (next == none || (layer_[next] == layer_[a] + 1 && dfs(next, t))) {
        match_a_[a] = b;
        match_b_[b] = a;
        return true;
      }
    }
    layer_[a] = std::numeric_limits<std::size_t>::max();
    return false;
  }

  const std::vector<double>& d_;
  std::size_t n_;
  std::vector<std::size_t> match_a_;
  std::vector<std::size_t> match_b_;
  std::vector<std::size_t> layer_;
};

void require_comparable(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (a.size() != b.size())
    throw IncomparableMeasuresError("W-infinity needs equal atom counts (" + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
  if (std::abs(a.total_mass - b.total_mass) > 1e-12 * std::max(a.total_mass, b.total_mass))
    throw IncomparableMeasuresError("W-infinity needs equal total masses");
}

// Atoms of a not matched by an identical atom of b (multiset difference).
std::vector<Vec3> multiset_difference(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  auto less = [](const Vec3& p, const Vec3& q) {
    if (p.x != q.x) return p.x < q.x;
    if (p.y != q.y) return p.y < q.y;
    return p.z < q.z;
  };
  std::vector<Vec3> sa = a;
  std::vector<Vec3> sb = b;
  std::sort(sa.begin(), sa.end(), less);
  std::sort(sb.begin(), sb.end(), less);
  std::vector<Vec3> out;
  std::set_difference(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(out), less);
  return out;
}

}  // namespace

BottleneckResult winf_distance(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  require_comparable(a, b);
  const std::size_t n = a.size();
  std::vector<double> dist(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) dist[i * n + j] = norm(a.atoms[i] - b.atoms[j]);
  std::vector<double> levels = dist;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  ThresholdMatcher matcher(dist, n);
  // Smallest feasible level; the largest level is always feasible.
  std::size_t lo = 0;
  std::size_t hi = levels.size() - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (matcher.perfect(levels[mid], nullptr))
      hi = mid;
    else
      lo = mid + 1;
  }
  BottleneckResult r;
  r.atoms = n;
  r.distance = levels[lo];
  matcher.perfect(r.distance, &r.matching);
  for (std::size_t i = 0; i < n; ++i) r.certificate = std::max(r.certificate, dist[i * n + r.matching[i]]);
  return r;
}

DiscreteMeasure push_forward(const DiscreteMeasure& a, const std::function<Vec3(const Vec3&)>& f) {
  std::vector<Vec3> out;
  out.reserve(a.size());
  for (const auto& p : a.atoms) out.push_back(f(p));
  return DiscreteMeasure(std::move(out), a.total_mass);
}

bool LemmaPropertyReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const PropertyCheck& c) { return c.pass; });
}

LemmaPropertyReport check_lemma_properties(const DiscreteMeasure& a, const DiscreteMeasure& b, double delta) {
  LemmaPropertyReport rep;
  bool comparable = true;
  try {
    require_comparable(a, b);
  } catch (const IncomparableMeasuresError&) {
    comparable = false;
  }
  double W = 0.0;
  if (comparable) {
    W = winf_distance(a, b).distance;
    rep.distance = W;
  }

  PropertyCheck diam;
  diam.name = "(i) W <= diam spt(a - b)";
  if (comparable) {
    std::vector<Vec3> sym = multiset_difference(a.atoms, b.atoms);
    const std::vector<Vec3> other = multiset_difference(b.atoms, a.atoms);
    sym.insert(sym.end(), other.begin(), other.end());
    double d = 0.0;
    for (std::size_t i = 0; i < sym.size(); ++i)
      for (std::size_t j = i + 1; j < sym.size(); ++j) d = std::max(d, norm(sym[i] - sym[j]));
    diam.lhs = W;
    diam.rhs = d;
    diam.pass = W <= d;
  } else {
    diam.applicable = false;
    diam.detail = "atom counts or masses differ";
  }
  rep.checks.push_back(diam);

  PropertyCheck clusters;
  clusters.name = "(ii) equal a/b mass per delta-cluster";
  clusters.rhs = delta;
  clusters.lhs = W;
  if (!comparable || !(W < delta)) {
    clusters.applicable = false;
    clusters.detail = comparable ? "W >= delta" : "atom counts or masses differ";
  } else {
    // single linkage of a at distance < 2 delta
    const std::size_t n = a.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
      return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (norm(a.atoms[i] - a.atoms[j]) < 2.0 * delta) parent[find(i)] = find(j);
    std::map<std::size_t, double> amass;
    std::map<std::size_t, double> bmass;
    for (std::size_t i = 0; i < n; ++i) amass[find(i)] += a.weight();
    double stray = 0.0;
    for (const auto& p : b.atoms) {
      bool placed = false;
      for (std::size_t i = 0; i < n && !placed; ++i)
        if (norm(p - a.atoms[i]) < delta) {
          bmass[find(i)] += b.weight();
          placed = true;
        }
      if (!placed) stray += b.weight();
    }
    double worst = stray;
    for (const auto& [root, m] : amass) worst = std::max(worst, std::abs(m - bmass[root]));
    clusters.pass = worst <= 1e-12 * a.total_mass;
    clusters.detail = std::to_string(amass.size()) + " clusters, worst mass gap " + std::to_string(worst);
  }
  rep.checks.push_back(clusters);

  PropertyCheck com;
  com.name = "(iv) |xbar(a) - xbar(b)| <= W";
  if (comparable) {
    com.lhs = norm(a.center_of_mass() - b.center_of_mass());
    com.rhs = W;
    // centroids are averages of matched pairs; allow for summation round-off
    com.pass = com.lhs <= W + 1e-12 * std::max(1.0, W);
  } else {
    com.applicable = false;
    com.detail = "atom counts or masses differ";
  }
  rep.checks.push_back(com);
  return rep;
}

DiscreteMeasure cube_ordered_atomization(const DensityField& rho, std::size_t cube_cells, std::size_t n) {
  if (n == 0) throw PreconditionError("atomization needs at least one atom");
  if (cube_cells == 0) throw PreconditionError("atomization cube must hold at least one cell");
  const Grid3& g = rho.grid();
  const double total = mass(rho);
  if (!(total > 0.0)) throw DegenerateInputError("atomization of a zero-mass density");
  const std::size_t cx = (g.nx + cube_cells - 1) / cube_cells;
  const std::size_t cy = (g.ny + cube_cells - 1) / cube_cells;
  std::vector<std::size_t> order(rho.size());
  std::iota(order.begin(), order.end(), 0);
  auto cube_of = [&](std::size_t idx) {
    const auto [i, j, k] = g.coords(idx);
    return i / cube_cells + cx * (j / cube_cells + cy * (k / cube_cells));
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t p, std::size_t q) { return cube_of(p) < cube_of(q); });

  const double w = total / double(n);
  const double hv = g.cell_volume();
  std::vector<Vec3> atoms;
  atoms.reserve(n);
  Vec3 moment;
  double held = 0.0;
  for (std::size_t idx : order) {
    double m = rho[idx] * hv;
    const Vec3 x = g.center(idx);
    while (m > 0.0) {
      const double take = atoms.size() + 1 == n ? m : std::min(m, std::max(w - held, 0.0));
      moment += x * take;
      held += take;
      m -= take;
      if (atoms.size() + 1 < n && held >= w) {
        atoms.push_back(moment * (1.0 / held));
        moment = {};
        held = 0.0;
      }
    }
  }
  if (atoms.size() < n) atoms.push_back(moment * (1.0 / held));
  return DiscreteMeasure(std::move(atoms), total);
}

Rearrangement rearrange_to_bounded(const DensityField& rho, double epsilon, std::size_t atoms) {
  const Grid3& g = rho.grid();
  const double total = mass(rho);
  if (!(total > 0.0)) throw DegenerateInputError("rearrangement of a zero-mass density");
  const auto k = static_cast<std::size_t>(std::floor(epsilon / (2.0 * std::sqrt(3.0) * g.h) * (1 + 1e-12)));
  if (k == 0)
    throw ConfigurationError("rearrangement: epsilon " + std::to_string(epsilon) + " below 2 sqrt(3) h = " +
                             std::to_string(2.0 * std::sqrt(3.0) * g.h));
  RearrangementAudit audit;
  audit.epsilon = epsilon;
  audit.cube_cells = k;
  audit.cube_edge = double(k) * g.h;
  audit.cube_volume = std::pow(audit.cube_edge, 3);
  audit.atoms = atoms;

  const std::size_t cx = (g.nx + k - 1) / k;
  const std::size_t cy = (g.ny + k - 1) / k;
  const std::size_t cz = (g.nz + k - 1) / k;
  const std::size_t ncubes = cx * cy * cz;
  std::vector<std::size_t> cube(rho.size());
  for (std::size_t idx = 0; idx < rho.size(); ++idx) {
    const auto [i, j, l] = g.coords(idx);
    cube[idx] = i / k + cx * (j / k + cy * (l / k));
  }
  const double hv = g.cell_volume();

  // R ladder 2, 3, ...: tail mass below V/4 and every cube able to absorb its
  // excess without exceeding 2R (partial cubes at the grid edge need the check).
  const double rmax = rho.max();
  double R = 2.0;
  for (;; R += 1.0) {
    double tail = 0.0;
    for (double v : rho.values())
      if (v > R) tail += v * hv;
    if (!(tail < audit.cube_volume / 4.0)) continue;
    std::vector<double> excess(ncubes, 0.0);
    std::vector<double> low_volume(ncubes, 0.0);
    for (std::size_t idx = 0; idx < rho.size(); ++idx) {
      if (rho[idx] > 2.0 * R) excess[cube[idx]] += (rho[idx] - 2.0 * R) * hv;
      if (rho[idx] <= R) low_volume[cube[idx]] += hv;
    }
    bool ok = true;
    for (std::size_t c = 0; c < ncubes && ok; ++c)
      if (excess[c] > 0.0 && !(excess[c] <= R * low_volume[c])) ok = false;
    if (ok) {
      audit.tail_mass = tail;
      break;
    }
    if (R > 2.0 * rmax + 2.0) throw NumericError("rearrangement: no admissible R on the ladder");
  }
  audit.R = R;

  std::vector<double> excess(ncubes, 0.0);
  std::vector<std::size_t> low_cells(ncubes, 0);
  for (std::size_t idx = 0; idx < rho.size(); ++idx) {
    if (rho[idx] >= 2.0 * R) excess[cube[idx]] += rho[idx] - 2.0 * R;
    if (rho[idx] <= R) ++low_cells[cube[idx]];
  }
  std::vector<double> out(rho.values());
  for (std::size_t idx = 0; idx < rho.size(); ++idx) {
    const std::size_t c = cube[idx];
    if (rho[idx] >= 2.0 * R) {
      out[idx] = 2.0 * R;
      ++audit.capped_cells;
    } else if (rho[idx] <= R && excess[c] > 0.0) {
      out[idx] += excess[c] / double(low_cells[c]);
    }
  }
  for (std::size_t c = 0; c < ncubes; ++c)
    if (excess[c] > 0.0 && low_cells[c] == 0)
      throw NumericError("rearrangement: cube with excised mass has no {rho <= R} cells");

  Rearrangement r{DensityField(g, std::move(out)), R, audit};
  std::vector<double> before(ncubes, 0.0);
  std::vector<double> after(ncubes, 0.0);
  for (std::size_t idx = 0; idx < rho.size(); ++idx) {
    before[cube[idx]] += rho[idx] * hv;
    after[cube[idx]] += r.sigma[idx] * hv;
  }
  for (std::size_t c = 0; c < ncubes; ++c)
    r.audit.max_cube_mass_error = std::max(r.audit.max_cube_mass_error, std::abs(after[c] - before[c]) / total);
  r.audit.global_mass_error = std::abs(mass(r.sigma) - total) / total;
  r.audit.sup_sigma = r.sigma.max();
  bool pass = r.audit.sup_sigma <= 2.0 * R && r.audit.max_cube_mass_error <= 1e-12 && r.audit.global_mass_error <= 1e-12;
  if (atoms > 0) {
    const auto a = cube_ordered_atomization(rho, k, atoms);
    auto b = cube_ordered_atomization(r.sigma, k, atoms);
    b.total_mass = a.total_mass;  // equal up to round-off, checked above
    r.audit.atomized_distance = winf_distance(a, b).distance;
    pass = pass && *r.audit.atomized_distance <= epsilon;
  }
  r.audit.pass = pass;
  return r;
}

ConeMembership cone_membership(const PerturbationCone& cone, const ScalarField& sigma) {
  if (!(cone.R > 0.0)) throw DomainError("perturbation cone needs R > 0");
  if (!(sigma.grid == cone.rho.grid())) throw DomainError("cone membership: sigma lives on a different grid");
  const Grid3& g = sigma.grid;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const double s = sigma[i];
    const double r = cone.rho[i];
    const Vec3 x = g.center(i);
    const char* rule = nullptr;
    if (s != 0.0 && r > cone.R)
      rule = "sigma must vanish where rho > R";
    else if (s != 0.0 && norm(x) > cone.R)
      rule = "sigma must vanish where |x| > R";
    else if (s < 0.0 && r < 1.0 / cone.R)
      rule = "sigma must be non-negative where rho < 1/R";
    if (rule) return {false, ConeViolation{i, x, rule, s, r}};
  }
  return {true, std::nullopt};
}

DensityField spiked_density(std::size_t cells, int spikes, std::uint64_t seed) {
  if (cells < 4 || spikes < 0) throw DomainError("spiked density needs >= 4 cells and spikes >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Grid3 g = Grid3::centered({}, 1.0 / double(cells), cells, cells, cells);
  std::vector<double> v(g.size());
  for (auto& x : v) x = 0.5 + u(rng);
  for (int s = 0; s < spikes; ++s) {
    const Vec3 c{0.8 * (u(rng) - 0.5), 0.8 * (u(rng) - 0.5), 0.8 * (u(rng) - 0.5)};
    const double w = (1.0 + u(rng)) * g.h;
    const double peak = 0.004 / (std::pow(M_PI, 1.5) * w * w * w);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Vec3 d = g.center(i) - c;
      v[i] += peak * std::exp(-dot(d, d) / (w * w));
    }
  }
  DensityField f(g, std::move(v));
  f.scale(1.0 / mass(f));
  return f;
}

}  // namespace binaria
