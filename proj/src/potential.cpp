#include "binaria/potential.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <vector>

namespace binaria {

namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Signed lattice offset stored at padded index a of a length-2n axis.
long wrapped_offset(std::size_t a, std::size_t n) {
  return a < n ? static_cast<long>(a) : static_cast<long>(a) - 2 * static_cast<long>(n);
}

}  // namespace

struct PotentialSolver::FftState {
  std::size_t px, py, pz;  // padded extents, x fastest
  std::size_t cx;          // px/2 + 1 complex entries along x
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::vector<std::complex<double>> kernel;
  std::array<std::vector<std::complex<double>>, 3> grad_kernel;

  explicit FftState(const Grid3& g) : px(2 * g.nx), py(2 * g.ny), pz(2 * g.nz), cx(g.nx + 1) {
    std::lock_guard lock(planner_mutex());
    real = fftw_alloc_real(real_size());
    spec = fftw_alloc_complex(spec_size());
    if (!real || !spec) throw std::bad_alloc();
    forward = fftw_plan_dft_r2c_3d(int(pz), int(py), int(px), real, spec, FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r_3d(int(pz), int(py), int(px), spec, real, FFTW_ESTIMATE);
  }
  ~FftState() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    fftw_free(real);
    fftw_free(spec);
  }
  FftState(const FftState&) = delete;
  FftState& operator=(const FftState&) = delete;

  std::size_t real_size() const { return px * py * pz; }
  std::size_t spec_size() const { return pz * py * cx; }

  template <class F>
  std::vector<std::complex<double>> transform_kernel(const Grid3& g, F value) {
    for (std::size_t c = 0; c < pz; ++c)
      for (std::size_t b = 0; b < py; ++b)
        for (std::size_t a = 0; a < px; ++a) {
          const long dx = wrapped_offset(a, g.nx);
          const long dy = wrapped_offset(b, g.ny);
          const long dz = wrapped_offset(c, g.nz);
          // Offset n along an axis never pairs two cells of the original grid.
          const bool unused = a == g.nx || b == g.ny || c == g.nz;
          real[a + px * (b + py * c)] = unused ? 0.0 : value(dx, dy, dz);
        }
    fftw_execute(forward);
    const double scale = g.cell_volume() / double(real_size());
    std::vector<std::complex<double>> out(spec_size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::complex<double>(spec[i][0], spec[i][1]) * scale;
    return out;
  }

  void load(const ScalarField& rho) {
    const Grid3& g = rho.grid;
    std::fill(real, real + real_size(), 0.0);
    for (std::size_t k = 0; k < g.nz; ++k)
      for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i) real[i + px * (j + py * k)] = rho.values[g.index(i, j, k)];
    fftw_execute(forward);
  }

  // Multiplies a saved copy of the density spectrum by kernel and transforms back.
  void convolve(const std::vector<std::complex<double>>& density, const std::vector<std::complex<double>>& k) {
    for (std::size_t i = 0; i < density.size(); ++i) {
      const std::complex<double> v = density[i] * k[i];
      spec[i][0] = v.real();
      spec[i][1] = v.imag();
    }
    fftw_execute(backward);
  }

  std::vector<std::complex<double>> density_spectrum() const {
    std::vector<std::complex<double>> s(spec_size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = {spec[i][0], spec[i][1]};
    return s;
  }

  double at(std::size_t i, std::size_t j, std::size_t k) const { return real[i + px * (j + py * k)]; }
};

PotentialSolver::PotentialSolver(const Grid3& grid, Method method) : grid_(grid), method_(method) {
  if (method_ == Method::automatic) method_ = grid.size() <= direct_cell_limit ? Method::direct : Method::fft;
  if (method_ == Method::fft) {
    fft_ = std::make_unique<FftState>(grid_);
    const double h = grid_.h;
    fft_->kernel = fft_->transform_kernel(grid_, [h](long dx, long dy, long dz) {
      if (dx == 0 && dy == 0 && dz == 0) return kCubeSelfPotential / h;
      return 1.0 / (h * std::sqrt(double(dx * dx + dy * dy + dz * dz)));
    });
  }
}

PotentialSolver::~PotentialSolver() = default;
PotentialSolver::PotentialSolver(PotentialSolver&&) noexcept = default;
PotentialSolver& PotentialSolver::operator=(PotentialSolver&&) noexcept = default;

void PotentialSolver::require_grid(const Grid3& g) const {
  if (!(g == grid_)) throw DomainError("potential solver: field grid does not match solver grid");
}

ScalarField PotentialSolver::potential(const ScalarField& rho) const {
  require_grid(rho.grid);
  ScalarField out(grid_);
  const double h = grid_.h;
  const double vol = grid_.cell_volume();
  if (method_ == Method::direct) {
    std::vector<std::size_t> sources;
    for (std::size_t j = 0; j < rho.size(); ++j)
      if (rho[j] != 0.0) sources.push_back(j);
    parallel_for(grid_.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        const auto ci = grid_.coords(i);
        double acc = 0.0;
        for (std::size_t j : sources) {
          const auto cj = grid_.coords(j);
          const double dx = double(ci[0]) - double(cj[0]);
          const double dy = double(ci[1]) - double(cj[1]);
          const double dz = double(ci[2]) - double(cj[2]);
          const double r2 = dx * dx + dy * dy + dz * dz;
          acc += rho[j] * (r2 == 0.0 ? kCubeSelfPotential : 1.0 / std::sqrt(r2));
        }
        out[i] = acc * vol / h;
      }
    });
    return out;
  }
  fft_->load(rho);
  const auto dens = fft_->density_spectrum();
  fft_->convolve(dens, fft_->kernel);
  for (std::size_t k = 0; k < grid_.nz; ++k)
    for (std::size_t j = 0; j < grid_.ny; ++j)
      for (std::size_t i = 0; i < grid_.nx; ++i) out[grid_.index(i, j, k)] = fft_->at(i, j, k);
  return out;
}

VectorField PotentialSolver::gradient(const ScalarField& rho) const {
  require_grid(rho.grid);
  VectorField out(grid_);
  const double h = grid_.h;
  const double vol = grid_.cell_volume();
  if (method_ == Method::direct) {
    std::vector<std::size_t> sources;
    for (std::size_t j = 0; j < rho.size(); ++j)
      if (rho[j] != 0.0) sources.push_back(j);
    parallel_for(grid_.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        const auto ci = grid_.coords(i);
        Vec3 acc;
        for (std::size_t j : sources) {
          const auto cj = grid_.coords(j);
          const Vec3 d{double(ci[0]) - double(cj[0]), double(ci[1]) - double(cj[1]), double(ci[2]) - double(cj[2])};
          const double r2 = dot(d, d);
          if (r2 == 0.0) continue;
          acc -= d * (rho[j] / (r2 * std::sqrt(r2)));
        }
        out.values[i] = acc * (vol / (h * h));
      }
    });
    return out;
  }
  auto& st = *fft_;
  if (st.grad_kernel[0].empty()) {
    for (int axis = 0; axis < 3; ++axis) {
      st.grad_kernel[axis] = st.transform_kernel(grid_, [h, axis](long dx, long dy, long dz) {
        const double r2 = double(dx * dx + dy * dy + dz * dz);
        if (r2 == 0.0) return 0.0;
        const double d = axis == 0 ? double(dx) : (axis == 1 ? double(dy) : double(dz));
        return -d / (h * h * r2 * std::sqrt(r2));
      });
    }
  }
  st.load(rho);
  const auto dens = st.density_spectrum();
  for (int axis = 0; axis < 3; ++axis) {
    st.convolve(dens, st.grad_kernel[axis]);
    for (std::size_t k = 0; k < grid_.nz; ++k)
      for (std::size_t j = 0; j < grid_.ny; ++j)
        for (std::size_t i = 0; i < grid_.nx; ++i) out.values[grid_.index(i, j, k)][axis] = st.at(i, j, k);
  }
  return out;
}

ScalarField potential(const ScalarField& rho, PotentialSolver::Method method) {
  return PotentialSolver(rho.grid, method).potential(rho);
}

VectorField potential_gradient(const ScalarField& rho, PotentialSolver::Method method) {
  return PotentialSolver(rho.grid, method).gradient(rho);
}

}  // namespace binaria
