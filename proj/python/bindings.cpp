#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "binaria/cli.hpp"
#include "binaria/diagnostics.hpp"
#include "binaria/solver.hpp"
#include "binaria/wasserstein.hpp"

namespace py = pybind11;
using namespace binaria;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Fields cross the boundary as (nz, ny, nx) arrays: x is the fastest index.
Array to_numpy(const std::vector<double>& v, const Grid3& g) {
  Array a({g.nz, g.ny, g.nx});
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

std::vector<double> from_numpy(const Array& a, const Grid3& g) {
  if (a.ndim() != 3 || std::size_t(a.shape(0)) != g.nz || std::size_t(a.shape(1)) != g.ny ||
      std::size_t(a.shape(2)) != g.nx)
    throw DomainError("array shape must be (nz, ny, nx) of the grid");
  return std::vector<double>(a.data(), a.data() + a.size());
}

DiscreteMeasure cloud(const Array& a, double total_mass) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw DomainError("atom cloud must have shape (n, 3)");
  std::vector<Vec3> pts(std::size_t(a.shape(0)));
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = {a.at(i, 0), a.at(i, 1), a.at(i, 2)};
  return DiscreteMeasure(std::move(pts), total_mass);
}

py::tuple vec(const Vec3& v) { return py::make_tuple(v.x, v.y, v.z); }
Vec3 vec(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

py::dict ledger_dict(const EnergyLedger& L) {
  py::dict d;
  d["U"] = L.internal;
  d["G"] = L.interaction;
  d["T_J"] = L.rotational;
  d["E_J"] = L.total;
  d["mass"] = L.mass;
  d["center_of_mass"] = vec(L.center_of_mass);
  d["moment_of_inertia"] = L.moment_of_inertia;
  d["omega"] = L.omega;
  d["J"] = L.J;
  return d;
}

std::vector<Ball> balls(const std::vector<std::pair<std::array<double, 3>, double>>& b) {
  std::vector<Ball> out;
  for (const auto& [c, r] : b) out.push_back({vec(c), r});
  return out;
}

}  // namespace

PYBIND11_MODULE(_binaria, m) {
  m.doc() = "Rotating star equilibria by SCF minimization, with W-infinity and residual audits";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<RangeError>(m, "RangeError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<DegenerateInputError>(m, "DegenerateInputError", PyExc_ValueError);
  py::register_exception<ConfigurationError>(m, "ConfigurationError", PyExc_ValueError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);

  py::class_<EquationOfState>(m, "EquationOfState")
      .def_static("polytrope", &EquationOfState::polytrope, py::arg("K"), py::arg("gamma"))
      .def_static("tabulated", &EquationOfState::tabulated, py::arg("samples"),
                  py::arg("density_ceiling") = EquationOfState::default_density_ceiling)
      .def_static("from_csv", &EquationOfState::from_csv, py::arg("path"),
                  py::arg("density_ceiling") = EquationOfState::default_density_ceiling)
      .def("pressure", py::vectorize(&EquationOfState::pressure))
      .def("energy_density", py::vectorize(&EquationOfState::energy_density))
      .def("enthalpy", py::vectorize(&EquationOfState::enthalpy))
      .def("inverse_enthalpy", py::vectorize(&EquationOfState::inverse_enthalpy))
      .def("__repr__", &EquationOfState::describe);

  m.def("audit_assumptions", [](const EquationOfState& eos) {
    const auto r = audit_assumptions(eos);
    py::dict d;
    d["f1"] = r.f1_ok;
    d["f2"] = r.f2_ok;
    d["f3"] = r.f3_ok;
    d["f4"] = r.f4_ok;
    d["f5_ratio"] = r.f5_ratio_limsup_estimate ? py::cast(*r.f5_ratio_limsup_estimate) : py::none();
    return d;
  });

  py::class_<Grid3>(m, "Grid")
      .def(py::init([](std::array<double, 3> origin, double h, std::size_t nx, std::size_t ny, std::size_t nz) {
             return Grid3(vec(origin), h, nx, ny, nz);
           }),
           py::arg("origin"), py::arg("h"), py::arg("nx"), py::arg("ny"), py::arg("nz"))
      .def_static(
          "centered",
          [](std::array<double, 3> c, double h, std::size_t nx, std::size_t ny, std::size_t nz) {
            return Grid3::centered(vec(c), h, nx, ny, nz);
          },
          py::arg("center"), py::arg("h"), py::arg("nx"), py::arg("ny"), py::arg("nz"))
      .def_property_readonly("origin", [](const Grid3& g) { return vec(g.origin); })
      .def_readonly("h", &Grid3::h)
      .def_property_readonly("shape", [](const Grid3& g) { return py::make_tuple(g.nz, g.ny, g.nx); })
      .def("cell_centers", [](const Grid3& g) {
        py::array_t<double> a({g.nz, g.ny, g.nx, std::size_t(3)});
        double* p = a.mutable_data();
        for (std::size_t i = 0; i < g.size(); ++i) {
          const Vec3 c = g.center(i);
          p[3 * i] = c.x;
          p[3 * i + 1] = c.y;
          p[3 * i + 2] = c.z;
        }
        return a;
      });

  py::class_<DensityField>(m, "DensityField")
      .def(py::init([](const Grid3& g, const Array& values) { return DensityField(g, from_numpy(values, g)); }),
           py::arg("grid"), py::arg("values"))
      .def_property_readonly("grid", &DensityField::grid)
      .def_property_readonly("values", [](const DensityField& f) { return to_numpy(f.values(), f.grid()); });

  m.def("mass", &mass);
  m.def("center_of_mass", [](const DensityField& f) { return vec(center_of_mass(f)); });
  m.def("moment_of_inertia", py::overload_cast<const DensityField&>(&moment_of_inertia));
  m.def(
      "total_energy",
      [](const EquationOfState& eos, const DensityField& rho, double J) { return ledger_dict(total_energy(eos, rho, J)); },
      py::arg("eos"), py::arg("rho"), py::arg("J") = 0.0);
  m.def("potential", [](const DensityField& rho) {
    return to_numpy(potential(rho.field()).values, rho.grid());
  });

  py::class_<BinaryProblem>(m, "BinaryProblem")
      .def_readonly("m", &BinaryProblem::m)
      .def_readonly("J", &BinaryProblem::J)
      .def_readonly("mu_r", &BinaryProblem::mu_r)
      .def_readonly("eta", &BinaryProblem::eta)
      .def_readonly("radius", &BinaryProblem::radius)
      .def_readonly("distance", &BinaryProblem::distance)
      .def_readonly("diameter", &BinaryProblem::diameter)
      .def_property_readonly("center_m", [](const BinaryProblem& p) { return vec(p.center_m); })
      .def_property_readonly("center_rest", [](const BinaryProblem& p) { return vec(p.center_rest); });
  m.def("build_problem", &build_problem, py::arg("m"), py::arg("J"));

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_property(
          "grid", [](const SolverConfig& c) { return py::make_tuple(c.grid.nx, c.grid.ny, c.grid.nz); },
          [](SolverConfig& c, std::array<std::size_t, 3> n) { c.grid = {n[0], n[1], n[2], c.grid.spacing}; })
      .def_property(
          "spacing", [](const SolverConfig& c) { return c.grid.spacing; },
          [](SolverConfig& c, double h) { c.grid.spacing = h; })
      .def_readwrite("theta", &SolverConfig::theta)
      .def_readwrite("max_iters", &SolverConfig::max_iters)
      .def_readwrite("tol_el", &SolverConfig::tol_el)
      .def_readwrite("tol_mass", &SolverConfig::tol_mass)
      .def_readwrite("single_star_extent", &SolverConfig::single_star_extent)
      .def("validate", &SolverConfig::validate);

  py::class_<EquilibriumSolution>(m, "EquilibriumSolution")
      .def_readonly("rho", &EquilibriumSolution::rho)
      .def_readonly("lambda_", &EquilibriumSolution::lambda)
      .def_readonly("component_mass", &EquilibriumSolution::component_mass)
      .def_readonly("omega", &EquilibriumSolution::omega)
      .def_property_readonly("energy", [](const EquilibriumSolution& s) { return ledger_dict(s.ledger); })
      .def_readonly("el_residual_sup", &EquilibriumSolution::el_residual_sup)
      .def_readonly("ep_residual_sup", &EquilibriumSolution::ep_residual_sup)
      .def_readonly("iterations", &EquilibriumSolution::iterations)
      .def_readonly("support_margin", &EquilibriumSolution::support_margin)
      .def_readonly("support_components", &EquilibriumSolution::support_components)
      .def_readonly("notes", &EquilibriumSolution::notes)
      .def_property_readonly("status", [](const EquilibriumSolution& s) { return std::string(to_string(s.status)); })
      .def_property_readonly("domains", [](const EquilibriumSolution& s) {
        py::list out;
        for (const auto& b : s.problem.domains) out.append(py::make_tuple(vec(b.center), b.radius));
        return out;
      });

  m.def("solve_single_star", &solve_single_star, py::arg("eos"), py::arg("mass"), py::arg("config") = SolverConfig{},
        py::call_guard<py::gil_scoped_release>());
  m.def(
      "solve_binary",
      [](const EquationOfState& eos, double mfrac, double J, const SolverConfig& config) {
        return solve(eos, build_problem(mfrac, J), config);
      },
      py::arg("eos"), py::arg("m"), py::arg("J"), py::arg("config") = SolverConfig{},
      py::call_guard<py::gil_scoped_release>());

  m.def(
      "el_residual",
      [](const EquationOfState& eos, const DensityField& rho, double J,
         const std::vector<std::pair<std::array<double, 3>, double>>& domains,
         std::optional<std::vector<double>> lambda, double tol_el) {
        const auto r = el_residual(eos, rho, J, balls(domains), lambda, tol_el);
        py::dict d;
        d["el_sup"] = r.el_sup;
        d["el_l2"] = r.el_l2;
        d["el_sup_neighbourhood"] = r.el_sup_neighbourhood;
        d["lambda"] = r.lambda;
        d["pass"] = r.pass;
        return d;
      },
      py::arg("eos"), py::arg("rho"), py::arg("J"), py::arg("domains"), py::arg("lambda_") = py::none(),
      py::arg("tol_el") = 1e-4);
  m.def(
      "ep_residual",
      [](const EquationOfState& eos, const DensityField& rho, double J) {
        const auto r = ep_residual(eos, rho, J);
        py::dict d;
        d["ep_sup"] = r.ep_sup;
        d["zero_cell_sup"] = r.zero_cell_sup;
        d["omega"] = r.omega;
        return d;
      },
      py::arg("eos"), py::arg("rho"), py::arg("J") = 0.0);

  py::class_<LaneEmdenProfile>(m, "LaneEmdenProfile")
      .def_readonly("n", &LaneEmdenProfile::n)
      .def_readonly("xi1", &LaneEmdenProfile::xi1)
      .def_readonly("radius", &LaneEmdenProfile::radius)
      .def_readonly("central_density", &LaneEmdenProfile::central_density)
      .def("theta", py::vectorize([](const LaneEmdenProfile* p, double x) { return p->theta_at(x); }))
      .def("density", py::vectorize([](const LaneEmdenProfile* p, double r) { return p->density(r); }))
      .def("integrated_mass", &LaneEmdenProfile::integrated_mass);
  m.def("lane_emden_reference", &lane_emden_reference, py::arg("gamma"), py::arg("K"), py::arg("mass"));

  m.def(
      "winf_distance",
      [](const Array& a, const Array& b) {
        const auto r = winf_distance(cloud(a, 1.0), cloud(b, 1.0));
        return py::make_tuple(r.distance, r.matching);
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "lemma_properties",
      [](const Array& a, const Array& b, double delta) {
        const auto r = check_lemma_properties(cloud(a, 1.0), cloud(b, 1.0), delta);
        py::list out;
        for (const auto& c : r.checks) {
          py::dict d;
          d["name"] = c.name;
          d["applicable"] = c.applicable;
          d["pass"] = c.pass;
          d["lhs"] = c.lhs;
          d["rhs"] = c.rhs;
          out.append(d);
        }
        return out;
      },
      py::arg("a"), py::arg("b"), py::arg("delta"));
  m.def(
      "rearrange_to_bounded",
      [](const DensityField& rho, double epsilon, std::size_t atoms) {
        const auto r = rearrange_to_bounded(rho, epsilon, atoms);
        py::dict audit;
        audit["sup_sigma"] = r.audit.sup_sigma;
        audit["capped_cells"] = r.audit.capped_cells;
        audit["max_cube_mass_error"] = r.audit.max_cube_mass_error;
        audit["global_mass_error"] = r.audit.global_mass_error;
        audit["atomized_distance"] = r.audit.atomized_distance ? py::cast(*r.audit.atomized_distance) : py::none();
        audit["pass"] = r.audit.pass;
        return py::make_tuple(r.sigma, r.R, audit);
      },
      py::arg("rho"), py::arg("epsilon"), py::arg("atoms") = 256);
  m.def("spiked_density", &spiked_density, py::arg("cells"), py::arg("spikes"), py::arg("seed"));

  m.def(
      "parse_config",
      [](const std::filesystem::path& path) { return parse_config(path).echo(); }, py::arg("path"));
  m.def(
      "run_config",
      [](const std::filesystem::path& path, std::optional<std::filesystem::path> out, bool deterministic) {
        RunConfig c = parse_config(path);
        if (out) c.out_dir = *out;
        c.deterministic = c.deterministic || deterministic;
        py::gil_scoped_release release;
        return run(c);
      },
      py::arg("path"), py::arg("out") = py::none(), py::arg("deterministic") = false);
}
