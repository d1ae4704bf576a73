#include "binaria/cli.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "binaria/audit.hpp"
#include "binaria/diagnostics.hpp"
#include "binaria/field_io.hpp"
#include "binaria/wasserstein.hpp"
#include "json.hpp"

namespace binaria {

namespace {

using json = nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigurationError("expected a number, got '" + v + "'");
  }
  if (used != v.size()) throw ConfigurationError("expected a number, got '" + v + "'");
  if (!std::isfinite(x)) throw ConfigurationError("value must be finite");
  return x;
}

template <class Int>
Int parse_int(const std::string& v) {
  Int x{};
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigurationError("expected an integer, got '" + v + "'");
  return x;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ConfigurationError("expected true or false, got '" + v + "'");
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\'')))
    return v.substr(1, v.size() - 2);
  return v;
}

const char* method_name(PotentialSolver::Method m) {
  switch (m) {
    case PotentialSolver::Method::direct: return "direct";
    case PotentialSolver::Method::fft: return "fft";
    default: return "auto";
  }
}

enum Section : unsigned { kAll = 0, kSingle = 1, kBinary = 2, kWass = 4, kRearr = 8, kAudit = 16 };

unsigned scenario_bit(Scenario s) {
  switch (s) {
    case Scenario::single_star: return kSingle;
    case Scenario::binary: return kBinary;
    case Scenario::wasserstein: return kWass;
    case Scenario::rearrange: return kRearr;
    case Scenario::audit: return kAudit;
  }
  return kAll;
}

struct KeyBinding {
  ConfigKey spec;
  unsigned scenarios;  // kAll for every scenario
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define BIND_DOUBLE(field) \
  [](RunConfig& c, const std::string& v) { c.field = parse_double(v); }, \
      [](const RunConfig& c) { return format_double(c.field); }
#define BIND_SIZE(field) \
  [](RunConfig& c, const std::string& v) { c.field = parse_int<std::size_t>(v); }, \
      [](const RunConfig& c) { return std::to_string(c.field); }
#define BIND_INT(field) \
  [](RunConfig& c, const std::string& v) { c.field = parse_int<int>(v); }, \
      [](const RunConfig& c) { return std::to_string(c.field); }
#define BIND_PATH(field) \
  [](RunConfig& c, const std::string& v) { c.field = unquote(v); }, \
      [](const RunConfig& c) { return c.field.string(); }
#define BIND_STRING(field) \
  [](RunConfig& c, const std::string& v) { c.field = unquote(v); }, \
      [](const RunConfig& c) { return c.field; }

const unsigned kSolve = kSingle | kBinary;
const unsigned kEos = kSingle | kBinary | kAudit;

const std::vector<KeyBinding>& bindings() {
  static const std::vector<KeyBinding> table = {
      {{"scenario", "string", "single-star | binary | wasserstein | rearrange | audit"},
       kAll,
       [](RunConfig& c, const std::string& v) { c.scenario = scenario_from_string(unquote(v)); },
       [](const RunConfig& c) { return std::string(to_string(c.scenario)); }},
      {{"eos.kind", "string", "polytrope | tabulated"}, kEos, BIND_STRING(eos.kind)},
      {{"eos.K", "number", "polytrope pressure coefficient"}, kEos, BIND_DOUBLE(eos.K)},
      {{"eos.gamma", "number", "polytrope index, > 4/3"}, kEos, BIND_DOUBLE(eos.gamma)},
      {{"eos.table", "path", "CSV of density,pressure rows for the tabulated kind"}, kEos, BIND_PATH(eos.table)},
      {{"eos.density_ceiling", "number", "upper density bound for the inverse enthalpy"},
       kEos,
       BIND_DOUBLE(eos.density_ceiling)},
      {{"problem.m", "number", "binary mass fraction in (0, 1)"}, kBinary, BIND_DOUBLE(m)},
      {{"problem.J", "number", "binary angular momentum, > 0"},
       kBinary,
       [](RunConfig& c, const std::string& v) { c.J = parse_double(v); },
       [](const RunConfig& c) { return c.J ? format_double(*c.J) : std::string("unset"); }},
      {{"problem.eta", "number", "center separation; sets J = m(1-m) sqrt(eta)"},
       kBinary,
       [](RunConfig& c, const std::string& v) { c.eta = parse_double(v); },
       [](const RunConfig& c) { return c.eta ? format_double(*c.eta) : std::string("unset"); }},
      {{"problem.mass", "number", "single-star mass, > 0"}, kSingle, BIND_DOUBLE(mass)},
      {{"grid.nx", "integer", "cells along x"}, kSolve, BIND_SIZE(solver.grid.nx)},
      {{"grid.ny", "integer", "cells along y"}, kSolve, BIND_SIZE(solver.grid.ny)},
      {{"grid.nz", "integer", "cells along z"}, kSolve, BIND_SIZE(solver.grid.nz)},
      {{"grid.spacing", "number", "cell size; 0 fits the domains"}, kSolve, BIND_DOUBLE(solver.grid.spacing)},
      {{"solver.theta", "number", "relaxation in (0, 1]"}, kSolve, BIND_DOUBLE(solver.theta)},
      {{"solver.max_iters", "integer", "iteration cap"}, kSolve, BIND_INT(solver.max_iters)},
      {{"solver.tol_el", "number", "stopping bound on the EL residual"}, kSolve, BIND_DOUBLE(solver.tol_el)},
      {{"solver.tol_mass", "number", "relative mass tolerance of the multiplier solve"},
       kSolve,
       BIND_DOUBLE(solver.tol_mass)},
      {{"solver.lambda_expansion", "number", "bracket growth factor, > 1"},
       kSolve,
       BIND_DOUBLE(solver.lambda_expansion)},
      {{"solver.lambda_max_expansions", "integer", "bracket growth limit"},
       kSolve,
       BIND_INT(solver.lambda_max_expansions)},
      {{"solver.initial_radius_fraction", "number", "initial bump radius over domain radius"},
       kSolve,
       BIND_DOUBLE(solver.initial_radius_fraction)},
      {{"solver.single_star_extent", "number", "single-star grid half-width"},
       kSingle,
       BIND_DOUBLE(solver.single_star_extent)},
      {{"solver.potential", "string", "auto | direct | fft"},
       kSolve,
       [](RunConfig& c, const std::string& v) {
         const std::string s = unquote(v);
         if (s == "auto") c.solver.potential_method = PotentialSolver::Method::automatic;
         else if (s == "direct") c.solver.potential_method = PotentialSolver::Method::direct;
         else if (s == "fft") c.solver.potential_method = PotentialSolver::Method::fft;
         else throw ConfigurationError("expected auto, direct or fft, got '" + s + "'");
       },
       [](const RunConfig& c) { return std::string(method_name(c.solver.potential_method)); }},
      {{"output.dir", "path", "artifact directory"}, kAll, BIND_PATH(out_dir)},
      {{"output.deterministic", "bool", "single thread and no timing fields"},
       kAll,
       [](RunConfig& c, const std::string& v) { c.deterministic = parse_bool(v); },
       [](const RunConfig& c) { return std::string(c.deterministic ? "true" : "false"); }},
      {{"units.mass", "number", "display mass scale"}, kAll, BIND_DOUBLE(units.mass)},
      {{"units.length", "number", "display length scale"}, kAll, BIND_DOUBLE(units.length)},
      {{"units.mass_name", "string", "label of the mass unit"}, kAll, BIND_STRING(units.mass_name)},
      {{"units.length_name", "string", "label of the length unit"}, kAll, BIND_STRING(units.length_name)},
      {{"wasserstein.a", "path", "first atom cloud (CSV x,y,z)"}, kWass, BIND_PATH(cloud_a)},
      {{"wasserstein.b", "path", "second atom cloud"}, kWass, BIND_PATH(cloud_b)},
      {{"wasserstein.delta", "number", "lemma threshold; 0 uses twice the distance"}, kWass, BIND_DOUBLE(delta)},
      {{"rearrange.field", "path", "field stem (raw + json); empty for a synthetic field"},
       kRearr,
       BIND_PATH(field)},
      {{"rearrange.epsilon", "number", "transport bound; 0 uses 32 sqrt(3) h"}, kRearr, BIND_DOUBLE(epsilon)},
      {{"rearrange.atoms", "integer", "atoms per measure for the W-infinity audit"}, kRearr, BIND_SIZE(atoms)},
      {{"rearrange.cells", "integer", "synthetic field cells per edge"}, kRearr, BIND_SIZE(cells)},
      {{"rearrange.spikes", "integer", "synthetic field spike count"}, kRearr, BIND_INT(spikes)},
      {{"audit.grid", "integer", "cells per edge of the audit star"}, kAudit, BIND_SIZE(audit_grid)},
      {{"audit.instances", "integer", "random instances per sampled property"}, kAudit, BIND_INT(audit_instances)},
      {{"run.seed", "integer", "seed of every random choice"},
       kAll,
       [](RunConfig& c, const std::string& v) { c.seed = parse_int<std::uint64_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
  };
  return table;
}

#undef BIND_DOUBLE
#undef BIND_SIZE
#undef BIND_INT
#undef BIND_PATH
#undef BIND_STRING

std::vector<std::string> violations(const RunConfig& c) {
  std::vector<std::string> bad;
  const bool solves = c.scenario == Scenario::single_star || c.scenario == Scenario::binary;
  if (solves || c.scenario == Scenario::audit) {
    if (c.eos.kind == "polytrope") {
      if (!(c.eos.K > 0.0)) bad.push_back("eos.K must be > 0");
      if (!(c.eos.gamma > 4.0 / 3.0)) bad.push_back("eos.gamma must exceed 4/3");
    } else if (c.eos.kind == "tabulated") {
      if (c.eos.table.empty()) bad.push_back("eos.table is required for the tabulated kind");
    } else {
      bad.push_back("eos.kind must be polytrope or tabulated");
    }
    if (!(c.eos.density_ceiling > 0.0)) bad.push_back("eos.density_ceiling must be > 0");
  }
  if (c.scenario == Scenario::binary) {
    if (!(c.m > 0.0 && c.m < 1.0)) bad.push_back("problem.m must lie in (0, 1)");
    if (c.J && c.eta) bad.push_back("set only one of problem.J and problem.eta");
    if (!c.J && !c.eta) bad.push_back("problem.J or problem.eta is required");
    if (c.J && !(*c.J > 0.0)) bad.push_back("problem.J must be > 0");
    if (c.eta && !(*c.eta > 0.0)) bad.push_back("problem.eta must be > 0");
  }
  if (c.scenario == Scenario::single_star && !(c.mass > 0.0)) bad.push_back("problem.mass must be > 0");
  if (solves)
    for (const auto& v : c.solver.violations()) bad.push_back("solver: " + v);
  if (!(c.units.mass > 0.0) || !(c.units.length > 0.0)) bad.push_back("units.mass and units.length must be > 0");
  if (c.out_dir.empty()) bad.push_back("output.dir must not be empty");
  if (c.scenario == Scenario::wasserstein) {
    if (c.cloud_a.empty() || c.cloud_b.empty()) bad.push_back("wasserstein.a and wasserstein.b are required");
    if (!(c.delta >= 0.0)) bad.push_back("wasserstein.delta must be >= 0");
  }
  if (c.scenario == Scenario::rearrange) {
    if (!(c.epsilon >= 0.0)) bad.push_back("rearrange.epsilon must be >= 0");
    if (c.atoms < 1) bad.push_back("rearrange.atoms must be >= 1");
    if (c.field.empty() && c.cells < 8) bad.push_back("rearrange.cells must be >= 8");
    if (c.spikes < 0) bad.push_back("rearrange.spikes must be >= 0");
  }
  if (c.scenario == Scenario::audit) {
    if (c.audit_grid < 16) bad.push_back("audit.grid must be >= 16");
    if (c.audit_instances < 1) bad.push_back("audit.instances must be >= 1");
  }
  return bad;
}

// ---- units ----

struct Dim {
  double mass = 0.0;
  double length = 0.0;
};

const Dim kEnergy{2, -1};
const Dim kSpecific{1, -1};  // energy per mass: lambda, enthalpy
const Dim kMass{1, 0};
const Dim kLength{0, 1};
const Dim kInertia{1, 2};
const Dim kOmega{0.5, -1.5};
const Dim kAngular{1.5, 0.5};
const Dim kForceDensity{2, -5};
const Dim kNone{0, 0};

std::string unit_label(const Dim& d, const UnitScales& u) {
  auto term = [](const std::string& name, double p) -> std::string {
    if (p == 0.0) return "";
    if (p == 1.0) return name;
    return name + "^" + format_double(p);
  };
  std::string s = term(u.mass_name, d.mass);
  const std::string l = term(u.length_name, d.length);
  if (!s.empty() && !l.empty()) s += " ";
  s += l;
  return s.empty() ? "1" : s;
}

// ---- report helpers ----

std::string error_type(const std::exception& e) {
  if (dynamic_cast<const ConfigurationError*>(&e)) return "configuration";
  if (dynamic_cast<const NoSolutionError*>(&e)) return "no-solution";
  if (dynamic_cast<const NumericError*>(&e)) return "numeric";
  if (dynamic_cast<const DegenerateInputError*>(&e)) return "degenerate-input";
  if (dynamic_cast<const PreconditionError*>(&e)) return "precondition";
  if (dynamic_cast<const DomainError*>(&e)) return "domain";
  if (dynamic_cast<const RangeError*>(&e)) return "range";
  return "internal";
}

json ledger_json(const EnergyLedger& L) {
  return {{"U", L.internal},          {"G", L.interaction}, {"T_J", L.rotational},
          {"E_J", L.total},           {"mass", L.mass},     {"moment_of_inertia", L.moment_of_inertia},
          {"omega", L.omega}};
}

json residual_json(const ResidualReport& r) {
  return {{"el_sup", r.el_sup},
          {"el_l2", r.el_l2},
          {"el_sup_neighbourhood", r.el_sup_neighbourhood},
          {"lambda", r.lambda},
          {"lambda_refit", r.lambda_refit},
          {"delta", r.delta},
          {"tol_el", r.tol_el},
          {"pass", r.pass}};
}

json audit_json(const MultiplierAudit& a) {
  return {{"lambda", a.lambda},
          {"lambda_margin", a.lambda_margin},
          {"lambda_negative", a.lambda_negative},
          {"derivative_spread", a.derivative_spread},
          {"derivative_constant", a.derivative_constant},
          {"support_margin", a.support_margin},
          {"support_interior", a.support_interior},
          {"max_adjacent_jump", a.max_adjacent_jump},
          {"pass", a.pass},
          {"details", a.details}};
}

json trace_json(const std::vector<IterationRecord>& trace) {
  json t = json::array();
  for (const auto& r : trace)
    t.push_back({{"iteration", r.iteration},
                 {"energy", r.energy},
                 {"el_sup", r.el_sup},
                 {"theta", r.theta},
                 {"change", r.change},
                 {"lambda", r.lambda}});
  return t;
}

void write_trace_csv(const std::vector<IterationRecord>& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot write " + path.string());
  out << std::setprecision(17) << "iteration,energy,el_sup,theta,change";
  const std::size_t nl = trace.empty() ? 0 : trace.front().lambda.size();
  for (std::size_t i = 0; i < nl; ++i) out << ",lambda_" << i;
  out << "\n";
  for (const auto& r : trace) {
    out << r.iteration << "," << r.energy << "," << r.el_sup << "," << r.theta << "," << r.change;
    for (double l : r.lambda) out << "," << l;
    out << "\n";
  }
}

struct Context {
  const RunConfig& config;
  const RunOptions& options;
  json& report;

  void say(const std::string& line) const {
    if (options.out) *options.out << line << "\n";
  }
  void progress(const std::string& line) const {
    if (options.verbose && options.log) *options.log << line << "\n";
  }
  std::filesystem::path file(const std::string& name) const { return config.out_dir / name; }
};

// Shared tail of the two solver scenarios.
bool report_solution(const Context& ctx, const EquationOfState& eos, const EquilibriumSolution& sol, double J,
                     const std::optional<BinaryProblem>& problem) {
  for (const auto& r : sol.trace) {
    std::ostringstream line;
    line << "iter " << r.iteration << " E " << std::setprecision(10) << r.energy << " el " << r.el_sup << " theta "
         << r.theta;
    ctx.progress(line.str());
  }
  const auto el = el_residual(eos, sol.rho, J, sol.problem.domains, sol.lambda, sol.tol_el);
  const auto ep = ep_residual(eos, sol.rho, J);
  const auto audit = multiplier_audit(eos, sol);
  const double h = sol.rho.grid().h;

  json& r = ctx.report;
  r["status"] = to_string(sol.status);
  r["iterations"] = sol.iterations;
  r["energy"] = ledger_json(sol.ledger);
  r["initial_energy"] = sol.initial_energy;
  r["energy_decreased"] = sol.energy_decreased;
  r["lambda"] = sol.lambda;
  r["component_mass"] = sol.component_mass;
  std::vector<double> mass_error;
  const ScfProblem& sp = sol.problem;
  for (std::size_t i = 0; i < sp.masses.size(); ++i)
    mass_error.push_back(std::abs(sol.component_mass[i] - sp.masses[i]) / sp.masses[i]);
  r["component_mass_relative_error"] = mass_error;
  r["support_margin"] = sol.support_margin;
  r["support_components"] = sol.support_components;
  r["el"] = residual_json(el);
  r["ep"] = {{"ep_sup", ep.ep_sup},
             {"zero_cell_sup", ep.zero_cell_sup},
             {"interior_cells", ep.interior_cells},
             {"h", h},
             {"C", ep.ep_sup / (h * h + sol.tol_el)}};
  r["multiplier_audit"] = audit_json(audit);
  r["grid"] = {{"origin", {sol.rho.grid().origin.x, sol.rho.grid().origin.y, sol.rho.grid().origin.z}},
               {"spacing", h},
               {"dims", {sol.rho.grid().nx, sol.rho.grid().ny, sol.rho.grid().nz}}};
  r["notes"] = sol.notes;
  r["trace"] = trace_json(sol.trace);

  write_field(sol.rho.field(), ctx.file("rho"));
  write_field(PotentialSolver(sol.rho.grid(), ctx.config.solver.potential_method).potential(sol.rho.field()),
              ctx.file("potential"));
  write_slice_csv(sol.rho.field(), Axis::z, 0.0, ctx.file("rho_z0.csv"));
  write_trace_csv(sol.trace, ctx.file("trace.csv"));
  write_summary_csv(export_summary(sol, problem, ctx.config.units), ctx.file("summary.csv"));

  bool mass_ok = true;
  for (double e : mass_error) mass_ok = mass_ok && e <= 1e-6;
  std::ostringstream line;
  line << std::setprecision(10) << "status " << to_string(sol.status) << " iterations " << sol.iterations << " E_J "
       << sol.ledger.total << " el_sup " << el.el_sup << " ep_sup " << ep.ep_sup << " margin " << sol.support_margin;
  ctx.say(line.str());
  return sol.status == SolveStatus::converged && el.pass && audit.pass && mass_ok;
}

bool run_single_star(const Context& ctx) {
  const RunConfig& c = ctx.config;
  const auto eos = c.eos.build();
  const auto sol = solve_single_star(eos, c.mass, c.solver);
  const bool pass = report_solution(ctx, eos, sol, 0.0, std::nullopt);
  ctx.report["e0"] = sol.ledger.total;
  if (eos.kind() == EquationOfState::Kind::polytrope) {
    const auto cmp = lane_emden_comparison(eos, sol.rho);
    json table = json::array();
    std::ofstream csv(ctx.file("lane_emden.csv"));
    csv << std::setprecision(17) << "r,cells,density,fitted,reference\n";
    for (const auto& row : cmp.table) {
      table.push_back({{"r", row.r},
                       {"cells", row.cells},
                       {"density", row.density},
                       {"fitted", row.fitted},
                       {"reference", row.reference}});
      csv << row.r << "," << row.cells << "," << row.density << "," << row.fitted << "," << row.reference << "\n";
    }
    ctx.report["lane_emden"] = {{"n", cmp.reference.n},
                                {"xi1", cmp.reference.xi1},
                                {"reference_radius", cmp.reference.radius},
                                {"reference_central_density", cmp.reference.central_density},
                                {"fitted_radius", cmp.radius_fit},
                                {"fitted_central_density", cmp.central_density_fit},
                                {"sup_error_fitted", cmp.sup_error_fitted},
                                {"sup_error_reference", cmp.sup_error_reference},
                                {"table", table}};
    std::ostringstream line;
    line << "lane-emden sup error fitted " << cmp.sup_error_fitted << " reference " << cmp.sup_error_reference;
    ctx.say(line.str());
  }
  return pass;
}

bool run_binary(const Context& ctx) {
  const RunConfig& c = ctx.config;
  const auto eos = c.eos.build();
  const auto problem = build_problem(c.m, c.angular_momentum());
  ctx.report["problem"] = {{"m", problem.m},           {"J", problem.J},
                           {"mu_r", problem.mu_r},     {"eta", problem.eta},
                           {"radius", problem.radius}, {"distance", problem.distance},
                           {"diameter", problem.diameter}};
  const auto sol = solve(eos, problem, c.solver);
  const bool pass = report_solution(ctx, eos, sol, problem.J, problem);
  if (problem.m == 0.5) ctx.report["mirror_asymmetry"] = mirror_asymmetry(sol.rho);
  return pass;
}

bool run_wasserstein(const Context& ctx) {
  const RunConfig& c = ctx.config;
  const auto a = read_atoms_csv(c.cloud_a);
  const auto b = read_atoms_csv(c.cloud_b);
  json& r = ctx.report;
  std::optional<BottleneckResult> res;
  try {
    res = winf_distance(a, b);
  } catch (const IncomparableMeasuresError& e) {
    r["incomparable"] = e.what();
  }
  double delta = c.delta;
  if (delta == 0.0) delta = res && res->distance > 0.0 ? 2.0 * res->distance : 1.0;
  const auto lemma = check_lemma_properties(a, b, delta);
  if (res) {
    r["distance"] = res->distance;
    r["certificate"] = res->certificate;
    r["atoms"] = res->atoms;
    std::ofstream csv(ctx.file("matching.csv"));
    csv << std::setprecision(17) << "a,b,distance\n";
    for (std::size_t i = 0; i < res->matching.size(); ++i)
      csv << i << "," << res->matching[i] << "," << norm(a.atoms[i] - b.atoms[res->matching[i]]) << "\n";
    ctx.say("distance " + format_double(res->distance));
  }
  json checks = json::array();
  for (const auto& ch : lemma.checks)
    checks.push_back({{"name", ch.name},
                      {"applicable", ch.applicable},
                      {"pass", ch.pass},
                      {"lhs", ch.lhs},
                      {"rhs", ch.rhs},
                      {"detail", ch.detail}});
  r["delta"] = delta;
  r["lemma_checks"] = checks;
  r["status"] = lemma.all_pass() ? "pass" : "fail";
  return lemma.all_pass();
}

bool run_rearrange(const Context& ctx) {
  const RunConfig& c = ctx.config;
  const DensityField rho =
      c.field.empty() ? spiked_density(c.cells, c.spikes, c.seed) : DensityField(read_field(c.field));
  const double eps = c.epsilon > 0.0 ? c.epsilon : 32.0 * std::sqrt(3.0) * rho.grid().h;
  const auto out = rearrange_to_bounded(rho, eps, c.atoms);
  const auto& a = out.audit;
  ctx.report["audit"] = {{"epsilon", a.epsilon},
                         {"cube_cells", a.cube_cells},
                         {"cube_edge", a.cube_edge},
                         {"R", a.R},
                         {"tail_mass", a.tail_mass},
                         {"sup_sigma", a.sup_sigma},
                         {"capped_cells", a.capped_cells},
                         {"max_cube_mass_error", a.max_cube_mass_error},
                         {"global_mass_error", a.global_mass_error},
                         {"atoms", a.atoms},
                         {"atomized_distance", a.atomized_distance ? json(*a.atomized_distance) : json()},
                         {"pass", a.pass}};
  ctx.report["status"] = a.pass ? "pass" : "fail";
  write_field(rho.field(), ctx.file("rho"));
  write_field(out.sigma.field(), ctx.file("sigma"));
  ctx.say("R " + format_double(a.R) + " sup sigma " + format_double(a.sup_sigma) + " atomized W " +
          (a.atomized_distance ? format_double(*a.atomized_distance) : std::string("n/a")) + " epsilon " + format_double(eps));
  return a.pass;
}

bool run_audit(const Context& ctx) {
  const RunConfig& c = ctx.config;
  const auto checks = run_audit_suite(c.eos.build(), {c.seed, c.audit_grid, c.audit_instances});
  json arr = json::array();
  std::ofstream csv(ctx.file("audit.csv"));
  csv << std::setprecision(17) << "module,check,pass,measured,bound\n";
  bool all = true;
  for (const auto& ch : checks) {
    all = all && ch.pass;
    arr.push_back({{"module", ch.module},
                   {"check", ch.name},
                   {"pass", ch.pass},
                   {"measured", ch.measured},
                   {"bound", ch.bound},
                   {"detail", ch.detail}});
    csv << ch.module << "," << ch.name << "," << (ch.pass ? "true" : "false") << "," << ch.measured << ","
        << ch.bound << "\n";
    ctx.say(std::string(ch.pass ? "PASS " : "FAIL ") + ch.module + " " + ch.name);
  }
  ctx.report["checks"] = arr;
  ctx.report["status"] = all ? "pass" : "fail";
  return all;
}

}  // namespace

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::single_star: return "single-star";
    case Scenario::binary: return "binary";
    case Scenario::wasserstein: return "wasserstein";
    case Scenario::rearrange: return "rearrange";
    case Scenario::audit: return "audit";
  }
  return "?";
}

Scenario scenario_from_string(const std::string& s) {
  for (Scenario x : {Scenario::single_star, Scenario::binary, Scenario::wasserstein, Scenario::rearrange,
                     Scenario::audit})
    if (s == to_string(x)) return x;
  throw ConfigurationError("unknown scenario '" + s + "'");
}

EquationOfState EosSpec::build() const {
  if (kind == "polytrope") return EquationOfState::polytrope(K, gamma);
  if (kind == "tabulated") return EquationOfState::from_csv(table, density_ceiling);
  throw ConfigurationError("unknown eos kind '" + kind + "'");
}

double RunConfig::angular_momentum() const {
  if (J) return *J;
  if (eta) return m * (1.0 - m) * std::sqrt(*eta);
  throw ConfigurationError("problem.J or problem.eta is required");
}

std::vector<std::string> RunConfig::echo() const {
  std::vector<std::string> lines;
  const unsigned bit = scenario_bit(scenario);
  for (const auto& b : bindings()) {
    if (b.scenarios != kAll && !(b.scenarios & bit)) continue;
    lines.push_back(b.spec.key + " = " + b.get(*this));
  }
  return lines;
}

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& b : bindings()) k.push_back(b.spec);
    return k;
  }();
  return keys;
}

RunConfig parse_config_text(const std::string& text, const std::string& origin, std::optional<Scenario> scenario) {
  RunConfig c;
  std::vector<std::string> bad;
  std::set<std::string> seen;
  std::optional<Scenario> file_scenario;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      bad.push_back(where + "expected 'key = value'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = std::find_if(bindings().begin(), bindings().end(),
                                 [&](const KeyBinding& b) { return b.spec.key == key; });
    if (it == bindings().end()) {
      bad.push_back(where + "unknown key '" + key + "'");
      continue;
    }
    if (!seen.insert(key).second) {
      bad.push_back(where + "duplicate key '" + key + "'");
      continue;
    }
    if (value.empty()) {
      bad.push_back(where + key + ": missing value");
      continue;
    }
    try {
      it->set(c, value);
      if (key == "scenario") file_scenario = c.scenario;
    } catch (const ConfigurationError& e) {
      bad.push_back(where + key + ": " + e.what());
    }
  }
  if (scenario) {
    if (file_scenario && *file_scenario != *scenario)
      bad.push_back(origin + ": scenario '" + to_string(*file_scenario) + "' does not match the subcommand '" +
                    to_string(*scenario) + "'");
    c.scenario = *scenario;
  }
  for (const auto& v : violations(c)) bad.push_back(origin + ": " + v);
  if (!bad.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw ConfigurationError(msg);
  }
  return c;
}

RunConfig parse_config(const std::filesystem::path& path, std::optional<Scenario> scenario) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  RunConfig c = parse_config_text(buf.str(), path.string(), scenario);
  // input paths are relative to the config file
  const auto base = path.parent_path();
  for (auto* p : {&c.eos.table, &c.cloud_a, &c.cloud_b, &c.field})
    if (!p->empty() && p->is_relative()) *p = base / *p;
  return c;
}

void validate(const RunConfig& config) {
  const auto bad = violations(config);
  if (bad.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& b : bad) msg += "\n  " + b;
  throw ConfigurationError(msg);
}

std::vector<SummaryRow> export_summary(const EquilibriumSolution& s, const std::optional<BinaryProblem>& problem,
                                       const UnitScales& units) {
  std::vector<SummaryRow> rows;
  auto add = [&](const std::string& q, double v, const Dim& d) {
    rows.push_back({q, v, unit_label(d, units), v * std::pow(units.mass, d.mass) * std::pow(units.length, d.length)});
  };
  const EnergyLedger& L = s.ledger;
  add("U", L.internal, kEnergy);
  add("G", L.interaction, kEnergy);
  add("T_J", L.rotational, kEnergy);
  add("E_J", L.total, kEnergy);
  add("mass", L.mass, kMass);
  add("moment_of_inertia", L.moment_of_inertia, kInertia);
  add("omega", L.omega, kOmega);
  add("J", s.problem.J, kAngular);
  for (std::size_t i = 0; i < s.lambda.size(); ++i) add("lambda_" + std::to_string(i), s.lambda[i], kSpecific);
  for (std::size_t i = 0; i < s.component_mass.size(); ++i)
    add("component_mass_" + std::to_string(i), s.component_mass[i], kMass);
  add("support_margin", s.support_margin, kLength);
  add("support_components", double(s.support_components), kNone);
  add("el_residual_sup", s.el_residual_sup, kSpecific);
  add("ep_residual_sup", s.ep_residual_sup, kForceDensity);
  add("iterations", double(s.iterations), kNone);
  add("grid_spacing", s.rho.grid().h, kLength);
  if (problem) {
    add("m", problem->m, kNone);
    add("mu_r", problem->mu_r, kNone);
    add("eta", problem->eta, kLength);
    add("domain_radius", problem->radius, kLength);
    add("dist", problem->distance, kLength);
    add("diam", problem->diameter, kLength);
  }
  return rows;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot write " + path.string());
  out << std::setprecision(17) << "quantity,value,units,display_value\n";
  for (const auto& r : rows) out << r.quantity << "," << r.value << "," << r.units << "," << r.display_value << "\n";
}

int run(const RunConfig& config, const RunOptions& options) {
  if (config.deterministic) set_thread_count(1);
  std::filesystem::create_directories(config.out_dir);
  json report;
  report["scenario"] = to_string(config.scenario);
  json cfg = json::object();
  for (const auto& line : config.echo()) {
    const auto eq = line.find(" = ");
    cfg[line.substr(0, eq)] = line.substr(eq + 3);
  }
  report["config"] = cfg;
  if (options.out)
    for (const auto& line : config.echo()) *options.out << line << "\n";

  const Context ctx{config, options, report};
  const auto start = std::chrono::steady_clock::now();
  int code = 0;
  try {
    bool pass = false;
    switch (config.scenario) {
      case Scenario::single_star: pass = run_single_star(ctx); break;
      case Scenario::binary: pass = run_binary(ctx); break;
      case Scenario::wasserstein: pass = run_wasserstein(ctx); break;
      case Scenario::rearrange: pass = run_rearrange(ctx); break;
      case Scenario::audit: pass = run_audit(ctx); break;
    }
    report["pass"] = pass;
    code = pass ? 0 : 1;
  } catch (const std::exception& e) {
    report["status"] = "failed";
    report["pass"] = false;
    report["error"] = {{"type", error_type(e)}, {"message", e.what()}};
    if (options.out) *options.out << "error (" << error_type(e) << "): " << e.what() << "\n";
    code = 2;
  }
  if (!config.deterministic) {
    report["threads"] = thread_count();
    report["elapsed_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  std::ofstream out(config.out_dir / "report.json");
  if (!out) throw ConfigurationError("cannot write " + (config.out_dir / "report.json").string());
  out << report.dump(2) << "\n";
  return code;
}

}  // namespace binaria
