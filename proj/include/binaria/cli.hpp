#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "binaria/eos.hpp"
#include "binaria/solver.hpp"

namespace binaria {

enum class Scenario { single_star, binary, wasserstein, rearrange, audit };
const char* to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

struct EosSpec {
  std::string kind = "polytrope";  // polytrope | tabulated
  double K = 1.0;
  double gamma = 2.0;
  std::filesystem::path table;  // two-column CSV density,pressure
  double density_ceiling = EquationOfState::default_density_ceiling;

  EquationOfState build() const;
};

/// Display-only conversion. Code units have G = 1, so a mass scale M and a
/// length scale L fix every other unit (time sqrt(L^3/M)).
struct UnitScales {
  double mass = 1.0;
  double length = 1.0;
  std::string mass_name = "M";
  std::string length_name = "L";
};

struct RunConfig {
  Scenario scenario = Scenario::single_star;
  EosSpec eos;

  // problem
  double m = 0.5;
  std::optional<double> J;
  std::optional<double> eta;  // alternative to J: J = m(1-m) sqrt(eta)
  double mass = 1.0;          // single-star mass

  SolverConfig solver;

  std::filesystem::path out_dir = "binaria-out";
  bool deterministic = false;
  UnitScales units;

  // wasserstein
  std::filesystem::path cloud_a;
  std::filesystem::path cloud_b;
  double delta = 0.0;  // 0 uses twice the distance

  // rearrange
  std::filesystem::path field;  // empty: synthetic spiked field
  double epsilon = 0.0;         // 0 uses 32 sqrt(3) h (cubes of 16 cells)
  std::size_t atoms = 256;
  std::size_t cells = 32;
  int spikes = 3;

  // audit
  std::size_t audit_grid = 24;
  int audit_instances = 20;

  std::uint64_t seed = 1;

  /// The angular momentum implied by J or eta.
  double angular_momentum() const;
  /// "key = value" for every key relevant to the scenario, defaults included.
  std::vector<std::string> echo() const;
};

/// One line of the schema: dotted key, value type and a short description.
struct ConfigKey {
  std::string key;
  std::string type;
  std::string help;
};
const std::vector<ConfigKey>& config_schema();

/// Flat "section.key = value" text; '#' starts a comment. Unknown, duplicate
/// and malformed keys and every failed bound are collected into a single
/// ConfigurationError. A `scenario` argument overrides the file's scenario key
/// and must not contradict it.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>",
                            std::optional<Scenario> scenario = std::nullopt);
RunConfig parse_config(const std::filesystem::path& path, std::optional<Scenario> scenario = std::nullopt);

/// Throws ConfigurationError listing every violated requirement.
void validate(const RunConfig& config);

struct SummaryRow {
  std::string quantity;
  double value = 0.0;
  std::string units;  // in terms of the code mass and length units
  double display_value = 0.0;
};

/// One row per scalar of the solution, plus the domain geometry when a binary
/// problem is given.
std::vector<SummaryRow> export_summary(const EquilibriumSolution& solution,
                                       const std::optional<BinaryProblem>& problem = std::nullopt,
                                       const UnitScales& units = {});
void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path);

struct RunOptions {
  bool verbose = false;
  std::ostream* out = nullptr;  // echo and result lines; null for silence
  std::ostream* log = nullptr;  // verbose progress
};

/// Runs the scenario and writes report.json, summary.csv and field files into
/// config.out_dir. Returns 0 when the scenario's audit passes, 1 when it ran
/// but failed its audit, 2 when it raised (the report then carries the error).
int run(const RunConfig& config, const RunOptions& options = {});

}  // namespace binaria
