#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "binaria/eos.hpp"

namespace binaria {

struct SuiteCheck {
  std::string module;
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double bound = 0.0;
  std::string detail;
};

struct AuditOptions {
  std::uint64_t seed = 1;
  std::size_t grid = 24;  // cells per edge for the solver checks
  int instances = 20;     // random instances per sampled property
};

/// Invariant suites of every module on small instances: EOS calculus, field
/// functionals, potential oracles, W-infinity exactness and lemma properties,
/// rearrangement, and a converged single star with its residuals.
std::vector<SuiteCheck> run_audit_suite(const EquationOfState& eos, const AuditOptions& options = {});

}  // namespace binaria
