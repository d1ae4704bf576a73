#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace binaria {

/// Barotropic pressure law P(rho) together with the derived quantities
///   A(s)  = s * int_0^s P(t) t^-2 dt        (internal energy density)
///   A'(s) = int_0^s P(t) t^-2 dt + P(s)/s   (specific enthalpy)
///   phi   = (A')^-1                         (inverse enthalpy)
///
/// Two kinds are supported. A polytrope P = K rho^gamma with gamma > 4/3 uses
/// closed forms throughout. A tabulated law interpolates (rho, P) samples with a
/// monotone cubic in log-log space, extends below the first sample with the
/// power law of the first segment, and refuses to extrapolate above the last.
/// Instances are immutable and safe to share between threads.
class EquationOfState {
 public:
  enum class Kind { polytrope, tabulated };

  static constexpr double default_density_ceiling = 1e6;

  static EquationOfState polytrope(double K, double gamma);
  /// samples: strictly increasing densities, strictly increasing pressures.
  /// A leading (0, 0) row is accepted and dropped.
  static EquationOfState tabulated(std::vector<std::pair<double, double>> samples,
                                   double density_ceiling = default_density_ceiling);
  /// Two-column CSV (density, pressure); a non-numeric first line is treated as a header.
  static EquationOfState from_csv(const std::filesystem::path& path,
                                  double density_ceiling = default_density_ceiling);

  Kind kind() const { return kind_; }
  double K() const { return K_; }
  double gamma() const { return gamma_; }
  /// Largest density phi may return.
  double density_ceiling() const { return ceiling_; }
  /// Upper end of the tabulated range (infinity for a polytrope).
  double table_max_density() const;
  const std::vector<std::pair<double, double>>& samples() const { return samples_; }

  double pressure(double s) const;
  double pressure_derivative(double s) const;
  double energy_density(double s) const;
  double enthalpy(double s) const;
  /// A''(s) = P'(s)/s for s > 0.
  double enthalpy_derivative(double s) const;
  double inverse_enthalpy(double y) const;

  std::string describe() const;

 private:
  EquationOfState() = default;

  void check_density(double s) const;
  // int_0^s P(t) t^-2 dt
  double pressure_integral(double s) const;
  std::size_t segment_of(double log_s) const;
  double log_pressure(double log_s, double* dlogp = nullptr) const;

  Kind kind_ = Kind::polytrope;
  double K_ = 1.0;
  double gamma_ = 2.0;
  double ceiling_ = default_density_ceiling;

  std::vector<std::pair<double, double>> samples_;
  std::vector<double> log_rho_;
  std::vector<double> log_p_;
  std::vector<double> slope_;       // d log P / d log rho at knots
  std::vector<double> cumulative_;  // int_0^{rho_i} P t^-2 dt
  std::vector<double> knot_enthalpy_;
  double head_exponent_ = 0.0;
};

struct AssumptionLadder {
  double low = 1e-8;
  double high = 1e8;
  int points_per_decade = 8;
  double f2_threshold = 1e-3;
  /// Alternative F2 pass: log-log slope of P rho^-4/3 over the bottom decade.
  double f2_min_slope = 0.01;
  double f3_threshold = 1e3;
  double f5_lambda = 0.5;
};

struct AssumptionReport {
  bool f1_ok = false;
  bool f2_ok = false;
  bool f3_ok = false;
  bool f4_ok = false;
  /// Estimate of the F5 limsup at the configured lambda; empty means unbounded.
  std::optional<double> f5_ratio_limsup_estimate;
  double f5_lambda = 0.5;
  double f2_ratio_at_bottom = 0.0;
  double f3_ratio_at_top = 0.0;
  double aprime_low_ratio = 0.0;   // A'(rho) rho^-1/3 at ladder bottom
  double aprime_high_ratio = 0.0;  // A'(rho) rho^-1/3 at ladder top
  std::vector<double> ladder;
};

/// Numerically audits (F1)-(F5). Never throws for a valid ladder; the polytrope
/// kind reports F1-F4 true since they hold identically for gamma > 4/3.
AssumptionReport audit_assumptions(const EquationOfState& eos, const AssumptionLadder& ladder = {});

struct EnthalpyDerivativeCheck {
  double fd_slope = 0.0;
  double phi = 0.0;
  double gap = 0.0;
};

/// Central difference of y -> P(phi(y)) with step h, compared against phi(y).
EnthalpyDerivativeCheck pressure_of_enthalpy_derivative_check(const EquationOfState& eos, double y,
                                                              double h);
/// Right-sided variant, valid down to y = 0.
EnthalpyDerivativeCheck pressure_of_enthalpy_right_derivative(const EquationOfState& eos, double y,
                                                              double h);

}  // namespace binaria
