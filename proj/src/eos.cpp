#include "binaria/eos.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "binaria/common.hpp"

namespace binaria {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double integrate_segment(const auto& f, double a, double b) {
  using boost::math::quadrature::gauss;
  if (b <= a) return 0.0;
  // The log-space integrand is exp(cubic) on a knot interval. Panels of width
  // <= 0.25 make 20- and 30-point Gauss agree to round-off; disagreement means
  // the table produced a wild interpolant.
  const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / 0.25)));
  const double w = (b - a) / panels;
  double v20 = 0.0;
  double v30 = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * w;
    const double hi = p + 1 == panels ? b : lo + w;
    v20 += gauss<double, 20>::integrate(f, lo, hi);
    v30 += gauss<double, 30>::integrate(f, lo, hi);
  }
  if (!std::isfinite(v30)) throw NumericError("pressure integral quadrature produced a non-finite value");
  if (std::abs(v30 - v20) > 1e-11 * std::abs(v30))
    throw NumericError("pressure integral quadrature did not converge on [" + std::to_string(a) + ", " +
                       std::to_string(b) + "]: 20/30-point values " + std::to_string(v20) + " vs " +
                       std::to_string(v30));
  return v30;
}

bool parse_number(const std::string& tok, double& out) {
  std::istringstream is(tok);
  is >> out;
  if (!is) return false;
  is >> std::ws;
  return is.eof();
}

}  // namespace

EquationOfState EquationOfState::polytrope(double K, double gamma) {
  if (!(K > 0.0) || !std::isfinite(K)) throw DomainError("polytrope: K must be positive and finite");
  if (!(gamma > 4.0 / 3.0) || !std::isfinite(gamma))
    throw DomainError("polytrope: adiabatic index gamma must exceed 4/3");
  EquationOfState e;
  e.kind_ = Kind::polytrope;
  e.K_ = K;
  e.gamma_ = gamma;
  return e;
}

EquationOfState EquationOfState::tabulated(std::vector<std::pair<double, double>> samples,
                                           double density_ceiling) {
  if (!samples.empty() && samples.front().first == 0.0) {
    if (samples.front().second != 0.0) throw DomainError("tabulated EOS: P(0) must be 0");
    samples.erase(samples.begin());
  }
  if (samples.size() < 2) throw DomainError("tabulated EOS: need at least two samples with positive density");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto [rho, p] = samples[i];
    if (!(rho > 0.0) || !(p > 0.0) || !std::isfinite(rho) || !std::isfinite(p))
      throw DomainError("tabulated EOS: densities and pressures must be positive and finite");
    if (i > 0 && !(rho > samples[i - 1].first))
      throw DomainError("tabulated EOS: density column must be strictly increasing");
    if (i > 0 && !(p > samples[i - 1].second))
      throw DomainError("tabulated EOS: pressure must be strictly increasing (F1)");
  }
  if (!(density_ceiling > 0.0)) throw DomainError("tabulated EOS: density ceiling must be positive");

  EquationOfState e;
  e.kind_ = Kind::tabulated;
  e.ceiling_ = density_ceiling;
  e.samples_ = std::move(samples);
  const std::size_t n = e.samples_.size();
  e.log_rho_.resize(n);
  e.log_p_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    e.log_rho_[i] = std::log(e.samples_[i].first);
    e.log_p_[i] = std::log(e.samples_[i].second);
  }
  std::vector<double> secant(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i)
    secant[i] = (e.log_p_[i + 1] - e.log_p_[i]) / (e.log_rho_[i + 1] - e.log_rho_[i]);

  // Fritsch-Butland weighted harmonic means keep the log-log cubic monotone.
  e.slope_.assign(n, 0.0);
  e.slope_.front() = secant.front();
  e.slope_.back() = secant.back();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = e.log_rho_[i] - e.log_rho_[i - 1];
    const double h1 = e.log_rho_[i + 1] - e.log_rho_[i];
    const double w1 = 2.0 * h1 + h0;
    const double w2 = h1 + 2.0 * h0;
    e.slope_[i] = (w1 + w2) / (w1 / secant[i - 1] + w2 / secant[i]);
  }

  e.head_exponent_ = e.slope_.front();
  if (!(e.head_exponent_ > 1.0))
    throw DomainError("tabulated EOS: low-density power law exponent " + std::to_string(e.head_exponent_) +
                      " <= 1 makes A(rho) diverge");

  e.cumulative_.assign(n, 0.0);
  e.cumulative_[0] = e.samples_[0].second / (e.samples_[0].first * (e.head_exponent_ - 1.0));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    // In x = log t the integrand P(t) t^-2 dt becomes exp(log P(x) - x) dx.
    auto f = [&e](double x) { return std::exp(e.log_pressure(x) - x); };
    e.cumulative_[i + 1] = e.cumulative_[i] + integrate_segment(f, e.log_rho_[i], e.log_rho_[i + 1]);
  }
  e.knot_enthalpy_.resize(n);
  for (std::size_t i = 0; i < n; ++i) e.knot_enthalpy_[i] = e.cumulative_[i] + e.samples_[i].second / e.samples_[i].first;
  return e;
}

EquationOfState EquationOfState::from_csv(const std::filesystem::path& path, double density_ceiling) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open EOS table " + path.string());
  std::vector<std::pair<double, double>> rows;
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    double rho = 0.0;
    double p = 0.0;
    const bool ok = comma != std::string::npos && parse_number(line.substr(0, comma), rho) &&
                    parse_number(line.substr(comma + 1), p);
    if (!ok) {
      if (first) {
        first = false;
        continue;
      }
      throw ConfigurationError(path.string() + ":" + std::to_string(lineno) + ": expected 'density,pressure'");
    }
    first = false;
    rows.emplace_back(rho, p);
  }
  return tabulated(std::move(rows), density_ceiling);
}

double EquationOfState::table_max_density() const {
  return kind_ == Kind::polytrope ? kInf : samples_.back().first;
}

void EquationOfState::check_density(double s) const {
  if (!(s >= 0.0)) throw DomainError("EOS: density must be non-negative");
  if (kind_ == Kind::tabulated && s > samples_.back().first)
    throw RangeError("EOS: density " + std::to_string(s) + " beyond tabulated range " +
                     std::to_string(samples_.back().first));
}

std::size_t EquationOfState::segment_of(double log_s) const {
  const auto it = std::upper_bound(log_rho_.begin(), log_rho_.end(), log_s);
  const auto idx = static_cast<std::size_t>(std::distance(log_rho_.begin(), it));
  return std::min(idx == 0 ? 0 : idx - 1, log_rho_.size() - 2);
}

double EquationOfState::log_pressure(double log_s, double* dlogp) const {
  if (log_s <= log_rho_.front()) {
    if (dlogp) *dlogp = head_exponent_;
    return log_p_.front() + head_exponent_ * (log_s - log_rho_.front());
  }
  const std::size_t i = segment_of(log_s);
  const double h = log_rho_[i + 1] - log_rho_[i];
  const double t = (log_s - log_rho_[i]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double y0 = log_p_[i];
  const double y1 = log_p_[i + 1];
  const double m0 = slope_[i] * h;
  const double m1 = slope_[i + 1] * h;
  if (dlogp) {
    const double d = (6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * m0 + (-6 * t2 + 6 * t) * y1 + (3 * t2 - 2 * t) * m1;
    *dlogp = d / h;
  }
  return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * m1;
}

double EquationOfState::pressure(double s) const {
  check_density(s);
  if (s == 0.0) return 0.0;
  if (kind_ == Kind::polytrope) return K_ * std::pow(s, gamma_);
  return std::exp(log_pressure(std::log(s)));
}

double EquationOfState::pressure_derivative(double s) const {
  check_density(s);
  if (kind_ == Kind::polytrope) return s == 0.0 ? 0.0 : K_ * gamma_ * std::pow(s, gamma_ - 1.0);
  if (s == 0.0) return head_exponent_ > 1.0 ? 0.0 : kInf;
  double dlogp = 0.0;
  const double p = std::exp(log_pressure(std::log(s), &dlogp));
  return p * dlogp / s;
}

double EquationOfState::pressure_integral(double s) const {
  if (s == 0.0) return 0.0;
  if (kind_ == Kind::polytrope) return K_ * std::pow(s, gamma_ - 1.0) / (gamma_ - 1.0);
  const double ls = std::log(s);
  if (ls <= log_rho_.front()) return cumulative_.front() * std::exp((head_exponent_ - 1.0) * (ls - log_rho_.front()));
  const std::size_t i = segment_of(ls);
  auto f = [this](double x) { return std::exp(log_pressure(x) - x); };
  return cumulative_[i] + integrate_segment(f, log_rho_[i], ls);
}

double EquationOfState::energy_density(double s) const {
  check_density(s);
  if (kind_ == Kind::polytrope) return K_ / (gamma_ - 1.0) * std::pow(s, gamma_);
  return s * pressure_integral(s);
}

double EquationOfState::enthalpy(double s) const {
  check_density(s);
  if (s == 0.0) return 0.0;
  if (kind_ == Kind::polytrope) return K_ * gamma_ / (gamma_ - 1.0) * std::pow(s, gamma_ - 1.0);
  return pressure_integral(s) + pressure(s) / s;
}

double EquationOfState::enthalpy_derivative(double s) const {
  check_density(s);
  if (s == 0.0) return kind_ == Kind::polytrope && gamma_ < 2.0 ? kInf : 0.0;
  return pressure_derivative(s) / s;
}

double EquationOfState::inverse_enthalpy(double y) const {
  if (!(y >= 0.0)) throw DomainError("inverse enthalpy: argument must be non-negative");
  if (y == 0.0) return 0.0;
  if (kind_ == Kind::polytrope) {
    const double s = std::pow(y * (gamma_ - 1.0) / (K_ * gamma_), 1.0 / (gamma_ - 1.0));
    if (s > ceiling_)
      throw RangeError("inverse enthalpy: root above density ceiling " + std::to_string(ceiling_));
    return s;
  }

  // Below the first knot A' is the closed-form power law of the head.
  const double k = head_exponent_;
  const double rho0 = samples_.front().first;
  const double p0 = samples_.front().second;
  const double y0 = p0 * k / ((k - 1.0) * rho0);
  if (y <= y0) return rho0 * std::pow(y / y0, 1.0 / (k - 1.0));

  const double top = std::min(ceiling_, samples_.back().first);
  if (enthalpy(top) < y)
    throw RangeError("inverse enthalpy: no bracket for y=" + std::to_string(y) + " below density " +
                     std::to_string(top));
  // A' is known at the knots, so the bracket is one knot interval.
  const auto it = std::upper_bound(knot_enthalpy_.begin(), knot_enthalpy_.end(), y);
  const auto seg = static_cast<std::size_t>(std::distance(knot_enthalpy_.begin(), it));
  double lo = samples_[seg - 1].first;
  double hi = std::min(top, seg < samples_.size() ? samples_[seg].first : top);
  double s = 0.5 * (lo + hi);
  for (int it2 = 0; it2 < 200; ++it2) {
    const double f = enthalpy(s) - y;
    if (f == 0.0) break;
    (f < 0 ? lo : hi) = s;
    const double df = enthalpy_derivative(s);
    double next = df > 0.0 ? s - f / df : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 4e-16 * s || hi - lo <= 4e-16 * hi) {
      s = next;
      break;
    }
    s = next;
  }
  return s;
}

std::string EquationOfState::describe() const {
  std::ostringstream os;
  os.precision(17);
  if (kind_ == Kind::polytrope)
    os << "polytrope(K=" << K_ << ", gamma=" << gamma_ << ")";
  else
    os << "tabulated(" << samples_.size() << " samples, rho in [" << samples_.front().first << ", "
       << samples_.back().first << "])";
  return os.str();
}

AssumptionReport audit_assumptions(const EquationOfState& eos, const AssumptionLadder& cfg) {
  AssumptionReport r;
  r.f5_lambda = cfg.f5_lambda;
  const double top = std::min(cfg.high, eos.table_max_density());
  const double bottom = std::min(cfg.low, top);
  const int per_decade = std::max(cfg.points_per_decade, 8);
  const double decades = std::log10(top / bottom);
  const int n = std::max(2, static_cast<int>(std::ceil(decades * per_decade)) + 1);
  for (int i = 0; i < n; ++i) r.ladder.push_back(bottom * std::pow(top / bottom, double(i) / (n - 1)));

  auto ratio43 = [&](double s) { return eos.pressure(s) * std::pow(s, -4.0 / 3.0); };
  auto aprime13 = [&](double s) { return eos.enthalpy(s) * std::pow(s, -1.0 / 3.0); };
  r.f2_ratio_at_bottom = ratio43(r.ladder.front());
  r.f3_ratio_at_top = ratio43(r.ladder.back());
  r.aprime_low_ratio = aprime13(r.ladder.front());
  r.aprime_high_ratio = aprime13(r.ladder.back());

  // F5 ratio: (int_{lambda s}^{s}) / (int_0^{lambda s}) of P t^-2, maximised over the top decade.
  const double lam = cfg.f5_lambda;
  double f5 = 0.0;
  bool f5_finite = true;
  for (double s : r.ladder) {
    if (s < top / 10.0) continue;
    // A'(s) - P(s)/s recovers int_0^s P t^-2 dt for either kind.
    const double full = eos.enthalpy(s) - eos.pressure(s) / s;
    const double part = eos.enthalpy(lam * s) - eos.pressure(lam * s) / (lam * s);
    const double v = (full - part) / part;
    if (!std::isfinite(v)) f5_finite = false;
    f5 = std::max(f5, v);
  }

  if (eos.kind() == EquationOfState::Kind::polytrope) {
    r.f1_ok = r.f2_ok = r.f3_ok = r.f4_ok = true;
    const double q = std::pow(lam, eos.gamma() - 1.0);
    r.f5_ratio_limsup_estimate = (1.0 - q) / q;
    return r;
  }

  bool increasing = eos.pressure(0.0) == 0.0;
  bool positive_slope = true;
  for (std::size_t i = 0; i < r.ladder.size(); ++i) {
    if (i > 0 && !(eos.pressure(r.ladder[i]) > eos.pressure(r.ladder[i - 1]))) increasing = false;
    if (!(eos.pressure_derivative(r.ladder[i]) > 0.0)) positive_slope = false;
  }
  r.f1_ok = increasing;
  r.f4_ok = positive_slope;

  // The ratio must fall monotonically down the bottom decade. It is taken to
  // tend to zero when it ends below threshold or keeps a positive log-log slope.
  bool falling = true;
  std::size_t decade_top = 0;
  for (std::size_t i = 1; i < r.ladder.size() && r.ladder[i] <= 10.0 * bottom; ++i) {
    if (!(ratio43(r.ladder[i - 1]) <= ratio43(r.ladder[i]))) falling = false;
    decade_top = i;
  }
  double slope = 0.0;
  if (decade_top > 0)
    slope = std::log(ratio43(r.ladder[decade_top]) / r.f2_ratio_at_bottom) /
            std::log(r.ladder[decade_top] / r.ladder.front());
  r.f2_ok = falling && (r.f2_ratio_at_bottom <= cfg.f2_threshold || slope >= cfg.f2_min_slope);
  r.f3_ok = r.f3_ratio_at_top > cfg.f3_threshold;
  if (f5_finite) r.f5_ratio_limsup_estimate = f5;
  return r;
}

EnthalpyDerivativeCheck pressure_of_enthalpy_derivative_check(const EquationOfState& eos, double y, double h) {
  if (!(y > 0.0) || !(h > 0.0) || !(h < y)) throw PreconditionError("derivative check requires 0 < h < y");
  EnthalpyDerivativeCheck c;
  c.fd_slope = (eos.pressure(eos.inverse_enthalpy(y + h)) - eos.pressure(eos.inverse_enthalpy(y - h))) / (2.0 * h);
  c.phi = eos.inverse_enthalpy(y);
  c.gap = std::abs(c.fd_slope - c.phi);
  return c;
}

EnthalpyDerivativeCheck pressure_of_enthalpy_right_derivative(const EquationOfState& eos, double y, double h) {
  if (!(y >= 0.0) || !(h > 0.0)) throw PreconditionError("right derivative check requires y >= 0, h > 0");
  EnthalpyDerivativeCheck c;
  c.fd_slope = (eos.pressure(eos.inverse_enthalpy(y + h)) - eos.pressure(eos.inverse_enthalpy(y))) / h;
  c.phi = eos.inverse_enthalpy(y);
  c.gap = std::abs(c.fd_slope - c.phi);
  return c;
}

}  // namespace binaria
