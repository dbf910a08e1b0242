#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hypospec/assembly.hpp"
#include "hypospec/filtration.hpp"

namespace hypospec::asymptotics {

/// v ~ coefficient * u^exponent over the fitted window.
struct PowerFit {
  double exponent = 0.0;
  double coefficient = 0.0;
  double exponent_stderr = 0.0;
  double coefficient_stderr = 0.0;
  double u_min = 0.0;
  double u_max = 0.0;
  double residual = 0.0;  // max |fit - v| / v over the window
  int count = 0;
};

inline constexpr int kMinFitSamples = 6;

/// Least squares on (log u, log v).
PowerFit fit_power_law(std::span<const double> u, std::span<const double> v);

/// Gamma(k / 2) for a positive integer k via k! and the half-integer closed
/// form (2j)! sqrt(pi) / (4^j j!).
double gamma_half(int twice_x);

/// Integral of s / sinh(s) over the real line by composite Simpson.
double sech_moment_quadrature(int panels = 20000);
/// Heat-kernel diagonal of -(X^2 + Y^2) on the Heisenberg group with
/// [X, Y] = Z, in exponential coordinates, at t = 1.
double heisenberg_c0();

enum class CoefficientKind { kElliptic, kHeisenberg, kZeroMeasure, kUnknown };
const char* to_string(CoefficientKind kind);
CoefficientKind coefficient_kind_from_string(const std::string& s);

struct TheoryCoefficient {
  CoefficientKind kind = CoefficientKind::kUnknown;
  std::optional<double> integral_eps0;
  std::optional<double> spectral_coeff;  // integral_eps0 / Gamma(Q_L / 2 + 1)
  int Q_L = 0;
};

/// Leading Weyl coefficient from the audit. Elliptic: (4 pi)^(-n/2) times the
/// integral of det(sum X_i X_i^T)^(-1/2) dx. Three-dimensional contact case
/// with two fields and Q = 4 everywhere: c0 / |det(X1, X2, [X1, X2])|
/// integrated over dx. Measure-zero F_{Q_L}: zero. Otherwise unknown.
TheoryCoefficient theoretical_coefficient(const assembly::Scenario& scenario, const filtration::AuditReport& audit);

struct KaramataReport {
  double trace_exponent = 0.0;
  double count_exponent = 0.0;
  double exponent_gap = 0.0;     // |p_T - p_N| / p_N
  double predicted_trace = 0.0;  // C_N Gamma(p_N + 1)
  double coefficient_gap = 0.0;  // |C_T - predicted| / C_T
  double exponent_tol = 0.0;
  double coefficient_tol = 0.0;
  bool exponent_pass = false;
  bool coefficient_pass = false;
  bool pass = false;
};

/// Tr exp(-tH) ~ C_T t^-p against N(lambda) ~ C_N lambda^p with
/// C_T = C_N Gamma(p + 1). The trace fit is in the variable u = 1/t.
KaramataReport karamata_check(const PowerFit& trace_fit, const PowerFit& count_fit, double exponent_tol,
                              double coefficient_tol);

/// Counting-fit window: 30 <= N <= 0.05 dim.
struct CountWindow {
  double min_count = 30.0;
  double max_fraction = 0.05;
};
/// Lower end of the trace window, (kappa h_max)^(2 / tau_L).
double trace_window_tmin(double h_max, int tau_L, double kappa = 4.0);

struct Check {
  std::string name;
  double expected = 0.0;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string relation;  // "abs", "rel", "le", "ge"
  bool pass = false;
  std::string note;
};

struct Verdict {
  std::string scenario;
  std::vector<Check> checks;
  std::vector<std::string> diagnostics;
  bool overall = false;

  void add(Check c);
  /// overall = conjunction of checks (false when there are none).
  void finalize();
};

Check check_abs(std::string name, double expected, double measured, double tol);
Check check_rel(std::string name, double expected, double measured, double tol);
Check check_le(std::string name, double bound, double measured);
Check check_ge(std::string name, double bound, double measured);

std::string verdict_to_json(const Verdict& v);
std::string verdict_checks_csv(const Verdict& v);

}  // namespace hypospec::asymptotics
