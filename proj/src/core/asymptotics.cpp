#include "hypospec/asymptotics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <json.hpp>

#include "hypospec/error.hpp"
#include "hypospec/stats.hpp"

namespace hypospec::asymptotics {

PowerFit fit_power_law(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DimensionError("fit samples differ in length");
  if (static_cast<int>(u.size()) < kMinFitSamples) throw Error(ErrorCode::kInvalidArgument, "fit needs at least 6 samples");
  std::vector<double> lu(u.size()), lv(v.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!(u[i] > 0.0) || !(v[i] > 0.0)) throw Error(ErrorCode::kInvalidArgument, "fit needs positive samples");
    lu[i] = std::log(u[i]);
    lv[i] = std::log(v[i]);
  }
  const LinearFit lf = linear_regression(lu, lv);
  PowerFit f;
  f.exponent = lf.slope;
  f.coefficient = std::exp(lf.intercept);
  f.exponent_stderr = lf.slope_stderr;
  f.coefficient_stderr = f.coefficient * lf.intercept_stderr;
  f.u_min = *std::min_element(u.begin(), u.end());
  f.u_max = *std::max_element(u.begin(), u.end());
  f.count = lf.count;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double model = f.coefficient * std::pow(u[i], f.exponent);
    f.residual = std::max(f.residual, std::abs(model - v[i]) / v[i]);
  }
  return f;
}

double gamma_half(int twice_x) {
  if (twice_x < 1) throw Error(ErrorCode::kInvalidArgument, "gamma_half needs a positive argument");
  if (twice_x % 2 == 0) {
    double f = 1.0;
    for (int i = 2; i < twice_x / 2; ++i) f *= i;
    return f;
  }
  const int j = twice_x / 2;  // Gamma(j + 1/2)
  double r = std::sqrt(std::numbers::pi);
  for (int i = 1; i <= j; ++i) r *= (2.0 * i) * (2.0 * i - 1.0) / (4.0 * i);
  return r;
}

double sech_moment_quadrature(int panels) {
  if (panels % 2) ++panels;
  const double a = 0.0, b = 80.0;
  const double h = (b - a) / panels;
  auto f = [](double s) { return s == 0.0 ? 1.0 : s / std::sinh(s); };
  double sum = f(a) + f(b);
  for (int i = 1; i < panels; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return 2.0 * sum * h / 3.0;  // even integrand
}

double heisenberg_c0() {
  // Fourier transform in the central variable turns the operator into a
  // Landau Hamiltonian with field |s|, whose diagonal is |s| / (4 pi sinh|s|).
  return sech_moment_quadrature() / (8.0 * std::numbers::pi * std::numbers::pi);
}

const char* to_string(CoefficientKind kind) {
  switch (kind) {
    case CoefficientKind::kElliptic: return "elliptic-closed-form";
    case CoefficientKind::kHeisenberg: return "heisenberg-oracle";
    case CoefficientKind::kZeroMeasure: return "zero-measure";
    case CoefficientKind::kUnknown: return "unknown";
  }
  return "unknown";
}

CoefficientKind coefficient_kind_from_string(const std::string& s) {
  if (s == "elliptic-closed-form") return CoefficientKind::kElliptic;
  if (s == "heisenberg-oracle") return CoefficientKind::kHeisenberg;
  if (s == "zero-measure") return CoefficientKind::kZeroMeasure;
  if (s == "unknown") return CoefficientKind::kUnknown;
  throw ConfigError("unknown coefficient kind '" + s + "'");
}

TheoryCoefficient theoretical_coefficient(const assembly::Scenario& scenario, const filtration::AuditReport& audit) {
  TheoryCoefficient tc;
  tc.Q_L = audit.Q_L;
  const int n = audit.dim;
  const auto fields = scenario.principal_fields();
  if (!audit.failures.empty() || audit.points.empty()) return tc;
  const filtration::FkMass* top = audit.find_fk(audit.Q_L);
  if (top && top->measure_zero_candidate) {
    tc.kind = CoefficientKind::kZeroMeasure;
    tc.integral_eps0 = 0.0;
    tc.spectral_coeff = 0.0;
    return tc;
  }
  const bool all_elliptic = std::all_of(audit.points.begin(), audit.points.end(),
                                        [&](const auto& p) { return p.filtration.Q == n; });
  const bool all_contact = n == 3 && fields.size() == 2 &&
                           std::all_of(audit.points.begin(), audit.points.end(),
                                       [](const auto& p) { return p.filtration.Q == 4; });
  if (!all_elliptic && !all_contact) return tc;

  double integral = 0.0;
  if (all_elliptic) {
    for (const auto& p : audit.points) {
      Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
      for (const auto& f : fields) {
        const auto v = f.evaluate(p.x);
        const Eigen::Map<const Eigen::VectorXd> x(v.data(), n);
        g += x * x.transpose();
      }
      const double h = scenario.density.evaluate(p.x);
      integral += p.weight / h / std::sqrt(g.determinant());
    }
    integral *= std::pow(4.0 * std::numbers::pi, -0.5 * n);
    tc.kind = CoefficientKind::kElliptic;
  } else {
    const vf::VectorField bracket = vf::bracket(fields[0], fields[1]);
    const double c0 = heisenberg_c0();
    for (const auto& p : audit.points) {
      Eigen::Matrix3d frame;
      const auto a = fields[0].evaluate(p.x), b = fields[1].evaluate(p.x), c = bracket.evaluate(p.x);
      for (int r = 0; r < 3; ++r) frame.row(r) << a[r], b[r], c[r];
      const double h = scenario.density.evaluate(p.x);
      integral += p.weight / h * c0 / std::abs(frame.determinant());
    }
    tc.kind = CoefficientKind::kHeisenberg;
  }
  tc.integral_eps0 = integral;
  tc.spectral_coeff = integral / gamma_half(audit.Q_L + 2);
  return tc;
}

KaramataReport karamata_check(const PowerFit& trace_fit, const PowerFit& count_fit, double exponent_tol,
                              double coefficient_tol) {
  KaramataReport r;
  r.trace_exponent = trace_fit.exponent;
  r.count_exponent = count_fit.exponent;
  r.exponent_tol = exponent_tol;
  r.coefficient_tol = coefficient_tol;
  r.exponent_gap = std::abs(trace_fit.exponent - count_fit.exponent) / std::max(std::abs(count_fit.exponent), 1e-300);
  r.predicted_trace = count_fit.coefficient * std::tgamma(count_fit.exponent + 1.0);
  r.coefficient_gap = std::abs(trace_fit.coefficient - r.predicted_trace) / std::max(trace_fit.coefficient, 1e-300);
  r.exponent_pass = r.exponent_gap <= exponent_tol;
  r.coefficient_pass = r.coefficient_gap <= coefficient_tol;
  r.pass = r.exponent_pass && r.coefficient_pass;
  return r;
}

double trace_window_tmin(double h_max, int tau_L, double kappa) {
  if (!(h_max > 0.0) || tau_L < 1) throw Error(ErrorCode::kInvalidArgument, "trace window needs h > 0 and tau >= 1");
  return std::pow(kappa * h_max, 2.0 / tau_L);
}

void Verdict::add(Check c) { checks.push_back(std::move(c)); }

void Verdict::finalize() {
  overall = !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

Check check_abs(std::string name, double expected, double measured, double tol) {
  return {std::move(name), expected, measured, tol, "abs", std::abs(measured - expected) <= tol, {}};
}

Check check_rel(std::string name, double expected, double measured, double tol) {
  const bool ok = std::abs(measured - expected) <= tol * std::abs(expected);
  return {std::move(name), expected, measured, tol, "rel", ok, {}};
}

Check check_le(std::string name, double bound, double measured) {
  return {std::move(name), bound, measured, 0.0, "le", measured <= bound, {}};
}

Check check_ge(std::string name, double bound, double measured) {
  return {std::move(name), bound, measured, 0.0, "ge", measured >= bound, {}};
}

namespace {

std::string num(double x) {
  if (!std::isfinite(x)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

nlohmann::ordered_json finite_or_null(double x) {
  return std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string verdict_to_json(const Verdict& v) {
  nlohmann::ordered_json j;
  j["scenario"] = v.scenario;
  j["overall"] = v.overall ? "pass" : "fail";
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const auto& c : v.checks) {
    nlohmann::ordered_json e;
    e["name"] = c.name;
    e["relation"] = c.relation;
    e["expected"] = finite_or_null(c.expected);
    e["measured"] = finite_or_null(c.measured);
    e["tolerance"] = c.tolerance;
    e["pass"] = c.pass;
    if (!c.note.empty()) e["note"] = c.note;
    checks.push_back(std::move(e));
  }
  j["checks"] = std::move(checks);
  j["diagnostics"] = v.diagnostics;
  return j.dump(2) + "\n";
}

std::string verdict_checks_csv(const Verdict& v) {
  std::string out = "name,relation,expected,measured,tolerance,pass\n";
  for (const auto& c : v.checks) {
    out += c.name + "," + c.relation + "," + num(c.expected) + "," + num(c.measured) + "," + num(c.tolerance) + "," +
           (c.pass ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace hypospec::asymptotics
