#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hypospec/asymptotics.hpp"
#include "hypospec/error.hpp"
#include "hypospec/expr_parser.hpp"
#include "hypospec/rng.hpp"

using namespace hypospec;
using namespace hypospec::asymptotics;

namespace {

// Gamma by the Lanczos-free route: log Gamma from Stirling with many
// correction terms after shifting the argument up by 20.
double gamma_series(double x) {
  double shift = 1.0;
  while (x < 30.0) {
    shift *= x;
    x += 1.0;
  }
  const double lg = (x - 0.5) * std::log(x) - x + 0.5 * std::log(2 * std::numbers::pi) + 1 / (12 * x) -
                    1 / (360 * x * x * x) + 1 / (1260 * std::pow(x, 5)) - 1 / (1680 * std::pow(x, 7));
  return std::exp(lg) / shift;
}

filtration::AuditReport audit_for(const assembly::Scenario& s, std::vector<double> upper, int grid, int probe = 0) {
  filtration::AuditInput in;
  in.fields = s.principal_fields();
  in.density = s.density;
  in.lower.assign(s.dim(), 0.0);
  in.upper = std::move(upper);
  filtration::SampleSpec spec;
  spec.grid_counts.assign(s.dim(), grid);
  if (probe > 0) spec.probe_counts.assign(s.dim(), probe);
  return filtration::hormander_audit(in, spec);
}

assembly::Scenario scenario(assembly::ChartKind kind, int dim, std::initializer_list<const char*> fields) {
  assembly::Scenario s;
  s.chart.kind = kind;
  s.chart.dim = dim;
  if (kind != assembly::ChartKind::kNilmanifold) s.chart.lengths.assign(dim, 2 * std::numbers::pi);
  for (const char* f : fields) s.fields.push_back(vf::parse_field(f, dim));
  s.normalize();
  return s;
}

}  // namespace

TEST_CASE("power-law fits") {
  std::vector<double> u, v;
  for (int i = 1; i <= 10; ++i) {
    u.push_back(i * 1.7);
    v.push_back(std::numbers::pi * i * 1.7);
  }
  auto f = fit_power_law(u, v);
  CHECK(std::abs(f.exponent - 1.0) <= 1e-12);
  CHECK(f.coefficient == doctest::Approx(std::numbers::pi).epsilon(1e-12));
  CHECK(f.residual <= 1e-12);

  Rng rng(2024);
  v.clear();
  for (double x : u) v.push_back(x * x * (1 + 0.04 * (rng.uniform() - 0.5)));
  CHECK(fit_power_law(u, v).exponent == doctest::Approx(2.0).epsilon(0.025));

  std::vector<double> c(u.size(), 5.0);
  f = fit_power_law(u, c);
  CHECK(std::abs(f.exponent) <= std::max(f.exponent_stderr, 1e-12));

  CHECK_THROWS(fit_power_law(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}));
  std::vector<double> bad = v;
  bad[3] = 0.0;
  CHECK_THROWS(fit_power_law(u, bad));
}

TEST_CASE("fits are scale equivariant") {
  std::vector<double> u, v;
  Rng rng(1);
  for (int i = 1; i <= 12; ++i) {
    u.push_back(0.5 * i);
    v.push_back(3.0 * std::pow(0.5 * i, 1.3) * (1 + 0.05 * rng.uniform()));
  }
  const auto base = fit_power_law(u, v);
  std::vector<double> au, bv;
  for (double x : u) au.push_back(7.0 * x);
  for (double y : v) bv.push_back(0.2 * y);
  const auto fu = fit_power_law(au, v), fv = fit_power_law(u, bv);
  CHECK(std::abs(fu.exponent - base.exponent) <= 1e-12);
  CHECK(fu.coefficient == doctest::Approx(base.coefficient * std::pow(7.0, -base.exponent)).epsilon(1e-12));
  CHECK(std::abs(fv.exponent - base.exponent) <= 1e-12);
  CHECK(fv.coefficient == doctest::Approx(0.2 * base.coefficient).epsilon(1e-12));
}

TEST_CASE("half-integer Gamma closed form") {
  for (int k = 0; k <= 10; ++k) {
    CHECK(gamma_half(2 * k + 2) == doctest::Approx(gamma_series(k + 1.0)).epsilon(1e-11));
    CHECK(gamma_half(2 * k + 1) == doctest::Approx(gamma_series(k + 0.5)).epsilon(1e-11));
  }
  CHECK(gamma_half(5) == doctest::Approx(0.75 * std::sqrt(std::numbers::pi)));
}

TEST_CASE("Heisenberg heat-kernel constant") {
  // Integral of s / sinh(s) over the line is pi^2 / 2.
  CHECK(sech_moment_quadrature() == doctest::Approx(std::numbers::pi * std::numbers::pi / 2).epsilon(1e-10));
  CHECK(heisenberg_c0() == doctest::Approx(1.0 / 16).epsilon(1e-10));
}

TEST_CASE("theoretical coefficients") {
  const double pi = std::numbers::pi;
  const auto t3 = scenario(assembly::ChartKind::kTorus, 3, {"d/dx", "d/dy", "d/dz"});
  auto tc = theoretical_coefficient(t3, audit_for(t3, {2 * pi, 2 * pi, 2 * pi}, 4));
  CHECK(tc.kind == CoefficientKind::kElliptic);
  const double eps = std::pow(4 * pi, -1.5) * std::pow(2 * pi, 3);
  CHECK(*tc.integral_eps0 == doctest::Approx(eps));
  CHECK(*tc.spectral_coeff == doctest::Approx(eps / (0.75 * std::sqrt(pi))));

  const auto t2 = scenario(assembly::ChartKind::kTorus, 2, {"d/dx", "d/dy"});
  tc = theoretical_coefficient(t2, audit_for(t2, {2 * pi, 2 * pi}, 8));
  CHECK(*tc.spectral_coeff == doctest::Approx(pi));

  const auto heis = scenario(assembly::ChartKind::kNilmanifold, 3, {"d/dx", "d/dy + x*d/dz"});
  tc = theoretical_coefficient(heis, audit_for(heis, {1, 1, 1}, 4));
  CHECK(tc.kind == CoefficientKind::kHeisenberg);
  CHECK(*tc.integral_eps0 == doctest::Approx(1.0 / 16));
  CHECK(*tc.spectral_coeff == doctest::Approx(1.0 / 32));

  const auto gr = scenario(assembly::ChartKind::kTorus, 2, {"d/dx", "sin(x)*d/dy"});
  tc = theoretical_coefficient(gr, audit_for(gr, {2 * pi, 2 * pi}, 8, 16));
  CHECK(tc.kind == CoefficientKind::kZeroMeasure);
  CHECK(*tc.integral_eps0 == 0.0);
}

TEST_CASE("Karamata relation") {
  PowerFit count, trace;
  count.exponent = 2.0;
  count.coefficient = 1.0;
  trace.exponent = 2.0;
  trace.coefficient = 2.0;
  auto r = karamata_check(trace, count, 1e-6, 1e-6);
  CHECK(r.pass);
  // Closure: the analytic transform of any count fit passes.
  count.exponent = 1.37;
  count.coefficient = 0.61;
  trace.exponent = 1.37;
  trace.coefficient = 0.61 * std::tgamma(2.37);
  CHECK(karamata_check(trace, count, 1e-12, 1e-12).pass);
  count.exponent += 0.5;
  r = karamata_check(trace, count, 0.05, 0.15);
  CHECK_FALSE(r.pass);
  CHECK_FALSE(r.exponent_pass);
}

TEST_CASE("trace window lower end") {
  CHECK(trace_window_tmin(0.01, 1) == doctest::Approx(0.0016));
  CHECK(trace_window_tmin(1.0 / 32, 2) == doctest::Approx(0.125));
  CHECK_THROWS(trace_window_tmin(0.0, 1));
}

TEST_CASE("verdicts") {
  Verdict v;
  v.scenario = "s";
  v.finalize();
  CHECK_FALSE(v.overall);
  v.add(check_abs("a", 1.0, 1.04, 0.05));
  v.add(check_rel("b", 2.0, 2.1, 0.1));
  v.add(check_le("c", 1.0, 0.5));
  v.finalize();
  CHECK(v.overall);
  v.add(check_ge("d", 1.0, 0.5));
  v.add(check_abs("e", 1.0, std::nan(""), 0.1));
  v.finalize();
  CHECK_FALSE(v.overall);
  const std::string j = verdict_to_json(v);
  CHECK(j == verdict_to_json(v));
  CHECK(j.find("null") != std::string::npos);
  CHECK(verdict_checks_csv(v).find("name,") == 0);
}
