#include "hypospec/registry.hpp"

#include <cstdio>

#include "hypospec/error.hpp"

namespace hypospec::harness {
namespace {

// Scenario blocks in the same format accepted inline by run configurations.
const char* const kScenarios[] = {
    R"json({
  "id": "torus2-elliptic",
  "description": "flat Laplacian on the 2-torus of side 2 pi",
  "chart": {"kind": "torus", "dim": 2, "lengths": ["2*pi", "2*pi"]},
  "fields": ["X1 = d/dx", "X2 = d/dy"],
  "expected": {"Q_L": 2, "tau_L": 1, "coefficient": "elliptic-closed-form"},
  "defaults": {
    "resolution": [128],
    "checks": ["audit_expectation", "counting_exponent", "counting_coefficient", "trace_exponent", "karamata",
               "uniform_bound", "potential_comparison", "stochastic_vs_eigsum"],
    "comparison_potential": "sin(x) + cos(y)",
    "thresholds": {"count_exponent_tol": 0.05, "coefficient_tol": 0.10}
  }
})json",
    R"json({
  "id": "torus3-elliptic",
  "description": "flat Laplacian on the 3-torus of side 2 pi",
  "chart": {"kind": "torus", "dim": 3, "lengths": ["2*pi", "2*pi", "2*pi"]},
  "fields": ["X1 = d/dx", "X2 = d/dy", "X3 = d/dz"],
  "expected": {"Q_L": 3, "tau_L": 1, "coefficient": "elliptic-closed-form"},
  "defaults": {
    "resolution": [48],
    "checks": ["audit_expectation", "counting_exponent", "counting_coefficient", "trace_exponent", "karamata",
               "uniform_bound"],
    "thresholds": {"count_exponent_tol": 0.07, "coefficient_tol": 0.12}
  }
})json",
    R"json({
  "id": "heisenberg-nilmanifold",
  "description": "sub-Laplacian of the Heisenberg nilmanifold, (x,y,z) ~ (x+1, y, z+y)",
  "chart": {"kind": "nilmanifold", "dim": 3},
  "fields": ["X1 = d/dx", "X2 = d/dy + x*d/dz"],
  "expected": {"Q_L": 4, "tau_L": 2, "coefficient": "heisenberg-oracle"},
  "defaults": {
    "resolution": [32],
    "checks": ["audit_expectation", "counting_exponent", "counting_coefficient", "trace_exponent", "karamata",
               "uniform_bound"],
    "thresholds": {"count_exponent_tol": 0.10, "coefficient_tol": 0.25}
  }
})json",
    R"json({
  "id": "grushin-torus2",
  "description": "Grushin-type operator -d_x^2 - sin(x)^2 d_y^2 on the 2-torus",
  "chart": {"kind": "torus", "dim": 2, "lengths": ["2*pi", "2*pi"]},
  "fields": ["X1 = d/dx", "X2 = sin(x)*d/dy"],
  "expected": {"Q_L": 3, "tau_L": 2, "coefficient": "zero-measure"},
  "defaults": {
    "resolution": [128],
    "checks": ["audit_expectation", "measure_zero_trace", "uniform_bound_trend"]
  }
})json",
    R"json({
  "id": "martinet-torus3",
  "description": "Martinet-type fields d/dx, d/dy + sin(x)^2 d/dz on the 3-torus",
  "chart": {"kind": "torus", "dim": 3, "lengths": ["2*pi", "2*pi", "2*pi"]},
  "fields": ["X1 = d/dx", "X2 = d/dy + sin(x)^2*d/dz"],
  "expected": {"Q_L": 5, "tau_L": 3, "coefficient": "zero-measure"},
  "defaults": {
    "resolution": [32],
    "checks": ["audit_expectation", "measure_zero_trace"]
  }
})json",
    R"json({
  "id": "dirichlet-box2",
  "description": "Dirichlet Laplacian on the square (0, pi)^2",
  "chart": {"kind": "box", "dim": 2, "lengths": ["pi", "pi"]},
  "fields": ["X1 = d/dx", "X2 = d/dy"],
  "expected": {"Q_L": 2, "tau_L": 1, "coefficient": "elliptic-closed-form"},
  "defaults": {
    "resolution": [128],
    "checks": ["audit_expectation", "counting_exponent", "dirichlet_domination"],
    "thresholds": {"count_exponent_tol": 0.07, "coefficient_tol": 0.10}
  }
})json",
    R"json({
  "id": "psi-mixed",
  "description": "Grushin operator altered by psi^2 L'/2 + (psi^2 L')^*/2 with L' = -d_y^2, psi = cos(x)",
  "chart": {"kind": "torus", "dim": 2, "lengths": ["2*pi", "2*pi"]},
  "fields": ["X1 = d/dx", "X2 = sin(x)*d/dy"],
  "psi": {"fields": ["Y1 = d/dy"], "psi": "cos(x)"},
  "expected": {"Q_L": 2, "tau_L": 1, "coefficient": "elliptic-closed-form"},
  "defaults": {
    "resolution": [128],
    "checks": ["audit_expectation", "counting_exponent", "counting_coefficient"],
    "thresholds": {"count_exponent_tol": 0.05, "coefficient_tol": 0.10}
  }
})json",
};

}  // namespace

const std::vector<ScenarioDef>& registry() {
  static const std::vector<ScenarioDef> entries = [] {
    std::vector<ScenarioDef> out;
    for (const char* text : kScenarios) out.push_back(parse_scenario(text));
    return out;
  }();
  return entries;
}

const ScenarioDef& find_scenario(const std::string& id) {
  for (const auto& e : registry())
    if (e.id == id) return e;
  throw ConfigError("unknown scenario '" + id + "' (see the list subcommand)");
}

std::string registry_listing() {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-24s %-12s %4s %6s %-22s %s\n", "id", "chart", "Q_L", "tau_L", "coefficient",
                "description");
  out += buf;
  for (const auto& e : registry()) {
    std::snprintf(buf, sizeof buf, "%-24s %-12s %4d %6d %-22s %s\n", e.id.c_str(),
                  assembly::to_string(e.scenario.chart.kind), e.expected_Q_L, e.expected_tau_L,
                  asymptotics::to_string(e.kind), e.description.c_str());
    out += buf;
  }
  return out;
}

}  // namespace hypospec::harness
