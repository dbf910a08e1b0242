// Verdict assembly: each requested check runs against lazily computed stage
// results. A failing stage turns its dependent checks into failures carrying
// the error text; other checks still run.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "hypospec/error.hpp"
#include "hypospec/expr_parser.hpp"
#include "hypospec/rng.hpp"
#include "pipeline_state.hpp"

namespace hypospec::harness {

using asymptotics::Check;
using asymptotics::Verdict;
using asymptotics::check_abs;
using asymptotics::check_le;
using asymptotics::check_rel;

namespace {

Check failed(const std::string& name, const std::string& why) {
  Check c{name, 0.0, std::nan(""), 0.0, "error", false, why};
  return c;
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

}  // namespace

Verdict Pipeline::verify() {
  Verdict v;
  v.scenario = cfg_.scenario.id;
  const Thresholds& th = cfg_.thresholds;

  auto guarded = [&](const std::string& name, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      v.add(failed(name, e.what()));
      v.diagnostics.push_back(name + ": " + e.what());
      log("verify: " + name + " failed: " + e.what());
    }
  };

  int Q = 0;
  guarded("audit", [&] { Q = audit().Q_L; });
  if (Q == 0) {
    v.finalize();
    return v;
  }
  const double half_q = 0.5 * Q;

  for (const std::string& name : cfg_.checks) {
    log("verify: " + name);
    guarded(name, [&] {
      if (name == "audit_expectation") {
        const auto& a = audit();
        v.add(check_abs("audit.Q_L", cfg_.scenario.expected_Q_L, a.Q_L, 0.0));
        v.add(check_abs("audit.tau_L", cfg_.scenario.expected_tau_L, a.tau_L, 0.0));
        const auto t = theory();
        Check c = check_abs("audit.coefficient_kind", 0.0, t.kind == cfg_.scenario.kind ? 0.0 : 1.0, 0.0);
        c.note = std::string("expected ") + asymptotics::to_string(cfg_.scenario.kind) + ", found " +
                 asymptotics::to_string(t.kind);
        v.add(c);
      } else if (name == "counting_exponent") {
        const auto& c = counting();
        if (!c.fit) throw NumericalError("no counting fit: " + c.note);
        Check ck = check_abs("counting_exponent", half_q, c.fit->exponent, th.count_exponent_tol);
        ck.note = fmt("window lambda in [%.6g, %.6g]", c.fit->u_min, c.fit->u_max);
        v.add(ck);
      } else if (name == "counting_coefficient") {
        const auto t = theory();
        if (!t.spectral_coeff || *t.spectral_coeff <= 0.0) {
          v.diagnostics.push_back(std::string("counting_coefficient skipped: theory coefficient is ") +
                                  asymptotics::to_string(t.kind));
          return;
        }
        const auto& c = counting();
        if (!c.fit) throw NumericalError("no counting fit: " + c.note);
        v.add(check_rel("counting_coefficient", *t.spectral_coeff, c.fit->coefficient, th.coefficient_tol));
      } else if (name == "trace_exponent") {
        const auto& tr = trace();
        if (!tr.fit) throw NumericalError(tr.note.empty() ? "no trace fit" : tr.note);
        Check ck = check_abs("trace_exponent", half_q, tr.fit->exponent, th.trace_exponent_tol);
        ck.note = "method " + tr.fit_method;
        v.add(ck);
      } else if (name == "karamata") {
        const auto& c = counting();
        const auto& tr = trace();
        if (!c.fit) throw NumericalError("no counting fit: " + c.note);
        if (!tr.fit) throw NumericalError(tr.note.empty() ? "no trace fit" : tr.note);
        const auto k = asymptotics::karamata_check(*tr.fit, *c.fit, th.karamata_exponent_tol,
                                                   th.karamata_coefficient_tol);
        Check e = check_le("karamata.exponent_gap", th.karamata_exponent_tol, k.exponent_gap);
        e.note = fmt("trace %.6g vs count %.6g", k.trace_exponent, k.count_exponent);
        v.add(e);
        Check cc = check_le("karamata.coefficient_gap", th.karamata_coefficient_tol, k.coefficient_gap);
        cc.note = fmt("trace %.6g vs count * Gamma(p + 1) = %.6g", tr.fit->coefficient, k.predicted_trace);
        v.add(cc);
      } else if (name == "uniform_bound") {
        const auto& d = diag();
        if (d.probes.empty()) throw NumericalError(d.note.empty() ? "no heat-diagonal probes" : d.note);
        double lo = INFINITY, hi = 0.0;
        for (const auto& p : d.probes) {
          const double s = std::pow(p.t, half_q) * p.value;
          if (!std::isfinite(s) || s <= 0.0) throw NumericalError("nonpositive or nonfinite heat diagonal");
          lo = std::min(lo, s);
          hi = std::max(hi, s);
        }
        Check ck = check_le("uniform_bound.spread", th.spread, hi / lo);
        ck.note = fmt("max t^(Q/2) K = %.6g, min = %.6g", hi, lo);
        v.add(ck);
      } else if (name == "uniform_bound_trend") {
        const auto& d = diag();
        if (d.probes.empty()) throw NumericalError(d.note.empty() ? "no heat-diagonal probes" : d.note);
        // Per-time maxima from the largest t downward; the running maximum
        // may not climb above the first value by more than trend_tol.
        std::vector<double> times = d.times;
        std::sort(times.rbegin(), times.rend());
        std::vector<double> m;
        for (double t : times) {
          double best = 0.0;
          for (const auto& p : d.probes)
            if (p.t == t) best = std::max(best, std::pow(t, half_q) * p.value);
          m.push_back(best);
        }
        double running = m.front();
        for (double x : m) running = std::max(running, x);
        Check ck = check_le("uniform_bound_trend", 1.0 + th.trend_tol, running / m.front());
        ck.note = fmt("running max %.6g against %.6g at the largest t", running, m.front());
        v.add(ck);
      } else if (name == "measure_zero_trace") {
        const auto& tr = trace();
        if (!tr.fit) throw NumericalError(tr.note.empty() ? "no trace fit" : tr.note);
        Check ck = check_le("measure_zero_trace", half_q - th.margin, tr.fit->exponent);
        ck.note = "strictly below Q_L / 2 by the margin";
        v.add(ck);
      } else if (name == "stochastic_vs_eigsum") {
        const auto& tr = trace();
        if (tr.crosscheck.empty()) throw NumericalError("no eigsum cross-check rows were computed");
        double worst = 0.0;
        for (const auto& s : tr.crosscheck) {
          if (s.method != "stochastic") continue;
          for (const auto& e : tr.crosscheck) {
            if (e.method != "eigsum" || e.t != s.t) continue;
            const double z = (std::abs(s.value - e.value) - e.tail_bound) / std::max(s.stderr_, 1e-300);
            worst = std::max(worst, z);
          }
        }
        v.add(check_le("stochastic_vs_eigsum", th.stochastic_sigma, worst));
      } else if (name == "potential_comparison") {
        check_potential(v);
      } else if (name == "dirichlet_domination") {
        check_dirichlet(v);
      } else {
        throw ConfigError("unknown check '" + name + "'");
      }
    });
  }
  v.finalize();
  return v;
}

void Pipeline::check_potential(Verdict& v) {
  const auto& sc = cfg_.scenario.scenario;
  if (cfg_.scenario.comparison_potential.empty()) throw ConfigError("scenario has no comparison potential");
  const auto& eng = engine();
  const auto vfun = vf::parse_function(cfg_.scenario.comparison_potential, sc.dim());
  const Eigen::VectorXd vals = assembly::node_values(*eng.pencil().grid, vfun);
  const double vmin = vals.minCoeff(), vmax = vals.maxCoeff();
  const auto& base = spectrum();
  const int k = base.k;
  const std::string text = cached("potential-spectrum",
                                  "{\"k\":" + std::to_string(k) + ",\"V\":\"" + cfg_.scenario.comparison_potential + "\"}",
                                  [&] {
                                    spectral::SpectralEngine ev(assembly::with_potential(eng.pencil(), vals));
                                    return spectrum_to_json(ev.lowest_eigs(k, derive_seed(cfg_.seed, 2)));
                                  });
  const auto shifted = spectrum_from_json(text);
  const double slack = 1e-9 * eng.scale();
  double violation = 0.0;
  for (int i = 0; i < k; ++i) {
    const double d = shifted.eigenvalues[i] - base.eigenvalues[i];
    violation = std::max({violation, vmin - d, d - vmax});
  }
  Check c = check_le("potential_comparison.eigenvalue_shift", slack, violation);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d shifts against [min V, max V] = [%.6g, %.6g]", k, vmin, vmax);
  c.note = buf;
  v.add(c);

  // Partial sums over the same k eigenvalues obey the bounds term by term.
  const double t0 = std::max(eng.eigsum_threshold(base), 1e-12);
  double worst = 0.0;
  for (double t : geometric_grid(t0, 4.0 * t0, 5)) {
    double tr0 = 0.0, trv = 0.0;
    for (int i = 0; i < k; ++i) {
      tr0 += std::exp(-t * base.eigenvalues[i]);
      trv += std::exp(-t * shifted.eigenvalues[i]);
    }
    worst = std::max({worst, trv / (std::exp(-t * vmin) * tr0), std::exp(-t * vmax) * tr0 / trv});
  }
  Check tc = check_le("potential_comparison.trace_bounds", 1.0 + 1e-12, worst);
  tc.note = "largest ratio against the bound at 5 t values";
  v.add(tc);
}

void Pipeline::check_dirichlet(Verdict& v) {
  const auto& sc = cfg_.scenario.scenario;
  if (sc.chart.kind != assembly::ChartKind::kBox) throw ConfigError("dirichlet_domination needs a box chart");
  // Torus of twice the side at twice the resolution: equal spacing, and the
  // box unknowns are torus nodes, so the box pencil is a principal submatrix.
  assembly::Scenario torus = sc;
  torus.chart.kind = assembly::ChartKind::kTorus;
  for (double& l : torus.chart.lengths) l *= 2.0;
  std::vector<int> res = cfg_.resolution;
  if (res.size() == 1) res.assign(sc.dim(), res[0]);
  for (int& r : res) r *= 2;
  const auto& box = engine();
  const auto& c = counting();
  if (!c.fit) throw NumericalError("no counting fit for the box: " + c.note);
  spectral::SpectralEngine big(assembly::assemble_operator(torus, res));
  const auto lambdas = geometric_grid(c.fit->u_min, c.fit->u_max, 20);
  const auto box_counts = box.count_curve(lambdas, cfg_.workers);
  const auto torus_counts = big.count_curve(lambdas, cfg_.workers);
  double excess = -INFINITY;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    excess = std::max(excess, static_cast<double>(box_counts[i].count - torus_counts[i].count));
  }
  Check cc = check_le("dirichlet_domination.counts", 0.0, excess);
  cc.note = "largest N_box - N_torus over 20 lambda values";
  v.add(cc);

  const int k = spectrum().k;
  const auto& sb = spectrum();
  const auto st = big.lowest_eigs(k, derive_seed(cfg_.seed, 7));
  const double t0 = std::max(box.eigsum_threshold(sb), big.eigsum_threshold(st));
  double worst = 0.0;
  for (double t : geometric_grid(t0, 4.0 * t0, 5)) {
    const double a = box.eigsum_trace(sb, t).value;
    const double b = big.eigsum_trace(st, t).value;
    worst = std::max(worst, a / b);
  }
  Check tc = check_le("dirichlet_domination.traces", 1.0, worst);
  tc.note = "largest Tr_box / Tr_torus at 5 certified t values";
  v.add(tc);
}

}  // namespace hypospec::harness
