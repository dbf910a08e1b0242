// Acceptance run: one PASS/FAIL line per criterion, then a summary.
// Exit status is 0 iff every selected criterion passes.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hypospec/asymptotics.hpp"
#include "hypospec/ccball.hpp"
#include "hypospec/config.hpp"
#include "hypospec/pipeline.hpp"

using namespace hypospec;
using namespace hypospec::harness;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;
  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    details.push_back(std::string(ok ? "" : "!") + what);
  }
};

struct ScenarioRun {
  std::string id;
  asymptotics::Verdict verdict;
  harness::CountingData counting;
  double counting_seconds = 0.0;
  double total_seconds = 0.0;
  std::string error;

  const asymptotics::Check* find(const std::string& name) const {
    for (const auto& c : verdict.checks)
      if (c.name == name) return &c;
    return nullptr;
  }
  // Every check whose name starts with the prefix; false when none exist.
  bool all_pass(const std::string& prefix, std::string& detail) const {
    bool any = false, ok = true;
    for (const auto& c : verdict.checks) {
      if (c.name.rfind(prefix, 0) != 0) continue;
      any = true;
      ok = ok && c.pass;
      detail += (detail.empty() ? "" : " ") + c.name + "=" + (std::isfinite(c.measured) ? fmt("%.4g", c.measured) : "n/a");
      if (!c.pass && !c.note.empty()) detail += " (" + c.note + ")";
    }
    if (!any) detail += prefix + " missing" + (error.empty() ? "" : ": " + error);
    return any && ok;
  }
};

struct Context {
  fs::path out;
  std::uint64_t seed = 0;
  int workers = 1;
  bool quiet = false;
  std::map<std::string, ScenarioRun> runs;

  ScenarioRun& run(const std::string& id, int n, const std::vector<std::string>& checks, const json& thresholds,
                   const json& extra = json::object()) {
    auto it = runs.find(id);
    if (it != runs.end()) return it->second;
    json cfg = {{"scenario", id}, {"resolution", {n}}, {"seed", seed}, {"checks", checks}, {"thresholds", thresholds}};
    cfg.update(extra);
    RunConfig rc = parse_config(cfg.dump());
    rc.workers = workers;
    rc.output = (out / id).string();
    rc.use_cache = false;  // timings below are cold
    ScenarioRun r;
    r.id = id;
    const auto t0 = Clock::now();
    try {
      harness::Pipeline p(rc, [&](const std::string& m) {
        if (!quiet) std::cerr << "[" << id << "] " << m << "\n";
      });
      const auto tc = Clock::now();
      r.counting = p.counting();
      r.counting_seconds = seconds_since(tc);
      r.verdict = p.verify();
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    r.total_seconds = seconds_since(t0);
    return runs.emplace(id, std::move(r)).first->second;
  }
};

const std::vector<std::string> kCountChecks = {"counting_exponent", "counting_coefficient", "trace_exponent",
                                               "karamata", "uniform_bound"};

void count_exponent_and_coefficient(const ScenarioRun& r, Outcome& o) {
  const auto* e = r.find("counting_exponent");
  const auto* c = r.find("counting_coefficient");
  o.require(e && e->pass, "exponent " + (e ? fmt("%.4f", e->measured) + " vs " + fmt("%.4g", e->expected) : "missing"));
  o.require(c && c->pass,
            "coefficient " + (c ? fmt("%.5g", c->measured) + " vs " + fmt("%.5g", c->expected) : "missing"));
  if (!r.error.empty()) o.require(false, "error: " + r.error);
}

// Lattice-point count #{(j, k) in Z^2 : j^2 + k^2 <= lambda}, the exact
// continuum counting function of the flat 2-torus of side 2 pi.
double lattice_count(double lambda) {
  const long r = static_cast<long>(std::floor(std::sqrt(lambda)));
  double n = 0.0;
  for (long j = -r; j <= r; ++j) {
    const double rest = lambda - static_cast<double>(j * j);
    n += 2.0 * std::floor(std::sqrt(rest)) + 1.0;
  }
  return n;
}

Outcome criterion1(Context& ctx) {
  auto& r = ctx.run("torus2-elliptic", 128,
                    {"counting_exponent", "counting_coefficient", "trace_exponent", "karamata", "uniform_bound",
                     "potential_comparison", "stochastic_vs_eigsum"},
                    {{"count_exponent_tol", 0.05}, {"coefficient_tol", 0.10}});
  Outcome o;
  count_exponent_and_coefficient(r, o);
  // Oracle: fit the exact lattice counts over the same window.
  std::vector<double> u, v;
  for (const auto& row : r.counting.curve) {
    if (row.count < r.counting.min_count || row.count > r.counting.max_count) continue;
    u.push_back(row.lambda);
    v.push_back(lattice_count(row.lambda));
  }
  if (u.size() >= 6 && r.counting.fit) {
    const auto lf = asymptotics::fit_power_law(u, v);
    const double gap = std::abs(r.counting.fit->coefficient - lf.coefficient) / lf.coefficient;
    o.require(std::abs(lf.coefficient - std::numbers::pi) <= 0.1 * std::numbers::pi,
              "lattice-fit coefficient " + fmt("%.5g", lf.coefficient));
    o.require(gap <= 0.10, "discrete vs lattice coefficient gap " + fmt("%.3g", gap));
  } else {
    o.require(false, "lattice oracle needs six window points");
  }
  o.require(r.counting_seconds <= 120.0, "counting " + fmt("%.1f", r.counting_seconds) + " s <= 120 s");
  return o;
}

Outcome criterion2(Context& ctx) {
  auto& r = ctx.run("torus3-elliptic", 48, kCountChecks, {{"count_exponent_tol", 0.07}, {"coefficient_tol", 0.12}});
  Outcome o;
  count_exponent_and_coefficient(r, o);
  o.require(r.counting_seconds <= 900.0, "counting " + fmt("%.1f", r.counting_seconds) + " s <= 900 s");
  return o;
}

Outcome criterion3(Context& ctx) {
  auto& r = ctx.run("heisenberg-nilmanifold", 32, kCountChecks, {{"count_exponent_tol", 0.10}, {"coefficient_tol", 0.25}});
  Outcome o;
  count_exponent_and_coefficient(r, o);
  o.require(r.counting_seconds <= 1800.0, "counting " + fmt("%.1f", r.counting_seconds) + " s <= 1800 s");
  return o;
}

Outcome prefix_over(Context& ctx, const std::vector<std::string>& ids, const std::string& prefix) {
  Outcome o;
  for (const auto& id : ids) {
    auto it = ctx.runs.find(id);
    std::string detail;
    const bool ok = it != ctx.runs.end() && it->second.all_pass(prefix, detail);
    o.require(ok, id + ": " + (it == ctx.runs.end() ? "not run" : detail));
  }
  return o;
}

Outcome criterion4(Context& ctx) {
  return prefix_over(ctx, {"torus2-elliptic", "torus3-elliptic", "heisenberg-nilmanifold"}, "karamata");
}

Outcome criterion5(Context& ctx) {
  ctx.run("grushin-torus2", 128, {"measure_zero_trace", "uniform_bound_trend"}, {{"margin", 0.25}, {"trend_tol", 0.05}});
  return prefix_over(ctx, {"grushin-torus2"}, "measure_zero_trace");
}

Outcome criterion6(Context& ctx) {
  return prefix_over(ctx, {"torus2-elliptic"}, "potential_comparison");
}

Outcome criterion7(Context& ctx) {
  ctx.run("dirichlet-box2", 128, {"counting_exponent", "dirichlet_domination"}, {{"count_exponent_tol", 0.07}});
  Outcome o = prefix_over(ctx, {"dirichlet-box2"}, "dirichlet_domination");
  const Outcome e = prefix_over(ctx, {"dirichlet-box2"}, "counting_exponent");
  o.require(e.pass, e.details.front());
  return o;
}

Outcome criterion8(Context& ctx) {
  Outcome o = prefix_over(ctx, {"torus2-elliptic", "torus3-elliptic", "heisenberg-nilmanifold"}, "uniform_bound.spread");
  const Outcome g = prefix_over(ctx, {"grushin-torus2"}, "uniform_bound_trend");
  o.require(g.pass, g.details.front());
  return o;
}

std::vector<vf::VectorField> fields_of(const std::string& id) {
  return default_config(id).scenario.scenario.principal_fields();
}

Outcome criterion9(Context& ctx) {
  Outcome o;
  ccball::DoublingSpec spec;
  spec.deltas = {0.05, 0.07, 0.1, 0.14, 0.2};
  spec.ball.cls = ccball::CurveClass::kC2;
  spec.ball.n_paths = 100000;
  spec.ball.control_steps = 4;
  spec.ball.substeps = 4;
  spec.ball.seed = ctx.seed ^ 0x9a11u;

  const auto heis = fields_of("heisenberg-nilmanifold");
  spec.ball.center = {0.0, 0.0, 0.0};
  const auto dh = ccball::doubling_exponent(heis, spec, ctx.workers);
  o.require(std::abs(dh.exponent - 4.0) <= 0.3, "heisenberg doubling " + fmt("%.3f", dh.exponent) + " vs 4");
  const auto lh = ccball::lambda_compare(heis, spec, ctx.workers);
  o.require(lh.max / lh.min <= 3.0, "heisenberg Lambda ratio spread " + fmt("%.3f", lh.max / lh.min));

  const auto grushin = fields_of("grushin-torus2");
  spec.ball.center = {0.0, 0.0};
  const auto dg = ccball::doubling_exponent(grushin, spec, ctx.workers);
  o.require(std::abs(dg.exponent - 3.0) <= 0.3, "grushin doubling on x = 0 " + fmt("%.3f", dg.exponent) + " vs 3");
  const auto lg = ccball::lambda_compare(grushin, spec, ctx.workers);
  o.require(lg.max / lg.min <= 3.0, "grushin Lambda ratio spread " + fmt("%.3f", lg.max / lg.min));

  // Class inclusions on 1000 paths per scenario.
  int bad = 0;
  for (const auto* f : {&heis, &grushin}) {
    const int m = static_cast<int>(f->size());
    const double delta = 0.1, inner = delta / std::sqrt(static_cast<double>(m));
    for (std::uint64_t i = 0; i < 1000; ++i) {
      const auto a = ccball::scaled(ccball::draw_unit_controls(m, 4, ccball::CurveClass::kCinf, ctx.seed, i), inner);
      const auto b = ccball::scaled(ccball::draw_unit_controls(m, 4, ccball::CurveClass::kC2, ctx.seed, i), delta);
      if (!ccball::satisfies(a, ccball::CurveClass::kC2, delta)) ++bad;
      if (!ccball::satisfies(b, ccball::CurveClass::kCinf, delta)) ++bad;
    }
  }
  o.require(bad == 0, "sandwich violations " + std::to_string(bad) + " of 4000");
  return o;
}

Outcome criterion10(Context& ctx, const std::vector<std::string>& suites, double elapsed_excluding_heavy) {
  Outcome o;
  const auto t0 = Clock::now();
  int failed = 0;
  for (const auto& exe : suites) {
    const std::string cmd = "\"" + exe + "\" --no-version --minimal" + (ctx.quiet ? " > /dev/null 2>&1" : " 1>&2");
    if (std::system(cmd.c_str()) != 0) {
      ++failed;
      o.require(false, fs::path(exe).filename().string() + " failed");
    }
  }
  o.require(failed == 0, std::to_string(suites.size() - failed) + "/" + std::to_string(suites.size()) +
                             " property and oracle suites pass");
  const Outcome s = prefix_over(ctx, {"torus2-elliptic"}, "stochastic_vs_eigsum");
  o.require(s.pass, s.details.front());
  const double battery = seconds_since(t0) + elapsed_excluding_heavy;
  o.require(battery <= 1200.0, "battery without criteria 2 and 3 took " + fmt("%.1f", battery) + " s <= 1200 s");
  return o;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);)
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hypospec acceptance run"};
  Context ctx;
  std::string out = "acceptance_out";
  std::string only;
  app.add_option("--out", out, "Output directory");
  app.add_option("--seed", ctx.seed, "Base seed");
  app.add_option("--workers", ctx.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--only", only, "Comma-separated criterion numbers");
  app.add_flag("-q,--quiet", ctx.quiet, "Suppress progress output");
  CLI11_PARSE(app, argc, argv);
  ctx.out = out;
  fs::remove_all(ctx.out);
  fs::create_directories(ctx.out);

  std::set<int> selected;
  for (const auto& s : split(only, ',')) selected.insert(std::stoi(s));
  auto wanted = [&](int k) { return selected.empty() || selected.count(k) > 0; };

  const std::vector<std::string> suites = split(HYPOSPEC_UNIT_SUITES, ';');
  const std::vector<std::pair<int, std::string>> names = {
      {1, "flat 2-torus counting law with lattice oracle"},
      {2, "flat 3-torus counting law"},
      {3, "Heisenberg nilmanifold counting law"},
      {4, "Karamata consistency on scenarios 1 to 3"},
      {5, "measure-zero trace exponent on Grushin"},
      {6, "potential comparison"},
      {7, "Dirichlet domination"},
      {8, "uniform heat-kernel bound"},
      {9, "ball geometry"},
      {10, "property and oracle suites"},
  };

  // Criteria 2 and 3 run last so the battery time excludes them cleanly.
  const std::vector<int> order = {1, 5, 6, 7, 9, 2, 3, 4, 8, 10};
  std::map<int, Outcome> results;
  std::map<int, double> seconds;
  const auto start = Clock::now();
  double heavy = 0.0;
  const std::set<int> needs_s1 = {1, 4, 6, 8, 10}, needs_s5 = {5, 8};
  for (int k : order) {
    if (!wanted(k)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      if (needs_s1.count(k) && k != 1) criterion1(ctx);  // shares the scenario run
      if (needs_s5.count(k) && k != 5) criterion5(ctx);
      switch (k) {
        case 1: o = criterion1(ctx); break;
        case 2: o = criterion2(ctx); break;
        case 3: o = criterion3(ctx); break;
        case 4:
          criterion2(ctx);
          criterion3(ctx);
          o = criterion4(ctx);
          break;
        case 5: o = criterion5(ctx); break;
        case 6: o = criterion6(ctx); break;
        case 7: o = criterion7(ctx); break;
        case 8:
          criterion2(ctx);
          criterion3(ctx);
          o = criterion8(ctx);
          break;
        case 9: o = criterion9(ctx); break;
        case 10: o = criterion10(ctx, suites, seconds_since(start) - heavy); break;
      }
    } catch (const std::exception& e) {
      o.require(false, std::string("error: ") + e.what());
    }
    seconds[k] = seconds_since(t0);
    if (k == 2 || k == 3 || ((k == 4 || k == 8) && (!wanted(2) || !wanted(3)))) heavy += seconds[k];
    results[k] = o;
    std::cerr << "criterion " << k << " done in " << fmt("%.1f", seconds[k]) << " s\n";
  }

  int passed = 0;
  json report = json::array();
  std::cout << "\n";
  for (const auto& [k, name] : names) {
    if (!results.count(k)) continue;
    const auto& o = results.at(k);
    passed += o.pass ? 1 : 0;
    std::string detail;
    for (const auto& d : o.details) detail += (detail.empty() ? "" : "; ") + d;
    std::printf("criterion %2d  %s  %-46s %7.1f s  %s\n", k, o.pass ? "PASS" : "FAIL", name.c_str(), seconds[k],
                detail.c_str());
    report.push_back({{"criterion", k}, {"name", name}, {"pass", o.pass}, {"seconds", seconds[k]}, {"details", o.details}});
  }
  std::printf("acceptance: %d of %zu criteria pass in %.1f s\n", passed, results.size(), seconds_since(start));
  std::ofstream(ctx.out / "acceptance.json") << report.dump(2) << "\n";
  return passed == static_cast<int>(results.size()) ? 0 : 1;
}
