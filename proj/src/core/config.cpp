#include "hypospec/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "hypospec/error.hpp"
#include "hypospec/expr_parser.hpp"
#include "hypospec/registry.hpp"

namespace hypospec::harness {
namespace {

using json = nlohmann::ordered_json;

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; })) {
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("key '" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

double constant_value(const json& v, int dim, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) throw ConfigError(where + " must be a number or a constant expression");
  const vf::ChartCoeff c = vf::parse_function(v.get<std::string>(), dim);
  if (!c.is_constant()) throw ConfigError(where + " must not depend on coordinates");
  return c.evaluate(std::vector<double>(dim, 0.0));
}

std::string rhs(const std::string& text) {
  return text.find('=') == std::string::npos ? text : vf::split_assignment(text).second;
}

std::vector<int> int_list(const json& v, const std::string& where) {
  if (v.is_number_integer()) return {v.get<int>()};
  if (!v.is_array()) throw ConfigError(where + " must be an integer or a list of integers");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) throw ConfigError(where + " must hold integers");
    out.push_back(e.get<int>());
  }
  return out;
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(what + " is not valid JSON: " + e.what());
  }
}

void parse_thresholds(const json& t, Thresholds& th, const std::string& w) {
  check_keys(t, {"count_exponent_tol", "coefficient_tol", "trace_exponent_tol", "karamata_exponent_tol",
                 "karamata_coefficient_tol", "margin", "spread", "trend_tol", "stochastic_sigma"},
             w);
  th.count_exponent_tol = get<double>(t, "count_exponent_tol", w, th.count_exponent_tol);
  th.coefficient_tol = get<double>(t, "coefficient_tol", w, th.coefficient_tol);
  th.trace_exponent_tol = get<double>(t, "trace_exponent_tol", w, th.trace_exponent_tol);
  th.karamata_exponent_tol = get<double>(t, "karamata_exponent_tol", w, th.karamata_exponent_tol);
  th.karamata_coefficient_tol = get<double>(t, "karamata_coefficient_tol", w, th.karamata_coefficient_tol);
  th.margin = get<double>(t, "margin", w, th.margin);
  th.spread = get<double>(t, "spread", w, th.spread);
  th.trend_tol = get<double>(t, "trend_tol", w, th.trend_tol);
  th.stochastic_sigma = get<double>(t, "stochastic_sigma", w, th.stochastic_sigma);
}

}  // namespace

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> k = {
      "counting_exponent", "counting_coefficient", "trace_exponent", "karamata",
      "uniform_bound",     "uniform_bound_trend",  "measure_zero_trace", "potential_comparison",
      "dirichlet_domination", "stochastic_vs_eigsum", "audit_expectation"};
  return k;
}

ScenarioDef parse_scenario(const std::string& json_text) {
  const json j = parse_json(json_text, "scenario block");
  const std::string where = "scenario";
  check_keys(j, {"id", "description", "chart", "fields", "commutator", "drift", "potential", "density",
                 "self_adjoint", "psi", "expected", "defaults"},
             where);
  ScenarioDef def;
  def.id = get<std::string>(j, "id", where, "");
  if (def.id.empty()) throw ConfigError("scenario needs an id");
  def.description = get<std::string>(j, "description", where, "");

  if (!j.contains("chart")) throw ConfigError("scenario needs a chart");
  const json& c = j.at("chart");
  check_keys(c, {"kind", "dim", "lengths", "origin"}, "scenario.chart");
  assembly::ChartSpec chart;
  try {
    chart.kind = assembly::chart_kind_from_string(get<std::string>(c, "kind", "scenario.chart", "torus"));
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  chart.dim = get<int>(c, "dim", "scenario.chart", chart.kind == assembly::ChartKind::kNilmanifold ? 3 : 2);
  if (chart.dim < 1 || chart.dim > 3) throw ConfigError("chart dimension must be 1, 2 or 3");
  if (c.contains("lengths")) {
    const json& l = c.at("lengths");
    if (!l.is_array()) throw ConfigError("scenario.chart.lengths must be a list");
    for (const auto& e : l) chart.lengths.push_back(constant_value(e, chart.dim, "chart length"));
  } else {
    chart.lengths.assign(chart.dim, 1.0);
  }
  if (c.contains("origin")) {
    for (const auto& e : c.at("origin")) chart.origin.push_back(constant_value(e, chart.dim, "chart origin"));
  }
  if (chart.lengths.size() == 1 && chart.dim > 1) chart.lengths.assign(chart.dim, chart.lengths[0]);
  try {
    assembly::Grid probe(chart, {4});
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid chart: ") + e.what());
  }
  def.scenario.chart = chart;
  def.scenario.id = def.id;
  const int n = chart.dim;

  try {
    if (!j.contains("fields") || !j.at("fields").is_array() || j.at("fields").empty()) {
      throw ConfigError("scenario needs a nonempty list of fields");
    }
    for (const auto& f : j.at("fields")) def.scenario.fields.push_back(vf::parse_field(rhs(f.get<std::string>()), n));
    const std::size_t m = def.scenario.fields.size();
    if (j.contains("commutator")) {
      const json& cm = j.at("commutator");
      if (!cm.is_array() || cm.size() != m) throw ConfigError("commutator must be an m x m list");
      for (const auto& row : cm) {
        if (!row.is_array() || row.size() != m) throw ConfigError("commutator must be an m x m list");
        std::vector<vf::ChartCoeff> r;
        for (const auto& e : row) r.push_back(vf::parse_function(e.get<std::string>(), n));
        def.scenario.commutator.push_back(std::move(r));
      }
    }
    if (j.contains("drift")) {
      const json& d = j.at("drift");
      if (!d.is_array() || d.size() != m) throw ConfigError("drift must list one coefficient per field");
      for (const auto& e : d) def.scenario.drift.push_back(vf::parse_function(e.get<std::string>(), n));
    }
    def.scenario.potential = vf::parse_function(get<std::string>(j, "potential", where, "0"), n);
    def.scenario.density = vf::parse_function(get<std::string>(j, "density", where, "1"), n);
    def.scenario.self_adjoint_claim = get<bool>(j, "self_adjoint", where, true);
    if (j.contains("psi")) {
      const json& p = j.at("psi");
      check_keys(p, {"fields", "psi"}, "scenario.psi");
      assembly::PsiPart part;
      for (const auto& f : p.at("fields")) part.fields.push_back(vf::parse_field(rhs(f.get<std::string>()), n));
      part.psi = vf::parse_function(get<std::string>(p, "psi", "scenario.psi", "0"), n);
      def.scenario.psi = std::move(part);
    }
    def.scenario.normalize();
  } catch (const ParseError& e) {
    throw ConfigError(std::string("scenario expression: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario has a malformed entry: ") + e.what());
  } catch (const DimensionError& e) {
    throw ConfigError(e.what());
  }

  if (j.contains("expected")) {
    const json& e = j.at("expected");
    check_keys(e, {"Q_L", "tau_L", "coefficient"}, "scenario.expected");
    def.expected_Q_L = get<int>(e, "Q_L", "scenario.expected", 0);
    def.expected_tau_L = get<int>(e, "tau_L", "scenario.expected", 0);
    try {
      def.kind = asymptotics::coefficient_kind_from_string(get<std::string>(e, "coefficient", "scenario.expected", "unknown"));
    } catch (const Error& err) {
      throw ConfigError(err.what());
    }
  }
  if (j.contains("defaults")) {
    const json& d = j.at("defaults");
    check_keys(d, {"resolution", "checks", "comparison_potential", "thresholds"}, "scenario.defaults");
    if (d.contains("thresholds")) parse_thresholds(d.at("thresholds"), def.thresholds, "scenario.defaults.thresholds");
    if (d.contains("resolution")) def.default_resolution = int_list(d.at("resolution"), "scenario.defaults.resolution");
    def.default_checks = get<std::vector<std::string>>(d, "checks", "scenario.defaults", {});
    def.comparison_potential = get<std::string>(d, "comparison_potential", "scenario.defaults", "");
  }
  if (def.default_resolution.empty()) def.default_resolution = {32};
  for (const auto& ch : def.default_checks) {
    if (std::find(known_checks().begin(), known_checks().end(), ch) == known_checks().end()) {
      throw ConfigError("unknown check '" + ch + "'");
    }
  }
  def.source = j.dump();
  return def;
}

namespace {

void apply_overrides(RunConfig& rc, const json& j) {
  const std::string where = "config";
  check_keys(j, {"scenario", "resolution", "seed", "workers", "output", "cache", "audit", "counting", "trace", "diag",
                 "spectrum", "ball", "thresholds", "checks"},
             where);
  if (j.contains("resolution")) rc.resolution = int_list(j.at("resolution"), "config.resolution");
  rc.seed = get<std::uint64_t>(j, "seed", where, rc.seed);
  rc.workers = get<int>(j, "workers", where, rc.workers);
  rc.output = get<std::string>(j, "output", where, rc.output);
  rc.use_cache = get<bool>(j, "cache", where, rc.use_cache);
  if (j.contains("audit")) {
    const json& a = j.at("audit");
    check_keys(a, {"grid", "quasi_random", "probe", "depth_cap"}, "config.audit");
    rc.audit.grid = get<int>(a, "grid", "config.audit", rc.audit.grid);
    rc.audit.quasi_random = get<int>(a, "quasi_random", "config.audit", rc.audit.quasi_random);
    rc.audit.probe = get<int>(a, "probe", "config.audit", rc.audit.probe);
    rc.audit.depth_cap = get<int>(a, "depth_cap", "config.audit", rc.audit.depth_cap);
  }
  if (j.contains("counting")) {
    const json& c = j.at("counting");
    check_keys(c, {"points", "min_count", "max_fraction"}, "config.counting");
    rc.counting.points = get<int>(c, "points", "config.counting", rc.counting.points);
    rc.counting.min_count = get<double>(c, "min_count", "config.counting", rc.counting.min_count);
    rc.counting.max_fraction = get<double>(c, "max_fraction", "config.counting", rc.counting.max_fraction);
  }
  if (j.contains("trace")) {
    const json& t = j.at("trace");
    check_keys(t, {"points", "method", "probes", "eigsum_k", "kappa", "min_trace"}, "config.trace");
    rc.trace.points = get<int>(t, "points", "config.trace", rc.trace.points);
    rc.trace.method = get<std::string>(t, "method", "config.trace", rc.trace.method);
    rc.trace.probes = get<int>(t, "probes", "config.trace", rc.trace.probes);
    rc.trace.eigsum_k = get<int>(t, "eigsum_k", "config.trace", rc.trace.eigsum_k);
    rc.trace.kappa = get<double>(t, "kappa", "config.trace", rc.trace.kappa);
    rc.trace.min_trace = get<double>(t, "min_trace", "config.trace", rc.trace.min_trace);
    if (rc.trace.method != "auto" && rc.trace.method != "eigsum" && rc.trace.method != "stochastic") {
      throw ConfigError("trace.method must be auto, eigsum or stochastic");
    }
  }
  if (j.contains("diag")) {
    const json& d = j.at("diag");
    check_keys(d, {"nodes", "times"}, "config.diag");
    rc.diag.nodes = get<int>(d, "nodes", "config.diag", rc.diag.nodes);
    rc.diag.times = get<int>(d, "times", "config.diag", rc.diag.times);
  }
  if (j.contains("spectrum")) {
    const json& s = j.at("spectrum");
    check_keys(s, {"k"}, "config.spectrum");
    rc.spectrum.k = get<int>(s, "k", "config.spectrum", rc.spectrum.k);
  }
  if (j.contains("ball")) {
    const json& b = j.at("ball");
    check_keys(b, {"center", "deltas", "class", "paths", "control_steps", "substeps", "bins_per_axis"}, "config.ball");
    rc.ball.center = get<std::vector<double>>(b, "center", "config.ball", rc.ball.center);
    rc.ball.deltas = get<std::vector<double>>(b, "deltas", "config.ball", rc.ball.deltas);
    rc.ball.cls = get<std::string>(b, "class", "config.ball", rc.ball.cls);
    rc.ball.paths = get<int>(b, "paths", "config.ball", rc.ball.paths);
    rc.ball.control_steps = get<int>(b, "control_steps", "config.ball", rc.ball.control_steps);
    rc.ball.substeps = get<int>(b, "substeps", "config.ball", rc.ball.substeps);
    rc.ball.bins_per_axis = get<int>(b, "bins_per_axis", "config.ball", rc.ball.bins_per_axis);
  }
  if (j.contains("thresholds")) parse_thresholds(j.at("thresholds"), rc.thresholds, "config.thresholds");
  if (j.contains("checks")) {
    rc.checks = get<std::vector<std::string>>(j, "checks", where, {});
    for (const auto& ch : rc.checks) {
      if (std::find(known_checks().begin(), known_checks().end(), ch) == known_checks().end()) {
        throw ConfigError("unknown check '" + ch + "'");
      }
    }
  }
}

void validate(const RunConfig& rc) {
  for (int r : rc.resolution)
    if (r < 4) throw ConfigError("resolutions must be at least 4");
  if (rc.workers < 0) throw ConfigError("workers must be nonnegative");
  if (rc.counting.points < asymptotics::kMinFitSamples) throw ConfigError("counting.points must be at least 6");
  if (rc.trace.points < asymptotics::kMinFitSamples) throw ConfigError("trace.points must be at least 6");
  if (rc.trace.probes < 8) throw ConfigError("trace.probes must be at least 8");
  if (rc.diag.nodes < 1 || rc.diag.times < 1) throw ConfigError("diag needs nodes and times");
  if (rc.audit.depth_cap < 1 || rc.audit.depth_cap > 4) throw ConfigError("audit.depth_cap must be in 1..4");
  if (rc.ball.paths < 1 || rc.ball.deltas.empty()) throw ConfigError("ball needs paths and deltas");
  if (!(rc.counting.max_fraction > 0.0 && rc.counting.max_fraction < 1.0)) {
    throw ConfigError("counting.max_fraction must lie in (0, 1)");
  }
}

}  // namespace

RunConfig default_config(const std::string& scenario_id) {
  RunConfig rc;
  rc.scenario = find_scenario(scenario_id);
  rc.resolution = rc.scenario.default_resolution;
  rc.checks = rc.scenario.default_checks;
  rc.thresholds = rc.scenario.thresholds;
  return rc;
}

RunConfig parse_config(const std::string& json_text) {
  const json j = parse_json(json_text, "configuration");
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  if (!j.contains("scenario")) throw ConfigError("configuration needs a 'scenario' entry");
  RunConfig rc;
  const json& s = j.at("scenario");
  if (s.is_string()) {
    rc = default_config(s.get<std::string>());
  } else if (s.is_object()) {
    rc.scenario = parse_scenario(s.dump());
    rc.resolution = rc.scenario.default_resolution;
    rc.checks = rc.scenario.default_checks;
    rc.thresholds = rc.scenario.thresholds;
  } else {
    throw ConfigError("'scenario' must be a registry id or a scenario block");
  }
  apply_overrides(rc, j);
  validate(rc);
  return rc;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read configuration '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string RunConfig::canonical() const {
  json j;
  j["scenario"] = json::parse(scenario.source);
  j["resolution"] = resolution;
  j["seed"] = seed;
  j["audit"] = {{"grid", audit.grid}, {"quasi_random", audit.quasi_random}, {"probe", audit.probe},
                {"depth_cap", audit.depth_cap}};
  j["counting"] = {{"points", counting.points}, {"min_count", counting.min_count},
                   {"max_fraction", counting.max_fraction}};
  j["trace"] = {{"points", trace.points}, {"method", trace.method},   {"probes", trace.probes},
                {"eigsum_k", trace.eigsum_k}, {"kappa", trace.kappa}, {"min_trace", trace.min_trace}};
  j["diag"] = {{"nodes", diag.nodes}, {"times", diag.times}};
  j["spectrum"] = {{"k", spectrum.k}};
  j["ball"] = {{"center", ball.center},
               {"deltas", ball.deltas},
               {"class", ball.cls},
               {"paths", ball.paths},
               {"control_steps", ball.control_steps},
               {"substeps", ball.substeps},
               {"bins_per_axis", ball.bins_per_axis}};
  const Thresholds& t = thresholds;
  j["thresholds"] = {{"count_exponent_tol", t.count_exponent_tol},
                     {"coefficient_tol", t.coefficient_tol},
                     {"trace_exponent_tol", t.trace_exponent_tol},
                     {"karamata_exponent_tol", t.karamata_exponent_tol},
                     {"karamata_coefficient_tol", t.karamata_coefficient_tol},
                     {"margin", t.margin},
                     {"spread", t.spread},
                     {"trend_tol", t.trend_tol},
                     {"stochastic_sigma", t.stochastic_sigma}};
  j["checks"] = checks;
  return j.dump();
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical()); }

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace hypospec::harness
