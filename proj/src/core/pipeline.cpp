#include "hypospec/pipeline.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <set>

#include "hypospec/error.hpp"
#include "hypospec/expr_parser.hpp"
#include "hypospec/rng.hpp"
#include "pipeline_state.hpp"

namespace hypospec::harness {

using json = nlohmann::ordered_json;
using spectral::CountResult;
using spectral::TraceEstimate;

namespace {

json fit_to_json(const std::optional<asymptotics::PowerFit>& f) {
  if (!f) return nullptr;
  return {{"exponent", f->exponent},
          {"coefficient", f->coefficient},
          {"exponent_stderr", f->exponent_stderr},
          {"coefficient_stderr", f->coefficient_stderr},
          {"u_min", f->u_min},
          {"u_max", f->u_max},
          {"residual", f->residual},
          {"count", f->count}};
}

std::optional<asymptotics::PowerFit> fit_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  asymptotics::PowerFit f;
  f.exponent = j.at("exponent");
  f.coefficient = j.at("coefficient");
  f.exponent_stderr = j.at("exponent_stderr");
  f.coefficient_stderr = j.at("coefficient_stderr");
  f.u_min = j.at("u_min");
  f.u_max = j.at("u_max");
  f.residual = j.at("residual");
  f.count = j.at("count");
  return f;
}

json trace_rows_to_json(const std::vector<TraceEstimate>& rows) {
  json a = json::array();
  for (const auto& r : rows) {
    a.push_back({{"t", r.t}, {"value", r.value}, {"stderr", r.stderr_}, {"tail_bound", r.tail_bound},
                 {"method", r.method}, {"probes", r.probes}});
  }
  return a;
}

std::vector<TraceEstimate> trace_rows_from_json(const json& a) {
  std::vector<TraceEstimate> rows;
  for (const auto& j : a) {
    TraceEstimate r;
    r.t = j.at("t");
    r.value = j.at("value");
    r.stderr_ = j.at("stderr");
    r.tail_bound = j.at("tail_bound");
    r.method = j.at("method");
    r.probes = j.at("probes");
    rows.push_back(r);
  }
  return rows;
}

// Log-log interpolation of the t where a decreasing curve crosses `level`.
double crossing(const TraceEstimate& a, const TraceEstimate& b, double level) {
  if (a.value <= 0.0 || b.value <= 0.0 || a.value == b.value) return a.t;
  const double s = (std::log(level) - std::log(a.value)) / (std::log(b.value) - std::log(a.value));
  return std::exp(std::log(a.t) + s * (std::log(b.t) - std::log(a.t)));
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

std::string fit_json_text(const std::optional<asymptotics::PowerFit>& f) { return fit_to_json(f).dump(); }

std::string counting_to_json(const CountingData& d) {
  json j;
  json curve = json::array();
  for (const auto& c : d.curve) {
    curve.push_back({{"lambda", c.lambda}, {"lambda_used", c.lambda_used}, {"count", c.count},
                     {"tie_retries", c.tie_retries}, {"jitter_retries", c.jitter_retries}});
  }
  j["curve"] = curve;
  j["dim"] = d.dim;
  j["min_count"] = d.min_count;
  j["max_count"] = d.max_count;
  j["factorizations"] = d.factorizations;
  j["fit"] = fit_to_json(d.fit);
  j["note"] = d.note;
  return j.dump();
}

CountingData counting_from_json(const std::string& s) {
  const json j = json::parse(s);
  CountingData d;
  for (const auto& c : j.at("curve")) {
    CountResult r;
    r.lambda = c.at("lambda");
    r.lambda_used = c.at("lambda_used");
    r.count = c.at("count");
    r.tie_retries = c.at("tie_retries");
    r.jitter_retries = c.at("jitter_retries");
    d.curve.push_back(r);
  }
  d.dim = j.at("dim");
  d.min_count = j.at("min_count");
  d.max_count = j.at("max_count");
  d.factorizations = j.at("factorizations");
  d.fit = fit_from_json(j.at("fit"));
  d.note = j.at("note");
  return d;
}

std::string trace_to_json(const TraceData& d) {
  json j;
  j["t_min"] = d.t_min;
  j["t_max"] = d.t_max;
  j["window_empty"] = d.window_empty;
  j["note"] = d.note;
  j["scan"] = trace_rows_to_json(d.scan);
  j["window"] = trace_rows_to_json(d.window);
  j["crosscheck"] = trace_rows_to_json(d.crosscheck);
  j["fit_method"] = d.fit_method;
  j["fit"] = fit_to_json(d.fit);
  return j.dump();
}

TraceData trace_from_json(const std::string& s) {
  const json j = json::parse(s);
  TraceData d;
  d.t_min = j.at("t_min");
  d.t_max = j.at("t_max");
  d.window_empty = j.at("window_empty");
  d.note = j.at("note");
  d.scan = trace_rows_from_json(j.at("scan"));
  d.window = trace_rows_from_json(j.at("window"));
  d.crosscheck = trace_rows_from_json(j.at("crosscheck"));
  d.fit_method = j.at("fit_method");
  d.fit = fit_from_json(j.at("fit"));
  return d;
}

std::string diag_to_json(const DiagData& d) {
  json j;
  json probes = json::array();
  for (const auto& p : d.probes) probes.push_back({{"node", p.node}, {"t", p.t}, {"value", p.value}});
  j["probes"] = probes;
  j["times"] = d.times;
  j["nodes"] = d.nodes;
  j["note"] = d.note;
  return j.dump();
}

DiagData diag_from_json(const std::string& s) {
  const json j = json::parse(s);
  DiagData d;
  for (const auto& p : j.at("probes")) d.probes.push_back({p.at("node"), p.at("t"), p.at("value")});
  d.times = j.at("times").get<std::vector<double>>();
  d.nodes = j.at("nodes").get<std::vector<std::size_t>>();
  d.note = j.at("note");
  return d;
}

std::string spectrum_to_json(const spectral::Spectrum& s) {
  json j;
  j["eigenvalues"] = s.eigenvalues;
  j["residual_norms"] = s.residual_norms;
  j["k"] = s.k;
  j["method"] = s.method;
  return j.dump();
}

spectral::Spectrum spectrum_from_json(const std::string& text) {
  const json j = json::parse(text);
  spectral::Spectrum s;
  s.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
  s.residual_norms = j.at("residual_norms").get<std::vector<double>>();
  s.k = j.at("k");
  s.method = j.at("method");
  return s;
}

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"audit", "assemble", "spectrum", "trace", "ball", "fit", "verify"};
  return names;
}

std::vector<double> geometric_grid(double lo, double hi, int count) {
  if (count < 1 || !(lo > 0.0) || !(hi >= lo)) throw Error(ErrorCode::kInvalidArgument, "bad geometric grid");
  std::vector<double> g(count);
  for (int i = 0; i < count; ++i) {
    const double s = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    g[i] = std::exp(std::log(lo) + s * (std::log(hi) - std::log(lo)));
  }
  g.front() = lo;
  g.back() = hi;
  return g;
}

Pipeline::Pipeline(RunConfig config, Logger log)
    : cfg_(std::move(config)),
      log_(std::move(log)),
      writer_(cfg_.output),
      cache_(cfg_.output, cfg_.use_cache, log_),
      st_(std::make_unique<State>()) {}

Pipeline::~Pipeline() = default;

void Pipeline::log(const std::string& msg) const {
  if (log_) log_(msg);
}

std::string Pipeline::cached(const std::string& label, const std::string& params,
                             const std::function<std::string()>& f) {
  json key;
  key["label"] = label;
  key["scenario"] = json::parse(cfg_.scenario.source);
  key["resolution"] = cfg_.resolution;
  key["scheme"] = "sum-of-squares:forward/backward";
  key["seed"] = cfg_.seed;
  key["params"] = json::parse(params);
  key["version"] = kVersion;
  return cache_.get_or_compute(label, fnv1a64(key.dump()), f);
}

const filtration::AuditReport& Pipeline::audit() {
  if (st_->audit) return *st_->audit;
  const auto& sc = cfg_.scenario.scenario;
  const int n = sc.dim();
  filtration::AuditInput in;
  in.fields = sc.principal_fields();
  in.density = sc.density;
  in.depth_cap = cfg_.audit.depth_cap;
  const assembly::Grid probe_grid(sc.chart, {4});
  in.lower = probe_grid.chart().origin;
  in.upper = in.lower;
  for (int a = 0; a < n; ++a) in.upper[a] += probe_grid.chart().lengths[a];
  filtration::SampleSpec spec;
  const int grid = cfg_.audit.grid > 0 ? cfg_.audit.grid : (n <= 2 ? 48 : 16);
  const int probe = cfg_.audit.probe > 0 ? cfg_.audit.probe : (n <= 2 ? 64 : 16);
  spec.grid_counts.assign(n, grid);
  spec.probe_counts.assign(n, probe);
  spec.quasi_random = cfg_.audit.quasi_random;
  spec.seed = derive_seed(cfg_.seed, 1);
  log("audit: " + std::to_string(grid) + " samples and " + std::to_string(probe) + " probes per axis");
  st_->audit = filtration::hormander_audit(in, spec, cfg_.workers);
  if (!st_->audit->failures.empty()) {
    throw HormanderFailure(st_->audit->failures.front(), "fields fail the bracket condition within depth " +
                                                             std::to_string(in.depth_cap));
  }
  return *st_->audit;
}

const assembly::OperatorPencil& Pipeline::pencil() {
  if (st_->pencil) return *st_->pencil;
  log("assemble: resolution " + json(cfg_.resolution).dump());
  st_->pencil = assembly::assemble_operator(cfg_.scenario.scenario, cfg_.resolution);
  return *st_->pencil;
}

const spectral::SpectralEngine& Pipeline::engine() {
  if (!st_->engine) st_->engine = std::make_unique<spectral::SpectralEngine>(pencil());
  return *st_->engine;
}

namespace {

// Finds lambda with count in [lo, hi], secant steps on the log-log curve with
// a geometric bisection fallback once the target is bracketed.
double find_level(const spectral::SpectralEngine& eng, double target, double lo, double hi, double guess,
                  double p_guess, std::vector<CountResult>& probes) {
  double below = 0.0, above = 0.0;  // bracketing lambdas (0: none yet)
  double lam = guess;
  for (int iter = 0; iter < 40; ++iter) {
    auto it = std::find_if(probes.begin(), probes.end(), [&](const CountResult& c) { return c.lambda == lam; });
    const CountResult r = it != probes.end() ? *it : eng.count_below(lam);
    if (it == probes.end()) probes.push_back(r);
    const double c = static_cast<double>(r.count);
    if (c >= lo && c <= hi) return lam;
    if (c < lo) below = below == 0.0 ? lam : std::max(below, lam);
    if (c > hi) above = above == 0.0 ? lam : std::min(above, lam);

    double p = p_guess;
    std::vector<const CountResult*> pos;
    for (const auto& q : probes)
      if (q.count > 0 && q.lambda > 0.0) pos.push_back(&q);
    if (pos.size() >= 2) {
      const CountResult* a = pos[pos.size() - 2];
      const CountResult* b = pos.back();
      if (a->count != b->count && a->lambda != b->lambda) {
        p = std::log(static_cast<double>(b->count) / a->count) / std::log(b->lambda / a->lambda);
        p = std::clamp(p, 0.3, 4.0);
      }
    }
    double next = c <= 0.0 ? lam * 4.0 : lam * std::pow(target / c, 1.0 / p);
    if (below > 0.0 && above > 0.0 && !(next > below && next < above)) next = std::sqrt(below * above);
    if (below > 0.0 && above == 0.0 && next <= below) next = below * 2.0;
    if (above > 0.0 && below == 0.0 && next >= above) next = above * 0.5;
    lam = next;
  }
  throw NumericalError("counting window search did not converge near N = " + std::to_string(target));
}

}  // namespace

const CountingData& Pipeline::counting() {
  if (st_->counting) return *st_->counting;
  const int n = cfg_.scenario.scenario.dim();
  json params = {{"min_count", cfg_.counting.min_count},
                 {"max_fraction", cfg_.counting.max_fraction},
                 {"points", cfg_.counting.points}};
  const std::string text = cached("counting", params.dump(), [&] {
    const auto& eng = engine();
    CountingData d;
    d.dim = static_cast<long>(eng.pencil().dim());
    d.min_count = cfg_.counting.min_count;
    d.max_count = std::floor(cfg_.counting.max_fraction * d.dim);
    if (d.max_count < 2.0 * d.min_count) {
      throw DimensionError("grid too small for the counting window: " + std::to_string(d.dim) + " unknowns");
    }
    std::vector<CountResult> probes;
    const double p0 = 0.5 * n;
    const double guess_hi = std::max(eng.scale(), 1e-12) * std::pow(0.9 * d.max_count / d.dim, 1.0 / p0);
    log("counting: searching the upper window end");
    const double lam_hi = find_level(eng, 0.9 * d.max_count, 0.75 * d.max_count, d.max_count, guess_hi, p0, probes);
    const double p_est = probes.size() >= 2 ? p0 : p0;
    const double guess_lo = lam_hi * std::pow(1.2 * d.min_count / (0.9 * d.max_count), 1.0 / p_est);
    log("counting: searching the lower window end");
    const double lam_lo = find_level(eng, 1.2 * d.min_count, d.min_count, 1.5 * d.min_count, guess_lo, p0, probes);
    std::vector<double> grid = geometric_grid(lam_lo, lam_hi, cfg_.counting.points);
    std::vector<double> todo(grid.begin() + 1, grid.end() - 1);
    log("counting: " + std::to_string(todo.size()) + " interior probes");
    auto interior = eng.count_curve(todo, cfg_.workers);
    d.factorizations = static_cast<int>(probes.size() + interior.size());
    for (auto& r : interior) probes.push_back(r);
    std::sort(probes.begin(), probes.end(), [](const auto& a, const auto& b) { return a.lambda < b.lambda; });
    d.curve = probes;
    std::vector<double> u, v;
    for (const auto& r : d.curve) {
      if (r.lambda >= lam_lo && r.lambda <= lam_hi && r.count >= d.min_count && r.count <= d.max_count) {
        u.push_back(r.lambda);
        v.push_back(static_cast<double>(r.count));
      }
    }
    if (static_cast<int>(u.size()) >= asymptotics::kMinFitSamples) {
      d.fit = asymptotics::fit_power_law(u, v);
    } else {
      d.note = "too few counts inside the window";
    }
    return counting_to_json(d);
  });
  st_->counting = counting_from_json(text);
  return *st_->counting;
}

const spectral::Spectrum& Pipeline::spectrum() {
  if (st_->spectrum) return *st_->spectrum;
  json params = {{"k", cfg_.spectrum.k}};
  const std::string text = cached("spectrum", params.dump(), [&] {
    const auto& eng = engine();
    if (!eng.pencil().symmetric) {
      if (eng.pencil().dim() > assembly::kDenseCap) throw DimensionError("non-symmetric pencil above the dense cap");
      auto s = spectral::dense_oracle(eng.pencil());
      s.eigenvalues.resize(std::min<std::size_t>(s.eigenvalues.size(), cfg_.spectrum.k));
      s.residual_norms.resize(s.eigenvalues.size());
      s.k = static_cast<int>(s.eigenvalues.size());
      return spectrum_to_json(s);
    }
    log("spectrum: lowest " + std::to_string(cfg_.spectrum.k) + " eigenvalues");
    return spectrum_to_json(eng.lowest_eigs(cfg_.spectrum.k, derive_seed(cfg_.seed, 2)));
  });
  st_->spectrum = spectrum_from_json(text);
  return *st_->spectrum;
}

const TraceData& Pipeline::trace() {
  if (st_->trace) return *st_->trace;
  const auto& a = audit();
  json params = {{"points", cfg_.trace.points},  {"method", cfg_.trace.method},   {"probes", cfg_.trace.probes},
                 {"eigsum_k", cfg_.trace.eigsum_k}, {"kappa", cfg_.trace.kappa}, {"min_trace", cfg_.trace.min_trace},
                 {"tau_L", a.tau_L}};
  const std::string text = cached("trace", params.dump(), [&] {
    const auto& eng = engine();
    const auto& p = eng.pencil();
    TraceData d;
    d.t_min = asymptotics::trace_window_tmin(p.grid->max_spacing(), a.tau_L, cfg_.trace.kappa);
    spectral::StochasticOptions opt;
    opt.probes = cfg_.trace.probes;
    opt.seed = derive_seed(cfg_.seed, 3);
    opt.workers = cfg_.workers;
    auto estimate = [&](const std::vector<double>& ts) {
      return p.symmetric ? eng.stochastic_trace(ts, opt) : eng.dense_trace(ts);
    };

    log("trace: scanning for the window end");
    d.scan = estimate(geometric_grid(d.t_min / 100.0, d.t_min * 1e4, 49));
    const double level = cfg_.trace.min_trace;
    double t_cross = 0.0;
    for (std::size_t i = 0; i + 1 < d.scan.size(); ++i) {
      if (d.scan[i].value >= level && d.scan[i + 1].value < level) t_cross = crossing(d.scan[i], d.scan[i + 1], level);
    }
    if (d.scan.front().value < level) t_cross = d.scan.front().t;
    if (d.scan.back().value >= level) t_cross = d.scan.back().t;
    d.t_max = t_cross;
    char buf[200];
    if (!(d.t_max > d.t_min)) {
      d.window_empty = true;
      std::snprintf(buf, sizeof buf, "empty trace window: Tr = %g at t = %.6g, below t_min = %.6g", level, d.t_max,
                    d.t_min);
      d.note = buf;
      log("trace: " + d.note);
    } else {
      const auto ts = geometric_grid(d.t_min, d.t_max, cfg_.trace.points);
      log("trace: window rows");
      d.window = estimate(ts);
      d.fit_method = p.symmetric ? "stochastic" : "dense";
    }

    const bool want_eigsum = cfg_.trace.method != "stochastic" && p.symmetric && p.dim() <= kEigsumDimCap;
    if (cfg_.trace.method == "eigsum" && !want_eigsum) {
      throw ConfigError("eigsum traces need a symmetric pencil with at most " + std::to_string(kEigsumDimCap) +
                        " unknowns");
    }
    if (want_eigsum && !d.window_empty) {
      const int k = cfg_.trace.eigsum_k > 0 ? cfg_.trace.eigsum_k
                                            : static_cast<int>(std::min<std::size_t>(60, p.dim() / 2 - 1));
      log("trace: eigensolve for eigsum rows, k = " + std::to_string(k));
      const auto spec = eng.lowest_eigs(k, derive_seed(cfg_.seed, 4));
      const double tc = eng.eigsum_threshold(spec);
      std::vector<TraceEstimate> eig_rows;
      bool all = !d.window.empty();
      for (const auto& w : d.window) {
        if (w.t >= tc) {
          eig_rows.push_back(eng.eigsum_trace(spec, w.t));
        } else {
          all = false;
        }
      }
      if (cfg_.trace.method == "eigsum" && !all) {
        throw NumericalError("eigsum tail not certified across the trace window");
      }
      if (all) {
        d.window.insert(d.window.end(), eig_rows.begin(), eig_rows.end());
        d.fit_method = "eigsum";
      } else {
        d.window.insert(d.window.end(), eig_rows.begin(), eig_rows.end());
      }
      if (std::isfinite(tc)) {
        const std::vector<double> shared = {tc, 1.5 * tc, 2.25 * tc};
        d.crosscheck = estimate(shared);
        for (double t : shared) d.crosscheck.push_back(eng.eigsum_trace(spec, t));
      }
    }

    if (!d.window_empty) {
      std::vector<double> u, v;
      for (const auto& w : d.window) {
        if (w.method == d.fit_method && w.value > 0.0) {
          u.push_back(1.0 / w.t);
          v.push_back(w.value);
        }
      }
      if (static_cast<int>(u.size()) >= asymptotics::kMinFitSamples) {
        d.fit = asymptotics::fit_power_law(u, v);
      } else {
        d.note = "too few positive trace rows in the window";
      }
    }
    return trace_to_json(d);
  });
  st_->trace = trace_from_json(text);
  return *st_->trace;
}

const DiagData& Pipeline::diag() {
  if (st_->diag) return *st_->diag;
  const TraceData& tr = trace();
  json params = {{"nodes", cfg_.diag.nodes}, {"times", cfg_.diag.times}, {"t_min", tr.t_min}, {"t_max", tr.t_max}};
  const std::string text = cached("diag", params.dump(), [&] {
    const auto& eng = engine();
    DiagData d;
    if (tr.window_empty) {
      d.note = tr.note;
      return diag_to_json(d);
    }
    if (!eng.pencil().symmetric) throw Error(ErrorCode::kInvalidArgument, "heat diagonal needs a symmetric pencil");
    d.times = geometric_grid(tr.t_min, tr.t_max, cfg_.diag.times);
    const std::size_t dim = eng.pencil().dim();
    Rng rng(derive_seed(cfg_.seed, 5));
    std::set<std::size_t> chosen;
    const std::size_t want = std::min<std::size_t>(cfg_.diag.nodes, dim);
    while (chosen.size() < want) chosen.insert(static_cast<std::size_t>(rng.uniform() * dim) % dim);
    d.nodes.assign(chosen.begin(), chosen.end());
    log("diag: " + std::to_string(d.nodes.size()) + " nodes x " + std::to_string(d.times.size()) + " times");
    d.probes = eng.heat_diag(d.times, d.nodes, 1e-8, cfg_.workers);
    return diag_to_json(d);
  });
  st_->diag = diag_from_json(text);
  return *st_->diag;
}

const BallData& Pipeline::ball() {
  if (st_->ball) return *st_->ball;
  const auto& sc = cfg_.scenario.scenario;
  const auto fields = sc.principal_fields();
  ccball::DoublingSpec spec;
  spec.deltas = cfg_.ball.deltas;
  spec.bins_per_axis = cfg_.ball.bins_per_axis;
  spec.ball.center = cfg_.ball.center;
  if (spec.ball.center.empty()) {
    spec.ball.center = sc.chart.origin;
    spec.ball.center.resize(sc.dim(), 0.0);
  }
  if (static_cast<int>(spec.ball.center.size()) != sc.dim()) throw ConfigError("ball.center has the wrong dimension");
  spec.ball.cls = ccball::curve_class_from_string(cfg_.ball.cls);
  spec.ball.n_paths = cfg_.ball.paths;
  spec.ball.control_steps = cfg_.ball.control_steps;
  spec.ball.substeps = cfg_.ball.substeps;
  spec.ball.seed = derive_seed(cfg_.seed, 6);
  BallData b;
  log("ball: " + std::to_string(spec.ball.n_paths) + " paths at " + std::to_string(spec.deltas.size()) + " radii");
  b.doubling = ccball::doubling_exponent(fields, spec, cfg_.workers);
  b.lambda = ccball::lambda_compare(fields, spec, cfg_.workers);
  ccball::BallSpec largest = spec.ball;
  largest.delta = *std::max_element(spec.deltas.begin(), spec.deltas.end());
  b.cloud = ccball::sample_ball(fields, largest, cfg_.workers);
  st_->ball = std::move(b);
  return *st_->ball;
}

asymptotics::TheoryCoefficient Pipeline::theory() {
  return asymptotics::theoretical_coefficient(cfg_.scenario.scenario, audit());
}

namespace {

std::string ball_json(const BallData& b) {
  json j;
  j["doubling_exponent"] = b.doubling.exponent;
  j["stderr"] = b.doubling.stderr_;
  j["ci"] = {b.doubling.ci_low, b.doubling.ci_high};
  json samples = json::array();
  for (const auto& s : b.doubling.samples) samples.push_back({{"delta", s.delta}, {"volume", s.volume}});
  j["volumes"] = samples;
  j["lambda_ratio"] = {{"min", b.lambda.min}, {"max", b.lambda.max}, {"mean", b.lambda.mean},
                       {"depth", b.lambda.depth}, {"ratios", b.lambda.ratios}};
  j["cloud"] = {{"delta", b.cloud.delta}, {"class", ccball::to_string(b.cloud.cls)},
                {"integrator", b.cloud.integrator}, {"paths", b.cloud.endpoints.size()},
                {"discarded", b.cloud.discarded}, {"seed", b.cloud.seed}};
  return j.dump(2) + "\n";
}

std::string diag_csv(const DiagData& d, int Q) {
  std::string out = "node,t,value,scaled\n";
  char buf[160];
  for (const auto& p : d.probes) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", p.node, p.t, p.value,
                  std::pow(p.t, 0.5 * Q) * p.value);
    out += buf;
  }
  return out;
}

std::string mass_text(const assembly::OperatorPencil& p) {
  std::string out;
  char buf[64];
  for (Eigen::Index i = 0; i < p.W.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%ld %.17g\n", static_cast<long>(i), p.W[i]);
    out += buf;
  }
  return out;
}

}  // namespace

void Pipeline::write_manifest(const std::string& stage) {
  json m;
  m["tool"] = "hypospec";
  m["stage"] = stage;
  m["scenario"] = cfg_.scenario.id;
  m["config_hash"] = hex64(cfg_.hash());
  m["seed"] = cfg_.seed;
  m["workers"] = cfg_.workers;
  m["versions"] = {{"hypospec", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                   {"cxx", std::to_string(__cplusplus)}};
  m["config"] = json::parse(cfg_.canonical());
  json arts = json::array();
  for (const auto& r : writer_.records()) arts.push_back({{"name", r.name}, {"fnv1a64", hex64(r.hash)}, {"bytes", r.bytes}});
  m["artifacts"] = arts;
  json cache = json::array();
  for (const auto& e : cache_.entries()) cache.push_back({{"label", e.label}, {"key", e.key}, {"hit", e.hit}});
  m["cache"] = cache;
  writer_.write("manifest.json", m.dump(2) + "\n");
}

int Pipeline::run_stage(const std::string& stage) {
  if (!contains(stage_names(), stage)) throw ConfigError("unknown stage '" + stage + "'");
  int status = 0;
  if (stage == "audit") {
    const auto& a = audit();
    writer_.write("audit.json", filtration::audit_to_json(a));
    writer_.write("audit.csv", filtration::audit_to_csv(a));
  } else if (stage == "assemble") {
    const auto& p = pencil();
    writer_.write("pencil.json", assembly::pencil_header_json(p));
    writer_.write("pencil.txt", assembly::pencil_triplets(p));
    writer_.write("mass.txt", mass_text(p));
  } else if (stage == "spectrum") {
    writer_.write("spectrum.csv", spectral::spectrum_csv(spectrum()));
    writer_.write("counts.csv", spectral::count_csv(counting().curve));
  } else if (stage == "trace") {
    const auto& tr = trace();
    std::vector<TraceEstimate> rows = tr.window;
    rows.insert(rows.end(), tr.crosscheck.begin(), tr.crosscheck.end());
    writer_.write("trace.csv", spectral::trace_csv(rows));
    writer_.write("trace_scan.csv", spectral::trace_csv(tr.scan));
    writer_.write("diag.csv", diag_csv(diag(), audit().Q_L));
  } else if (stage == "ball") {
    const auto& b = ball();
    writer_.write("ball.json", ball_json(b));
    writer_.write("cloud.csv", ccball::cloud_to_csv(b.cloud));
  } else if (stage == "fit") {
    const auto& c = counting();
    const auto& tr = trace();
    const auto th = theory();
    json j;
    j["scenario"] = cfg_.scenario.id;
    j["Q_L"] = audit().Q_L;
    j["tau_L"] = audit().tau_L;
    j["counting_fit"] = fit_to_json(c.fit);
    j["trace_fit"] = fit_to_json(tr.fit);
    j["trace_fit_method"] = tr.fit_method;
    j["trace_window"] = {{"t_min", tr.t_min}, {"t_max", tr.t_max}, {"empty", tr.window_empty}, {"note", tr.note}};
    j["theory"] = {{"kind", asymptotics::to_string(th.kind)},
                   {"integral_eps0", th.integral_eps0 ? json(*th.integral_eps0) : json(nullptr)},
                   {"spectral_coeff", th.spectral_coeff ? json(*th.spectral_coeff) : json(nullptr)}};
    if (c.fit && tr.fit) {
      const auto k = asymptotics::karamata_check(*tr.fit, *c.fit, cfg_.thresholds.karamata_exponent_tol,
                                                 cfg_.thresholds.karamata_coefficient_tol);
      j["karamata"] = {{"trace_exponent", k.trace_exponent}, {"count_exponent", k.count_exponent},
                       {"exponent_gap", k.exponent_gap},     {"predicted_trace_coefficient", k.predicted_trace},
                       {"coefficient_gap", k.coefficient_gap}, {"pass", k.pass}};
    }
    writer_.write("counts.csv", spectral::count_csv(c.curve));
    std::vector<TraceEstimate> rows = tr.window;
    rows.insert(rows.end(), tr.crosscheck.begin(), tr.crosscheck.end());
    writer_.write("trace.csv", spectral::trace_csv(rows));
    writer_.write("fits.json", j.dump(2) + "\n");
  } else {
    const auto v = verify();
    last_verdict_ = v;
    if (st_->audit) {
      writer_.write("audit.json", filtration::audit_to_json(*st_->audit));
      writer_.write("audit.csv", filtration::audit_to_csv(*st_->audit));
    }
    if (st_->counting) writer_.write("counts.csv", spectral::count_csv(st_->counting->curve));
    if (st_->trace) {
      std::vector<TraceEstimate> rows = st_->trace->window;
      rows.insert(rows.end(), st_->trace->crosscheck.begin(), st_->trace->crosscheck.end());
      writer_.write("trace.csv", spectral::trace_csv(rows));
    }
    if (st_->diag && st_->audit) writer_.write("diag.csv", diag_csv(*st_->diag, st_->audit->Q_L));
    writer_.write("verdict.json", asymptotics::verdict_to_json(v));
    writer_.write("checks.csv", asymptotics::verdict_checks_csv(v));
    status = v.overall ? 0 : 1;
  }
  write_manifest(stage);
  return status;
}

}  // namespace hypospec::harness
