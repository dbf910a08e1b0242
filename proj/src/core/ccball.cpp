#include "hypospec/ccball.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "hypospec/error.hpp"
#include "hypospec/filtration.hpp"
#include "hypospec/parallel.hpp"
#include "hypospec/rng.hpp"
#include "hypospec/stats.hpp"

namespace hypospec::ccball {
namespace {

void velocity(const std::vector<vf::VectorField>& fields, const ControlPath& path, int k,
              const std::vector<double>& x, std::vector<double>& out, std::vector<double>& scratch) {
  std::fill(out.begin(), out.end(), 0.0);
  for (int i = 0; i < path.m; ++i) {
    const double a = path.at(k, i);
    if (a == 0.0) continue;
    fields[i].evaluate_into(x, scratch);
    for (std::size_t d = 0; d < x.size(); ++d) out[d] += a * scratch[d];
  }
}

bool inside(const ChartRule& chart, const std::vector<double>& x) {
  if (chart.kind != ChartRule::Kind::kBox) return true;
  for (std::size_t a = 0; a < x.size(); ++a) {
    if (x[a] <= chart.lower[a] || x[a] >= chart.upper[a]) return false;
  }
  return true;
}

void wrap(const ChartRule& chart, std::vector<double>& x) {
  if (chart.kind != ChartRule::Kind::kTorus) return;
  for (std::size_t a = 0; a < x.size(); ++a) {
    const double len = chart.upper[a] - chart.lower[a];
    x[a] = chart.lower[a] + std::fmod(std::fmod(x[a] - chart.lower[a], len) + len, len);
  }
}

// Displacement from the center, taking the nearest periodic image on tori.
double offset(const ChartRule& chart, std::size_t a, double p, double c) {
  double d = p - c;
  if (chart.kind == ChartRule::Kind::kTorus) {
    const double len = chart.upper[a] - chart.lower[a];
    d -= len * std::round(d / len);
  }
  return d;
}

}  // namespace

const char* to_string(CurveClass c) { return c == CurveClass::kC2 ? "C2" : "Cinf"; }

CurveClass curve_class_from_string(const std::string& s) {
  if (s == "C2" || s == "c2") return CurveClass::kC2;
  if (s == "Cinf" || s == "cinf" || s == "Cinfty") return CurveClass::kCinf;
  throw Error(ErrorCode::kInvalidArgument, "unknown curve class '" + s + "' (expected C2 or Cinf)");
}

bool satisfies(const ControlPath& path, CurveClass cls, double delta) {
  for (int k = 0; k < path.steps; ++k) {
    if (cls == CurveClass::kC2) {
      double s = 0.0;
      for (int i = 0; i < path.m; ++i) s += path.at(k, i) * path.at(k, i);
      if (!(s < delta * delta)) return false;
    } else {
      for (int i = 0; i < path.m; ++i) {
        if (!(std::abs(path.at(k, i)) < delta)) return false;
      }
    }
  }
  return true;
}

ControlPath draw_unit_controls(int m, int steps, CurveClass cls, std::uint64_t seed, std::uint64_t path_index) {
  if (m < 1 || steps < 1) throw Error(ErrorCode::kInvalidArgument, "control path needs m >= 1 and steps >= 1");
  Rng rng(derive_seed(seed, path_index));
  ControlPath p{steps, m, std::vector<double>(static_cast<std::size_t>(steps) * m)};
  for (int k = 0; k < steps; ++k) {
    double* row = p.controls.data() + static_cast<std::size_t>(k) * m;
    if (cls == CurveClass::kCinf) {
      for (int i = 0; i < m; ++i) row[i] = rng.symmetric_open();
      continue;
    }
    double norm = 0.0;
    do {
      norm = 0.0;
      for (int i = 0; i < m; ++i) {
        row[i] = rng.normal();
        norm += row[i] * row[i];
      }
    } while (norm == 0.0);
    const double r = std::pow(rng.uniform(), 1.0 / m) / std::sqrt(norm);
    for (int i = 0; i < m; ++i) row[i] *= r;
  }
  return p;
}

ControlPath scaled(const ControlPath& path, double factor) {
  ControlPath out = path;
  for (double& a : out.controls) a *= factor;
  return out;
}

namespace {

template <typename Observer>
std::vector<double> integrate_observed(const std::vector<vf::VectorField>& fields, const std::vector<double>& x0,
                                       const ControlPath& path, int substeps, Observer&& observe) {
  if (static_cast<int>(fields.size()) != path.m) throw DimensionError("control count differs from field count");
  if (substeps < 1) throw Error(ErrorCode::kInvalidArgument, "substeps must be positive");
  const std::size_t n = x0.size();
  std::vector<double> x = x0, k1(n), k2(n), k3(n), k4(n), tmp(n), scratch(n);
  const double h = 1.0 / (static_cast<double>(path.steps) * substeps);
  for (int k = 0; k < path.steps; ++k) {
    for (int s = 0; s < substeps; ++s) {
      velocity(fields, path, k, x, k1, scratch);
      for (std::size_t d = 0; d < n; ++d) tmp[d] = x[d] + 0.5 * h * k1[d];
      velocity(fields, path, k, tmp, k2, scratch);
      for (std::size_t d = 0; d < n; ++d) tmp[d] = x[d] + 0.5 * h * k2[d];
      velocity(fields, path, k, tmp, k3, scratch);
      for (std::size_t d = 0; d < n; ++d) tmp[d] = x[d] + h * k3[d];
      velocity(fields, path, k, tmp, k4, scratch);
      for (std::size_t d = 0; d < n; ++d) x[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
      observe(x);
    }
  }
  return x;
}

}  // namespace

std::vector<double> integrate(const std::vector<vf::VectorField>& fields, const std::vector<double>& x0,
                              const ControlPath& path, int substeps) {
  return integrate_observed(fields, x0, path, substeps, [](const std::vector<double>&) {});
}

namespace {

BallCloud sample_with_scale(const std::vector<vf::VectorField>& fields, const BallSpec& spec, int workers) {
  if (fields.empty()) throw Error(ErrorCode::kInvalidArgument, "ball sampling needs fields");
  if (!(spec.delta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "delta must be positive");
  if (spec.n_paths < 1 || spec.control_steps < 1 || spec.substeps < 1) {
    throw Error(ErrorCode::kInvalidArgument, "path count and step counts must be positive");
  }
  const std::size_t n = spec.center.size();
  if (static_cast<int>(n) != fields[0].dim()) throw DimensionError("ball center dimension mismatch");
  if (spec.chart.kind != ChartRule::Kind::kUnbounded && (spec.chart.lower.size() != n || spec.chart.upper.size() != n)) {
    throw DimensionError("chart bounds dimension mismatch");
  }
  const int m = static_cast<int>(fields.size());
  std::vector<std::vector<double>> ends(spec.n_paths);
  std::vector<char> keep(spec.n_paths, 1);
  parallel_for(ends.size(), workers, [&](std::size_t p) {
    const ControlPath unit = draw_unit_controls(m, spec.control_steps, spec.cls, spec.seed, p);
    std::vector<double> e = integrate_observed(fields, spec.center, scaled(unit, spec.delta), spec.substeps,
                                               [&](const std::vector<double>& x) {
                                                 if (!inside(spec.chart, x)) keep[p] = 0;
                                               });
    wrap(spec.chart, e);
    ends[p] = std::move(e);
  });
  BallCloud cloud;
  cloud.center = spec.center;
  cloud.delta = spec.delta;
  cloud.cls = spec.cls;
  cloud.seed = spec.seed;
  cloud.chart = spec.chart;
  cloud.integrator = "rk4:" + std::to_string(spec.control_steps) + "x" + std::to_string(spec.substeps);
  for (std::size_t p = 0; p < ends.size(); ++p) {
    if (keep[p]) {
      cloud.endpoints.push_back(std::move(ends[p]));
    } else {
      ++cloud.discarded;
    }
  }
  return cloud;
}

}  // namespace

BallCloud sample_ball(const std::vector<vf::VectorField>& fields, const BallSpec& spec, int workers) {
  return sample_with_scale(fields, spec, workers);
}

BallVolume ball_volume(const BallCloud& cloud, const std::vector<double>& bin_size, const vf::ChartCoeff& density) {
  if (cloud.endpoints.empty()) throw Error(ErrorCode::kInvalidArgument, "empty ball cloud");
  const std::size_t n = cloud.center.size();
  if (bin_size.size() != n) throw DimensionError("bin size dimension mismatch");
  for (double b : bin_size) {
    if (!(b > 0.0)) throw Error(ErrorCode::kInvalidArgument, "bin size must be positive");
  }
  std::vector<std::vector<long long>> keys;
  keys.reserve(cloud.endpoints.size());
  for (const auto& p : cloud.endpoints) {
    std::vector<long long> key(n);
    for (std::size_t a = 0; a < n; ++a) {
      key[a] = static_cast<long long>(std::floor(offset(cloud.chart, a, p[a], cloud.center[a]) / bin_size[a]));
    }
    keys.push_back(std::move(key));
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  double cell = 1.0;
  for (double b : bin_size) cell *= b;
  BallVolume out;
  out.occupied_bins = keys.size();
  out.coordinate_volume = static_cast<double>(keys.size()) * cell;
  if (density.dim() == 0) {
    out.mu_volume = out.coordinate_volume;
  } else {
    std::vector<double> mid(n);
    for (const auto& key : keys) {
      for (std::size_t a = 0; a < n; ++a) mid[a] = cloud.center[a] + (static_cast<double>(key[a]) + 0.5) * bin_size[a];
      out.mu_volume += density.evaluate(mid) * cell;
    }
  }
  return out;
}

BallVolume ball_volume(const BallCloud& cloud, double bin_size, const vf::ChartCoeff& density) {
  return ball_volume(cloud, std::vector<double>(cloud.center.size(), bin_size), density);
}

std::vector<double> adaptive_bins(const BallCloud& cloud, int bins_per_axis) {
  if (cloud.endpoints.empty()) throw Error(ErrorCode::kInvalidArgument, "empty ball cloud");
  if (bins_per_axis < 1) throw Error(ErrorCode::kInvalidArgument, "bins per axis must be positive");
  const std::size_t n = cloud.center.size();
  std::vector<double> lo(n, 0.0), hi(n, 0.0);
  for (const auto& p : cloud.endpoints) {
    for (std::size_t a = 0; a < n; ++a) {
      const double d = offset(cloud.chart, a, p[a], cloud.center[a]);
      lo[a] = std::min(lo[a], d);
      hi[a] = std::max(hi[a], d);
    }
  }
  std::vector<double> out(n);
  for (std::size_t a = 0; a < n; ++a) {
    const double extent = hi[a] - lo[a];
    if (!(extent > 0.0)) throw NumericalError("ball cloud is degenerate along axis " + std::to_string(a + 1));
    out[a] = extent / bins_per_axis;
  }
  return out;
}

std::vector<VolumeSample> volume_curve(const std::vector<vf::VectorField>& fields, const DoublingSpec& spec,
                                       int workers) {
  if (spec.deltas.size() < 2) throw Error(ErrorCode::kInvalidArgument, "volume curve needs at least two radii");
  std::vector<VolumeSample> out;
  for (double d : spec.deltas) {
    BallSpec b = spec.ball;
    b.delta = d;
    const BallCloud cloud = sample_ball(fields, b, workers);
    out.push_back({d, ball_volume(cloud, adaptive_bins(cloud, spec.bins_per_axis)).coordinate_volume});
  }
  return out;
}

DoublingReport doubling_exponent(const std::vector<vf::VectorField>& fields, const DoublingSpec& spec, int workers) {
  const auto [lo, hi] = std::minmax_element(spec.deltas.begin(), spec.deltas.end());
  if (spec.deltas.empty() || *hi < 2.0 * *lo) {
    throw Error(ErrorCode::kInvalidArgument, "delta range must span at least one doubling");
  }
  DoublingReport r;
  r.samples = volume_curve(fields, spec, workers);
  std::vector<double> lx, ly;
  for (const auto& s : r.samples) {
    lx.push_back(std::log(s.delta));
    ly.push_back(std::log(s.volume));
  }
  const LinearFit fit = linear_regression(lx, ly);
  r.exponent = fit.slope;
  r.stderr_ = fit.slope_stderr;
  r.ci_low = fit.slope - 2.0 * fit.slope_stderr;
  r.ci_high = fit.slope + 2.0 * fit.slope_stderr;
  return r;
}

LambdaRatio lambda_compare(const std::vector<vf::VectorField>& fields, const DoublingSpec& spec, int workers) {
  const auto fp = filtration::tangent_filtration(spec.ball.center, fields);
  LambdaRatio r;
  r.depth = fp.tau;
  const auto lambda = filtration::lambda_poly(spec.ball.center, fields, fp.tau);
  r.samples = volume_curve(fields, spec, workers);
  r.min = INFINITY;
  r.max = 0.0;
  for (const auto& s : r.samples) {
    const double ratio = lambda.evaluate(s.delta) / s.volume;
    r.ratios.push_back(ratio);
    r.min = std::min(r.min, ratio);
    r.max = std::max(r.max, ratio);
    r.mean += ratio / static_cast<double>(r.samples.size());
  }
  return r;
}

std::string cloud_to_csv(const BallCloud& cloud) {
  std::ostringstream os;
  const std::size_t n = cloud.center.size();
  for (std::size_t a = 0; a < n; ++a) os << (a ? "," : "") << 'x' << a + 1;
  os << '\n';
  char buf[32];
  for (const auto& p : cloud.endpoints) {
    for (std::size_t a = 0; a < n; ++a) {
      std::snprintf(buf, sizeof buf, "%.17g", p[a]);
      os << (a ? "," : "") << buf;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace hypospec::ccball
