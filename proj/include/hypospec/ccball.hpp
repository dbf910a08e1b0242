#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypospec/chart_coeff.hpp"
#include "hypospec/vector_field.hpp"

namespace hypospec::ccball {

enum class CurveClass { kC2, kCinf };

const char* to_string(CurveClass c);
CurveClass curve_class_from_string(const std::string& s);

/// How endpoints leaving the chart are treated.
struct ChartRule {
  enum class Kind { kUnbounded, kTorus, kBox };
  Kind kind = Kind::kUnbounded;
  std::vector<double> lower;
  std::vector<double> upper;
};

/// Piecewise-constant controls: row k holds a_1..a_m on [k/K, (k+1)/K).
struct ControlPath {
  int steps = 0;
  int m = 0;
  std::vector<double> controls;  // row-major steps x m

  double at(int k, int i) const { return controls[static_cast<std::size_t>(k) * m + i]; }
};

/// True when every step satisfies the class constraint strictly.
bool satisfies(const ControlPath& path, CurveClass cls, double delta);

/// Controls for one path drawn uniformly in the unit class ball per step.
ControlPath draw_unit_controls(int m, int steps, CurveClass cls, std::uint64_t seed, std::uint64_t path_index);

ControlPath scaled(const ControlPath& path, double factor);

/// Integrates c' = sum a_i X_i(c) from x with classical RK4, `substeps`
/// substeps per control piece.
std::vector<double> integrate(const std::vector<vf::VectorField>& fields, const std::vector<double>& x,
                              const ControlPath& path, int substeps);

struct BallSpec {
  std::vector<double> center;
  double delta = 0.1;
  CurveClass cls = CurveClass::kC2;
  int n_paths = 1000;
  int control_steps = 4;
  int substeps = 4;
  std::uint64_t seed = 0;
  ChartRule chart;
};

struct BallCloud {
  std::vector<double> center;
  double delta = 0.0;
  CurveClass cls = CurveClass::kC2;
  std::vector<std::vector<double>> endpoints;
  std::uint64_t seed = 0;
  std::string integrator;  // e.g. "rk4:4x4"
  int discarded = 0;
  ChartRule chart;
};

BallCloud sample_ball(const std::vector<vf::VectorField>& fields, const BallSpec& spec, int workers = 1);

struct BallVolume {
  double coordinate_volume = 0.0;
  double mu_volume = 0.0;
  std::size_t occupied_bins = 0;
};

/// Occupied-bin volume with per-axis bin sizes; bins are anchored at the
/// cloud center. `density` may be a default (zero-dimensional) ChartCoeff,
/// meaning h = 1.
BallVolume ball_volume(const BallCloud& cloud, const std::vector<double>& bin_size,
                       const vf::ChartCoeff& density = {});
BallVolume ball_volume(const BallCloud& cloud, double bin_size, const vf::ChartCoeff& density = {});

/// Bin sizes equal to the per-axis cloud extent divided by `bins_per_axis`.
std::vector<double> adaptive_bins(const BallCloud& cloud, int bins_per_axis);

struct DoublingSpec {
  std::vector<double> deltas;  // at least one doubling
  BallSpec ball;               // delta ignored
  int bins_per_axis = 24;
};

struct VolumeSample {
  double delta = 0.0;
  double volume = 0.0;
};

struct DoublingReport {
  double exponent = 0.0;
  double stderr_ = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<VolumeSample> samples;
};

/// Clouds at every delta rescale the same unit control draws.
std::vector<VolumeSample> volume_curve(const std::vector<vf::VectorField>& fields, const DoublingSpec& spec,
                                       int workers = 1);

DoublingReport doubling_exponent(const std::vector<vf::VectorField>& fields, const DoublingSpec& spec,
                                 int workers = 1);

struct LambdaRatio {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::vector<double> ratios;
  std::vector<VolumeSample> samples;
  int depth = 0;
};

/// Ratio Lambda(x, delta) / coordinate volume over the doubling spec's range.
/// Lambda uses words up to the point's degree tau(x).
LambdaRatio lambda_compare(const std::vector<vf::VectorField>& fields, const DoublingSpec& spec, int workers = 1);

std::string cloud_to_csv(const BallCloud& cloud);

}  // namespace hypospec::ccball
