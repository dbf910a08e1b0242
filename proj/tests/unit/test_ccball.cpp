#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hypospec/ccball.hpp"
#include "hypospec/expr_parser.hpp"
#include "hypospec/rng.hpp"

using namespace hypospec;
using namespace hypospec::ccball;

namespace {

std::vector<vf::VectorField> fields(std::initializer_list<const char*> text, int dim) {
  std::vector<vf::VectorField> out;
  for (const char* t : text) out.push_back(vf::parse_field(t, dim));
  return out;
}

const auto kPlane = fields({"d/dx", "d/dy"}, 2);
const auto kHeis = fields({"d/dx", "d/dy + x*d/dz"}, 3);
const auto kGrushin = fields({"d/dx", "sin(x)*d/dy"}, 2);

}  // namespace

TEST_CASE("inclusion chain between the curve classes") {
  for (const auto& [name, f] : {std::pair{"heisenberg", kHeis}, std::pair{"grushin", kGrushin}}) {
    const int m = static_cast<int>(f.size());
    const int dim = f.front().dim();
    std::vector<double> x(dim, 0.0);
    for (std::uint64_t i = 0; i < 1000; ++i) {
      const double delta = 0.1;
      const auto inf_path = scaled(draw_unit_controls(m, 4, CurveClass::kCinf, 99, i), delta / std::sqrt(m));
      CHECK(satisfies(inf_path, CurveClass::kCinf, delta / std::sqrt(m)));
      CHECK(satisfies(inf_path, CurveClass::kC2, delta));
      const auto two_path = scaled(draw_unit_controls(m, 4, CurveClass::kC2, 99, i), delta);
      CHECK(satisfies(two_path, CurveClass::kC2, delta));
      CHECK(satisfies(two_path, CurveClass::kCinf, delta));
    }
    INFO(name);
  }
}

TEST_CASE("flat fields keep endpoints in the Euclidean disc") {
  BallSpec spec;
  spec.center = {0.0, 0.0};
  spec.delta = 0.2;
  spec.n_paths = 2000;
  spec.seed = 3;
  const auto cloud = sample_ball(kPlane, spec);
  REQUIRE(cloud.endpoints.size() == 2000);
  for (const auto& e : cloud.endpoints) CHECK(std::hypot(e[0], e[1]) <= 0.2 + 1e-9);
}

TEST_CASE("sampling is reproducible and volumes grow with delta") {
  BallSpec spec;
  spec.center = {0.0, 0.0, 0.0};
  spec.delta = 0.1;
  spec.n_paths = 3000;
  spec.seed = 17;
  const auto a = sample_ball(kHeis, spec), b = sample_ball(kHeis, spec, 2);
  CHECK(a.endpoints == b.endpoints);
  DoublingSpec d;
  d.deltas = {0.05, 0.1, 0.2};
  d.ball = spec;
  const auto curve = volume_curve(kHeis, d);
  for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].volume >= curve[i - 1].volume);
}

TEST_CASE("Heisenberg vertical extent scales quadratically") {
  BallSpec spec;
  spec.center = {0.0, 0.0, 0.0};
  spec.n_paths = 100000;
  spec.seed = 5;
  auto zmax = [&](double delta) {
    spec.delta = delta;
    double z = 0.0;
    for (const auto& e : sample_ball(kHeis, spec).endpoints) z = std::max(z, std::abs(e[2]));
    return z;
  };
  const double ratio = zmax(0.2) / zmax(0.1);
  CHECK(ratio >= 3.2);
  CHECK(ratio <= 4.8);
}

TEST_CASE("bin volumes") {
  BallCloud cloud;
  cloud.center = {0.0, 0.0};
  Rng rng(1);
  for (int i = 0; i < 1000000; ++i) cloud.endpoints.push_back({rng.uniform(), rng.uniform()});
  CHECK(ball_volume(cloud, 0.01).coordinate_volume == doctest::Approx(1.0).epsilon(0.01));
  BallCloud dup = cloud;
  dup.endpoints.resize(1000);
  const double v1 = ball_volume(dup, 0.05).coordinate_volume;
  dup.endpoints.insert(dup.endpoints.end(), dup.endpoints.begin(), dup.endpoints.end());
  CHECK(ball_volume(dup, 0.05).coordinate_volume == v1);
}

TEST_CASE("doubling exponents") {
  DoublingSpec d;
  d.deltas = {0.05, 0.07, 0.1, 0.14, 0.2};
  d.ball.n_paths = 20000;
  d.ball.seed = 8;
  d.ball.center = {0.0, 0.0};
  CHECK(doubling_exponent(kPlane, d).exponent == doctest::Approx(2.0).epsilon(0.1));
  d.ball.center = {0.0, 0.0, 0.0};
  d.ball.n_paths = 40000;
  const auto h = doubling_exponent(kHeis, d);
  CHECK(h.exponent == doctest::Approx(4.0).epsilon(0.1));
  const auto lr = lambda_compare(kHeis, d);
  CHECK(lr.min > 0.0);
  CHECK(lr.max / lr.min <= 3.0);
}

TEST_CASE("Lambda ratio on the plane is about 1 / pi") {
  DoublingSpec d;
  d.deltas = {0.05, 0.1, 0.2};
  d.ball.n_paths = 40000;
  d.ball.seed = 4;
  d.ball.center = {0.0, 0.0};
  const auto lr = lambda_compare(kPlane, d);
  CHECK(lr.max / lr.min <= 1.1);
  CHECK(lr.mean == doctest::Approx(1.0 / std::numbers::pi).epsilon(0.15));
}

TEST_CASE("RK4 converges at fourth order") {
  const auto path = scaled(draw_unit_controls(2, 4, CurveClass::kC2, 12, 0), 0.8);
  const std::vector<double> x = {0.3, 0.2};
  const auto ref = integrate(kGrushin, x, path, 256);
  double e4 = 0.0, e8 = 0.0;
  const auto a = integrate(kGrushin, x, path, 2), b = integrate(kGrushin, x, path, 4);
  for (int i = 0; i < 2; ++i) {
    e4 = std::max(e4, std::abs(a[i] - ref[i]));
    e8 = std::max(e8, std::abs(b[i] - ref[i]));
  }
  CHECK(e8 <= e4 / 10.0);
}
