#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hypospec/error.hpp"
#include "hypospec/expr_parser.hpp"
#include "hypospec/rng.hpp"
#include "hypospec/vector_field.hpp"

using namespace hypospec;
using namespace hypospec::vf;

namespace {

ChartCoeff random_coeff(Rng& rng, int dim) {
  ChartCoeff f(dim);
  const int terms = 1 + static_cast<int>(rng.uniform() * 3);
  for (int t = 0; t < terms; ++t) {
    ChartCoeff term = ChartCoeff::constant(dim, Scalar::rational(1 + static_cast<int>(rng.uniform() * 5) - 3, 1 + static_cast<int>(rng.uniform() * 3)));
    for (int a = 0; a < dim; ++a) {
      const double u = rng.uniform();
      if (u < 0.25) term = term * ChartCoeff::coordinate(dim, a);
      else if (u < 0.45) term = term * ChartCoeff::harmonic(dim, a, Harmonic::Kind::kSin, 1 + static_cast<int>(rng.uniform() * 2));
      else if (u < 0.65) term = term * ChartCoeff::harmonic(dim, a, Harmonic::Kind::kCos, 1 + static_cast<int>(rng.uniform() * 2));
    }
    f = f + term;
  }
  return f;
}

VectorField random_field(Rng& rng, int dim) {
  std::vector<ChartCoeff> c;
  for (int a = 0; a < dim; ++a) c.push_back(random_coeff(rng, dim));
  return VectorField(c);
}

}  // namespace

TEST_CASE("bracket of constant fields vanishes") {
  CHECK(bracket(VectorField::coordinate(2, 0), VectorField::coordinate(2, 1)).is_zero());
}

TEST_CASE("Heisenberg bracket gives d/dz") {
  const auto x = parse_field("d/dx - 0.5*y*d/dz", 3);
  const auto y = parse_field("d/dy + 0.5*x*d/dz", 3);
  CHECK(bracket(x, y) == VectorField::coordinate(3, 2));
}

TEST_CASE("product rule bracket") {
  const auto b = bracket(parse_field("d/dx", 2), parse_field("sin(x)*d/dy", 2));
  CHECK(b == parse_field("cos(x)*d/dy", 2));
}

TEST_CASE("iterated brackets follow the left-nested convention") {
  const std::vector<VectorField> heis = {parse_field("d/dx", 3), parse_field("d/dy + x*d/dz", 3)};
  CHECK(iterated_bracket(Word{{2}}, heis) == heis[1]);
  CHECK(iterated_bracket(Word{{1, 2}}, heis) == VectorField::coordinate(3, 2));
  const std::vector<VectorField> gru = {parse_field("d/dx", 2), parse_field("sin(x)*d/dy", 2)};
  const auto oracle = bracket(gru[0], bracket(gru[0], gru[1]));
  CHECK(iterated_bracket(Word{{1, 1, 2}}, gru) == oracle);
  CHECK(oracle == parse_field("-sin(x)*d/dy", 2));
  CHECK_THROWS_AS(iterated_bracket(Word{{3}}, gru), Error);
  CHECK_THROWS_AS(iterated_bracket(Word{{1, 1, 1, 1, 2}}, gru), Error);
}

TEST_CASE("evaluation reads off coefficients") {
  const std::vector<double> p2 = {std::numbers::pi / 2, 0.3};
  const auto v = parse_field("sin(x)*d/dy", 2).evaluate(p2);
  CHECK(v[0] == doctest::Approx(0.0));
  CHECK(v[1] == doctest::Approx(1.0));
  const std::vector<double> p3 = {0.25, 0.0, 0.0};
  const auto w = parse_field("d/dy + x*d/dz", 3).evaluate(p3);
  CHECK(w[0] == 0.0);
  CHECK(w[1] == 1.0);
  CHECK(w[2] == 0.25);
}

TEST_CASE("dimension mismatch is rejected") {
  CHECK_THROWS(bracket(VectorField::coordinate(2, 0), VectorField::coordinate(3, 0)));
}

TEST_CASE("antisymmetry, Jacobi and bilinearity on random fields") {
  Rng rng(20240601);
  for (int trial = 0; trial < 40; ++trial) {
    const int dim = 2 + trial % 2;
    const auto x = random_field(rng, dim), y = random_field(rng, dim), z = random_field(rng, dim);
    CHECK((bracket(x, y) + bracket(y, x)).is_zero());
    const auto jac = bracket(x, bracket(y, z)) + bracket(y, bracket(z, x)) + bracket(z, bracket(x, y));
    CHECK(jac.is_zero());
    const Scalar a = Scalar::rational(3, 7);
    CHECK(bracket(a * x, y) == a * bracket(x, y));
  }
}

TEST_CASE("bracket matches a finite-difference commutator") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int dim = 3;
    const auto x = random_field(rng, dim), y = random_field(rng, dim);
    const std::vector<double> p = {rng.uniform(), rng.uniform(), rng.uniform()};
    const auto exact = bracket(x, y).evaluate(p);
    // [X, Y]_k = X(Y_k) - Y(X_k), with directional derivatives by central
    // differences along X(p) and Y(p).
    auto directional = [&](const VectorField& dir, const ChartCoeff& f, double h) {
      const auto d = dir.evaluate(p);
      std::vector<double> a = p, b = p;
      for (int i = 0; i < dim; ++i) {
        a[i] += h * d[i];
        b[i] -= h * d[i];
      }
      return (f.evaluate(a) - f.evaluate(b)) / (2 * h);
    };
    double err_h = 0.0, err_h2 = 0.0, scale = 1.0;
    for (int k = 0; k < dim; ++k) {
      const double e1 = directional(x, y[k], 1e-3) - directional(y, x[k], 1e-3);
      const double e2 = directional(x, y[k], 5e-4) - directional(y, x[k], 5e-4);
      err_h = std::max(err_h, std::abs(e1 - exact[k]));
      err_h2 = std::max(err_h2, std::abs(e2 - exact[k]));
      scale = std::max(scale, std::abs(exact[k]));
    }
    CHECK(err_h <= 1e-4 * scale);
    // Second order: halving the step cuts the error about fourfold.
    if (err_h > 1e-9 * scale) CHECK(err_h2 <= 0.35 * err_h);
  }
}

TEST_CASE("parser round trip and rejection of unsupported input") {
  const auto f = parse_field("sin(x)*d/dy + 0.5*x*d/dz", 3);
  CHECK(parse_field(f.to_string(), 3) == f);
  CHECK_THROWS_AS(parse_field("exp(x)*d/dy", 2), ParseError);
  CHECK_THROWS_AS(parse_field("sin(x*y)*d/dy", 2), ParseError);
  CHECK_THROWS_AS(parse_function("d/dx", 2), ParseError);
  CHECK(parse_function("sin(x)^2 + cos(x)^2", 2) == ChartCoeff::constant(2, 1));
  const auto [name, rhs] = split_assignment("X2 = d/dy");
  CHECK(name == "X2");
  CHECK(rhs == "d/dy");
}

TEST_CASE("exact rationals fall back to floating point") {
  const Scalar a = Scalar::parse("0.25");
  CHECK(a.is_exact());
  CHECK(a == Scalar::rational(1, 4));
  Scalar big = Scalar::rational(1, 3);
  for (int i = 0; i < 80; ++i) big = big * Scalar::rational(3, 1) + Scalar::rational(1, 7);
  CHECK_FALSE(big.is_exact());
  CHECK(std::isfinite(big.to_double()));
}
