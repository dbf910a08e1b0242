#include <doctest.h>

#include <cmath>
#include <numbers>
#include <unsupported/Eigen/MatrixFunctions>

#include "hypospec/assembly.hpp"
#include "hypospec/error.hpp"
#include "hypospec/expr_parser.hpp"
#include "hypospec/lanczos.hpp"
#include "hypospec/rng.hpp"
#include "hypospec/spectral.hpp"

using namespace hypospec;
using namespace hypospec::spectral;
using assembly::ChartKind;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

assembly::OperatorPencil flat(ChartKind kind, int dim, double side, int n) {
  assembly::Scenario s;
  s.chart.kind = kind;
  s.chart.dim = dim;
  s.chart.lengths.assign(dim, side);
  const char* names[] = {"d/dx", "d/dy", "d/dz"};
  for (int a = 0; a < dim; ++a) s.fields.push_back(vf::parse_field(names[a], dim));
  s.normalize();
  return assembly::assemble_operator(s, {n});
}

assembly::OperatorPencil diag_pencil(std::vector<double> d, std::vector<double> w) {
  const auto n = static_cast<Eigen::Index>(d.size());
  assembly::SparseMatrix S(n, n);
  for (Eigen::Index i = 0; i < n; ++i) S.insert(i, i) = d[i];
  return assembly::make_pencil(S, Eigen::Map<Eigen::VectorXd>(w.data(), n));
}

assembly::OperatorPencil random_spd(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, 4.0 + rng.uniform());
    for (int k = 0; k < 3; ++k) {
      const int j = static_cast<int>(rng.uniform() * n);
      if (j == i) continue;
      const double v = rng.uniform() - 0.5;
      t.emplace_back(i, j, v);
      t.emplace_back(j, i, v);
    }
  }
  assembly::SparseMatrix S(n, n);
  S.setFromTriplets(t.begin(), t.end());
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 + rng.uniform();
  return assembly::make_pencil(S, w);
}

}  // namespace

TEST_CASE("counts on a diagonal pencil") {
  SpectralEngine e(diag_pencil({1, 2, 3}, {1, 1, 1}));
  CHECK(e.count_below(2.5).count == 2);
  CHECK(e.count_below(0.5).count == 0);
  CHECK(e.count_below(10).count == 3);
  const auto s = dense_oracle(diag_pencil({2, 1}, {1, 1}));
  CHECK(s.eigenvalues == std::vector<double>{1, 2});
}

TEST_CASE("2x2 dense oracle") {
  assembly::SparseMatrix S(2, 2);
  S.insert(0, 0) = 2;
  S.insert(0, 1) = 1;
  S.insert(1, 0) = 1;
  S.insert(1, 1) = 2;
  const auto s = dense_oracle(assembly::make_pencil(S, Eigen::Vector2d(1, 1)));
  CHECK(s.eigenvalues[0] == doctest::Approx(1.0));
  CHECK(s.eigenvalues[1] == doctest::Approx(3.0));
}

TEST_CASE("inertia matches the dense oracle on the torus") {
  const auto p = flat(ChartKind::kTorus, 2, kTwoPi, 12);
  SpectralEngine e(p);
  const auto dense = dense_oracle(p);
  Rng rng(3);
  long prev = -1;
  std::vector<double> lams;
  for (int i = 0; i < 20; ++i) lams.push_back(rng.uniform() * dense.eigenvalues.back() * 1.1);
  std::sort(lams.begin(), lams.end());
  const auto curve = e.count_curve(lams, 2);
  for (std::size_t i = 0; i < lams.size(); ++i) {
    const long expected = std::upper_bound(dense.eigenvalues.begin(), dense.eigenvalues.end(), curve[i].lambda_used) -
                          dense.eigenvalues.begin();
    CHECK(curve[i].count == expected);
    CHECK(curve[i].count >= prev);
    prev = curve[i].count;
  }
  // Exactly at a multiple eigenvalue: the tie retry moves lambda up.
  const double h = kTwoPi / 12;
  const auto tie = e.count_below(2 / (h * h) * (1 - std::cos(h)));
  CHECK(tie.count == 5);
  CHECK(tie.lambda_used >= tie.lambda);
}

TEST_CASE("inertia on random sparse pencils") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto p = random_spd(150, seed);
    SpectralEngine e(p);
    const auto dense = dense_oracle(p);
    Rng rng(seed + 10);
    for (int i = 0; i < 20; ++i) {
      const double lam = dense.eigenvalues.front() + rng.uniform() * (dense.eigenvalues.back() - dense.eigenvalues.front());
      const long expected = std::upper_bound(dense.eigenvalues.begin(), dense.eigenvalues.end(), lam) - dense.eigenvalues.begin();
      CHECK(e.count_below(lam).count == expected);
    }
  }
}

TEST_CASE("lowest eigenvalues against closed forms and the dense oracle") {
  SpectralEngine dg(diag_pencil({5, 3, 9, 1, 7, 2, 8, 4, 6, 10}, std::vector<double>(10, 1.0)));
  const auto sd = dg.lowest_eigs(3);
  CHECK(sd.eigenvalues[0] == doctest::Approx(1));
  CHECK(sd.eigenvalues[1] == doctest::Approx(2));
  CHECK(sd.eigenvalues[2] == doctest::Approx(3));

  const int n = 64;
  SpectralEngine torus(flat(ChartKind::kTorus, 1, kTwoPi, n));
  const double h = kTwoPi / n;
  auto st = torus.lowest_eigs(5);
  CHECK(std::abs(st.eigenvalues[0]) <= 1e-10);
  CHECK(st.eigenvalues[1] == doctest::Approx(2 / (h * h) * (1 - std::cos(h))).epsilon(1e-10));
  for (double r : st.residual_norms) CHECK(r <= 1e-8 * torus.scale());

  SpectralEngine box(flat(ChartKind::kBox, 1, std::numbers::pi, n));
  const double hb = std::numbers::pi / n;
  const auto sb = box.lowest_eigs(4);
  for (int k = 1; k <= 4; ++k) {
    CHECK(sb.eigenvalues[k - 1] == doctest::Approx(2 / (hb * hb) * (1 - std::cos(k * hb))).epsilon(1e-10));
  }

  const auto p = random_spd(300, 9);
  SpectralEngine e(p);
  const auto dense = dense_oracle(p);
  const auto low = e.lowest_eigs(40, 5);
  for (int i = 0; i < 40; ++i) CHECK(low.eigenvalues[i] == doctest::Approx(dense.eigenvalues[i]).epsilon(1e-9));
  CHECK_THROWS(e.lowest_eigs(200));
}

TEST_CASE("heat traces") {
  assembly::SparseMatrix zero(30, 30);
  SpectralEngine z(assembly::make_pencil(zero, Eigen::VectorXd::Ones(30)));
  StochasticOptions opt;
  opt.probes = 16;
  for (const auto& r : z.stochastic_trace({0.1, 1.0}, opt)) CHECK(r.value == doctest::Approx(30.0));
  opt.probes = 4;
  CHECK_THROWS(z.stochastic_trace({0.1}, opt));

  const auto p = flat(ChartKind::kTorus, 1, kTwoPi, 128);
  SpectralEngine e(p);
  const auto spec = e.lowest_eigs(40, 1);
  const double tc = e.eigsum_threshold(spec);
  CHECK(tc < 0.1);
  CHECK_THROWS(e.eigsum_trace(spec, 0.5 * tc));
  CHECK_NOTHROW(e.eigsum_trace(spec, tc));
  const auto eig = e.eigsum_trace(spec, 0.1);
  CHECK(eig.tail_bound <= 0.01 * eig.value);
  opt.probes = 64;
  opt.seed = 42;
  const auto sto = e.stochastic_trace({0.1}, opt).front();
  CHECK(std::abs(sto.value - eig.value) <= 2 * sto.stderr_ + eig.tail_bound);
  CHECK(std::abs(sto.value - eig.value) <= 0.1 * eig.value);

  // Constant potential: exact factor exp(-t c).
  SpectralEngine shifted(assembly::with_potential(p, Eigen::VectorXd::Constant(p.dim(), 1.5)));
  const auto spec_c = shifted.lowest_eigs(40, 1);
  for (double t : {0.2, 0.5, 1.0}) {
    const double a = e.eigsum_trace(spec, t).value, b = shifted.eigsum_trace(spec_c, t).value;
    CHECK(b == doctest::Approx(std::exp(-1.5 * t) * a).epsilon(1e-10));
  }
}

TEST_CASE("trace is decreasing and log-convex") {
  const auto p = flat(ChartKind::kTorus, 2, kTwoPi, 10);
  const auto dense = dense_oracle(p);
  std::vector<double> logs;
  for (int i = 0; i < 15; ++i) {
    const double t = 0.01 * std::pow(1.5, i);
    double s = 0;
    for (double l : dense.eigenvalues) s += std::exp(-t * l);
    logs.push_back(std::log(s));
  }
  for (std::size_t i = 1; i < logs.size(); ++i) CHECK(logs[i] < logs[i - 1]);
  // Equal spacing in log t is not equal spacing in t; check convexity in t.
  for (int i = 1; i + 1 < 15; ++i) {
    const double t0 = 0.01 * std::pow(1.5, i - 1), t1 = 0.01 * std::pow(1.5, i), t2 = 0.01 * std::pow(1.5, i + 1);
    const double interp = logs[i - 1] + (logs[i + 1] - logs[i - 1]) * (t1 - t0) / (t2 - t0);
    CHECK(logs[i] <= interp + 1e-12);
  }
}

TEST_CASE("heat kernel diagonal") {
  SpectralEngine one(diag_pencil({0.0}, {2.5}));
  for (const auto& d : one.heat_diag({0.1, 10.0}, {0})) CHECK(d.value == doctest::Approx(1 / 2.5));

  const auto p = flat(ChartKind::kTorus, 1, kTwoPi, 64);
  SpectralEngine e(p);
  for (const auto& d : e.heat_diag({500.0}, {0, 17, 40})) CHECK(d.value == doctest::Approx(1 / p.total_mass()).epsilon(1e-6));
  const Eigen::MatrixXd k = dense_heat(p, 0.05);
  for (const auto& d : e.heat_diag({0.05}, {0, 5, 33})) {
    CHECK(d.value == doctest::Approx(k(d.node, d.node) / p.W[d.node]).epsilon(1e-8));
  }
}

TEST_CASE("Lanczos quadrature against the matrix exponential") {
  const auto p = random_spd(80, 4);
  const Eigen::MatrixXd S(p.S);
  Eigen::VectorXd u = Eigen::VectorXd::Ones(80);
  const auto op = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = S * x; };
  const auto q = linalg::lanczos_exp_quadrature(op, u, {0.1, 0.5}, 1e-10, 200);
  for (int i = 0; i < 2; ++i) {
    const double t = i == 0 ? 0.1 : 0.5;
    const Eigen::MatrixXd ex = (-t * S).exp();
    CHECK(q.values[i] == doctest::Approx(u.dot(ex * u)).epsilon(1e-9));
  }
}

TEST_CASE("potential comparison and Dirichlet interlacing") {
  const auto p = flat(ChartKind::kTorus, 2, kTwoPi, 12);
  const Eigen::VectorXd v = assembly::node_values(*p.grid, vf::parse_function("sin(x) + cos(y)", 2));
  const auto a = dense_oracle(p), b = dense_oracle(assembly::with_potential(p, v));
  for (std::size_t k = 0; k < a.eigenvalues.size(); ++k) {
    const double d = b.eigenvalues[k] - a.eigenvalues[k];
    CHECK(d >= v.minCoeff() - 1e-9);
    CHECK(d <= v.maxCoeff() + 1e-9);
  }
  for (double t : {0.05, 0.1, 0.2, 0.4, 0.8}) {
    double ta = 0, tb = 0;
    for (std::size_t k = 0; k < a.eigenvalues.size(); ++k) {
      ta += std::exp(-t * a.eigenvalues[k]);
      tb += std::exp(-t * b.eigenvalues[k]);
    }
    CHECK(tb <= std::exp(-t * v.minCoeff()) * ta * (1 + 1e-12));
    CHECK(tb >= std::exp(-t * v.maxCoeff()) * ta * (1 - 1e-12));
  }

  // Box (0, pi)^2 at N inside the torus of side 2 pi at 2N: same spacing.
  const auto box = dense_oracle(flat(ChartKind::kBox, 2, std::numbers::pi, 8));
  const auto big = dense_oracle(flat(ChartKind::kTorus, 2, kTwoPi, 16));
  for (std::size_t k = 0; k < box.eigenvalues.size(); ++k) CHECK(box.eigenvalues[k] >= big.eigenvalues[k] - 1e-9);
}

TEST_CASE("CSV exports") {
  Spectrum s;
  s.eigenvalues = {1.0, 2.0};
  CHECK(spectrum_csv(s).rfind("lambda\n", 0) == 0);
  CHECK(trace_csv({}).rfind("t,value,stderr,method\n", 0) == 0);
  CHECK(count_csv({}).rfind("lambda,count\n", 0) == 0);
}
