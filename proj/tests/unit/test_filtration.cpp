#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>

#include "hypospec/error.hpp"
#include "hypospec/expr_parser.hpp"
#include "hypospec/filtration.hpp"

using namespace hypospec;
using namespace hypospec::filtration;

namespace {

std::vector<vf::VectorField> fields(std::initializer_list<const char*> text, int dim) {
  std::vector<vf::VectorField> out;
  for (const char* t : text) out.push_back(vf::parse_field(t, dim));
  return out;
}

const auto kHeis = fields({"d/dx", "d/dy + x*d/dz"}, 3);
const auto kGrushin = fields({"d/dx", "sin(x)*d/dy"}, 2);

// Brute-force Lambda: every n-subset of words (by index) up to the depth,
// |det| summed by total length, zero brackets skipped.
std::map<int, double> brute_lambda(const std::vector<vf::VectorField>& f, std::vector<double> x, int depth) {
  const int n = f.front().dim();
  const auto words = vf::enumerate_words(static_cast<int>(f.size()), depth);
  std::vector<std::vector<double>> cols;
  std::vector<int> len;
  for (const auto& w : words) {
    const auto b = vf::iterated_bracket(w, f);
    if (b.is_zero()) continue;
    cols.push_back(b.evaluate(x));
    len.push_back(w.length());
  }
  std::map<int, double> out;
  const int W = static_cast<int>(cols.size());
  std::vector<int> idx(n);
  std::function<void(int, int)> rec = [&](int start, int depth_i) {
    if (depth_i == n) {
      Eigen::MatrixXd m(n, n);
      int deg = 0;
      for (int c = 0; c < n; ++c) {
        for (int r = 0; r < n; ++r) m(r, c) = cols[idx[c]][r];
        deg += len[idx[c]];
      }
      const double d = std::abs(m.determinant());
      if (d > 1e-12) out[deg] += d;
      return;
    }
    for (int i = start; i < W; ++i) {
      idx[depth_i] = i;
      rec(i + 1, depth_i + 1);
    }
  };
  rec(0, 0);
  return out;
}

}  // namespace

TEST_CASE("pointwise filtration") {
  const auto t3 = fields({"d/dx", "d/dy", "d/dz"}, 3);
  const std::vector<double> p3 = {0.1, 0.2, 0.3};
  auto f = tangent_filtration(p3, t3);
  CHECK(f.dims == std::vector<int>{3});
  CHECK(f.tau == 1);
  CHECK(f.Q == 3);
  f = tangent_filtration(p3, kHeis);
  CHECK(f.dims == std::vector<int>{2, 3});
  CHECK(f.Q == 4);
  const std::vector<double> on_line = {0.0, 1.3};
  f = tangent_filtration(on_line, kGrushin);
  CHECK(f.dims == std::vector<int>{1, 2});
  CHECK(f.tau == 2);
  CHECK(f.Q == 3);
  const std::vector<double> off = {std::numbers::pi / 2, 0.0};
  const auto hd = homogeneous_dimension(off, kGrushin);
  CHECK(hd.Q == 2);
  CHECK(hd.tau == 1);
}

TEST_CASE("bracket failure is reported") {
  const auto bad = fields({"d/dx"}, 2);
  const std::vector<double> p = {0.5, 0.5};
  CHECK_THROWS_AS(tangent_filtration(p, bad), HormanderFailure);
}

TEST_CASE("Lambda polynomial against brute-force enumeration") {
  const std::vector<double> p2 = {0.3, 0.4};
  const auto flat = fields({"d/dx", "d/dy"}, 2);
  auto lp = lambda_poly(p2, flat, 1);
  CHECK(lp.coeffs.size() == 1);
  CHECK(lp.coeffs.at(2) == doctest::Approx(1.0));

  const std::vector<double> p3 = {0.7, 0.1, 0.2};
  lp = lambda_poly(p3, kHeis, 2);
  CHECK(lp.min_degree() == 4);
  CHECK(lp.coeffs.at(4) == doctest::Approx(2.0));
  const auto brute = brute_lambda(kHeis, p3, 2);
  CHECK(brute.at(4) == doctest::Approx(lp.coeffs.at(4)));

  for (double x : {0.3, 1.1, 2.0}) {
    const std::vector<double> p = {x, 0.0};
    const auto g = lambda_poly(p, kGrushin, 2);
    CHECK(g.coeffs.at(2) == doctest::Approx(std::abs(std::sin(x))));
    CHECK(g.coeffs.at(3) == doctest::Approx(2.0 * std::abs(std::cos(x))));
  }
}

TEST_CASE("minimal frames") {
  const std::vector<double> on_line = {0.0, 0.5};
  auto mf = minimal_frame(on_line, kGrushin);
  CHECK(mf.deg == 3);
  REQUIRE(mf.words.size() == 2);
  CHECK(mf.words[0].letters == std::vector<int>{1});
  CHECK(mf.words[1].letters == std::vector<int>{1, 2});
  const std::vector<double> p3 = {0.2, 0.2, 0.2};
  mf = minimal_frame(p3, kHeis);
  CHECK(mf.deg == 4);
  CHECK(mf.words.size() == 3);
  const auto t2 = fields({"d/dx", "d/dy"}, 2);
  mf = minimal_frame(on_line, t2);
  CHECK(mf.deg == 2);
}

TEST_CASE("Lambda lower bound and degree consistency on an audit") {
  AuditInput in;
  in.fields = kGrushin;
  in.density = vf::ChartCoeff::constant(2, 1);
  in.lower = {0.0, 0.0};
  in.upper = {2 * std::numbers::pi, 2 * std::numbers::pi};
  SampleSpec spec;
  spec.grid_counts = {12, 4};
  spec.probe_counts = {16, 2};
  const auto rep = hormander_audit(in, spec);
  CHECK(rep.Q_L == 3);
  CHECK(rep.tau_L == 2);
  for (const auto& p : rep.points) {
    CHECK(p.lambda.min_degree() == p.filtration.Q);
    for (std::size_t j = 1; j < p.filtration.dims.size(); ++j) CHECK(p.filtration.dims[j] >= p.filtration.dims[j - 1]);
    const auto mf = minimal_frame(p.x, kGrushin, 2);
    for (double d : {0.05, 0.3, 1.0}) {
      CHECK(p.lambda.evaluate(d) >= std::abs(mf.det) * std::pow(d, p.filtration.Q) * (1 - 1e-12));
    }
  }
  const auto* f3 = rep.find_fk(3);
  REQUIRE(f3 != nullptr);
  CHECK(f3->measure_zero_candidate);
  for (std::size_t i = 1; i < rep.fk.size(); ++i) CHECK(rep.fk[i].mass <= rep.fk[i - 1].mass);
}

TEST_CASE("Heisenberg audit and the failing single field") {
  AuditInput in;
  in.fields = kHeis;
  in.density = vf::ChartCoeff::constant(3, 1);
  in.lower = {0, 0, 0};
  in.upper = {1, 1, 1};
  SampleSpec spec;
  spec.grid_counts = {4, 4, 4};
  auto rep = hormander_audit(in, spec);
  CHECK(rep.Q_L == 4);
  CHECK(rep.tau_L == 2);
  CHECK(rep.find_fk(4)->mass == doctest::Approx(rep.total_mass));

  in.fields = fields({"d/dx"}, 3);
  rep = hormander_audit(in, spec);
  CHECK(rep.failures.size() == 64);
}

TEST_CASE("audit output is deterministic") {
  AuditInput in;
  in.fields = kGrushin;
  in.density = vf::ChartCoeff::constant(2, 1);
  in.lower = {0.0, 0.0};
  in.upper = {2 * std::numbers::pi, 2 * std::numbers::pi};
  SampleSpec spec;
  spec.grid_counts = {6, 6};
  spec.quasi_random = 20;
  spec.seed = 11;
  const auto a = hormander_audit(in, spec), b = hormander_audit(in, spec, 2);
  CHECK(audit_to_json(a) == audit_to_json(b));
  CHECK(audit_to_csv(a) == audit_to_csv(b));
  CHECK(audit_to_csv(a).rfind("x1,x2,tau,Q,lambda_min_deg", 0) == 0);
}
