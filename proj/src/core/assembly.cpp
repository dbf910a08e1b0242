#include "hypospec/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "hypospec/error.hpp"

namespace hypospec::assembly {
namespace {

using Triplet = Eigen::Triplet<double>;

bool is_zero_coeff(const vf::ChartCoeff& c) { return c.dim() == 0 || c.is_zero(); }

// Sparse rows of a discretized field, one map-free entry list per row.
struct RowEntries {
  std::vector<std::vector<std::pair<long, double>>> rows;
};

RowEntries field_rows(const vf::VectorField& x, const Grid& grid, Scheme scheme, bool unknown_rows_only) {
  const int d = grid.dim();
  if (x.dim() != d) throw DimensionError("field dimension differs from the grid dimension");
  const std::size_t nrows = unknown_rows_only ? grid.num_unknowns() : grid.num_rows();
  RowEntries out;
  out.rows.resize(nrows);
  std::vector<int> active;
  for (int a = 0; a < d; ++a) {
    if (!x[a].is_zero()) active.push_back(a);
  }
  for (std::size_t r = 0; r < nrows; ++r) {
    const std::vector<int> idx = unknown_rows_only ? grid.unknown_index(r) : grid.row_index(r);
    const std::vector<double> pos = grid.position(idx);
    auto& row = out.rows[r];
    auto add = [&row](long col, double v) {
      if (col == Grid::kOutside || v == 0.0) return;
      for (auto& e : row) {
        if (e.first == col) {
          e.second += v;
          return;
        }
      }
      row.emplace_back(col, v);
    };
    for (int a : active) {
      const double c = x[a].evaluate(pos);
      if (c == 0.0) continue;
      const double h = grid.spacing()[a];
      std::vector<int> fwd = idx, bwd = idx;
      ++fwd[a];
      --bwd[a];
      switch (scheme) {
        case Scheme::kForward:
          add(grid.unknown_at(fwd), c / h);
          add(grid.unknown_at(idx), -c / h);
          break;
        case Scheme::kBackward:
          add(grid.unknown_at(idx), c / h);
          add(grid.unknown_at(bwd), -c / h);
          break;
        case Scheme::kCentral:
          add(grid.unknown_at(fwd), c / (2.0 * h));
          add(grid.unknown_at(bwd), -c / (2.0 * h));
          break;
      }
    }
    std::sort(row.begin(), row.end());
  }
  return out;
}

// Appends the Gram triplets of sum_r w_r D(r, i) D(r, j). Each product is
// computed once and pushed for (i, j) and (j, i), so duplicate summation
// yields a bitwise symmetric matrix.
void gram_triplets(const RowEntries& d, const Eigen::VectorXd& w, double scale, std::vector<Triplet>& out) {
  for (std::size_t r = 0; r < d.rows.size(); ++r) {
    const auto& row = d.rows[r];
    const double wr = w[static_cast<Eigen::Index>(r)] * scale;
    for (std::size_t a = 0; a < row.size(); ++a) {
      const double wa = wr * row[a].second;
      out.emplace_back(row[a].first, row[a].first, wa * row[a].second);
      for (std::size_t b = a + 1; b < row.size(); ++b) {
        const double v = wa * row[b].second;
        out.emplace_back(row[a].first, row[b].first, v);
        out.emplace_back(row[b].first, row[a].first, v);
      }
    }
  }
}

void sum_of_squares_triplets(const std::vector<vf::VectorField>& fields, const Grid& grid,
                             const Eigen::VectorXd& wrows, std::vector<Triplet>& out) {
  for (const vf::VectorField& x : fields) {
    gram_triplets(field_rows(x, grid, Scheme::kForward, false), wrows, 0.5, out);
    gram_triplets(field_rows(x, grid, Scheme::kBackward, false), wrows, 0.5, out);
  }
}

void measure_symmetry(OperatorPencil& p) {
  p.asymmetry = 0.0;
  p.s_max = 0.0;
  const SparseMatrix st = p.S.transpose();
  const SparseMatrix diff = p.S - st;
  for (int k = 0; k < diff.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) p.asymmetry = std::max(p.asymmetry, std::abs(it.value()));
  }
  for (int k = 0; k < p.S.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(p.S, k); it; ++it) p.s_max = std::max(p.s_max, std::abs(it.value()));
  }
  p.symmetric = p.asymmetry == 0.0;
}

}  // namespace

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::kForward:
      return "forward";
    case Scheme::kBackward:
      return "backward";
    case Scheme::kCentral:
      return "central";
  }
  return "?";
}

void Scenario::normalize() {
  const int n = chart.dim;
  if (fields.empty()) throw Error(ErrorCode::kInvalidArgument, "scenario '" + id + "' has no fields");
  for (const auto& f : fields) {
    if (f.dim() != n) throw DimensionError("field dimension differs from chart dimension in '" + id + "'");
  }
  if (potential.dim() == 0) potential = vf::ChartCoeff(n);
  if (density.dim() == 0) density = vf::ChartCoeff::constant(n, vf::Scalar(1));
  if (potential.dim() != n || density.dim() != n) throw DimensionError("coefficient dimension mismatch in '" + id + "'");
  const std::size_t m = fields.size();
  if (!commutator.empty()) {
    if (commutator.size() != m) throw DimensionError("commutator matrix must be m x m");
    for (auto& row : commutator) {
      if (row.size() != m) throw DimensionError("commutator matrix must be m x m");
      for (auto& c : row) {
        if (c.dim() == 0) c = vf::ChartCoeff(n);
        if (c.dim() != n) throw DimensionError("commutator coefficient dimension mismatch");
      }
    }
  }
  if (!drift.empty()) {
    if (drift.size() != m) throw DimensionError("drift must have one coefficient per field");
    for (auto& c : drift) {
      if (c.dim() == 0) c = vf::ChartCoeff(n);
      if (c.dim() != n) throw DimensionError("drift coefficient dimension mismatch");
    }
  }
  if (psi) {
    for (const auto& f : psi->fields) {
      if (f.dim() != n) throw DimensionError("perturbation field dimension mismatch");
    }
    if (psi->psi.dim() != n) throw DimensionError("psi dimension mismatch");
  }
}

bool Scenario::first_order_free() const { return first_order_field().is_zero(); }

vf::VectorField Scenario::first_order_field() const {
  vf::VectorField acc(chart.dim);
  for (std::size_t i = 0; i < commutator.size(); ++i) {
    for (std::size_t j = 0; j < commutator[i].size(); ++j) {
      if (is_zero_coeff(commutator[i][j])) continue;
      acc = acc + commutator[i][j] * vf::bracket(fields[i], fields[j]);
    }
  }
  for (std::size_t i = 0; i < drift.size(); ++i) {
    if (is_zero_coeff(drift[i])) continue;
    acc = acc + drift[i] * fields[i];
  }
  return acc;
}

std::vector<vf::VectorField> Scenario::principal_fields() const {
  std::vector<vf::VectorField> out = fields;
  if (psi && !psi->psi.is_zero()) {
    for (const auto& y : psi->fields) out.push_back(psi->psi * y);
  }
  return out;
}

SparseMatrix discretize_field(const vf::VectorField& x, const Grid& grid, Scheme scheme) {
  const RowEntries d = field_rows(x, grid, scheme, false);
  std::vector<Triplet> t;
  for (std::size_t r = 0; r < d.rows.size(); ++r) {
    for (const auto& [c, v] : d.rows[r]) t.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
  }
  SparseMatrix out(static_cast<Eigen::Index>(grid.num_rows()), static_cast<Eigen::Index>(grid.num_unknowns()));
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

Eigen::VectorXd row_masses(const Grid& grid, const vf::ChartCoeff& density) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(grid.num_rows()));
  const double cell = grid.cell_volume();
  for (std::size_t r = 0; r < grid.num_rows(); ++r) {
    const auto pos = grid.position(grid.row_index(r));
    const double h = density.evaluate(pos);
    if (!(h > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "density must be positive at every grid node");
    }
    w[static_cast<Eigen::Index>(r)] = h * cell;
  }
  return w;
}

Eigen::VectorXd node_values(const Grid& grid, const vf::ChartCoeff& f) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(grid.num_unknowns()));
  for (std::size_t u = 0; u < grid.num_unknowns(); ++u) {
    v[static_cast<Eigen::Index>(u)] = f.evaluate(grid.position(grid.unknown_index(u)));
  }
  return v;
}

OperatorPencil assemble_operator(const Scenario& input, const Grid& grid) {
  Scenario sc = input;
  sc.normalize();
  if (grid.dim() != sc.dim()) throw DimensionError("grid and scenario dimensions differ");
  const Eigen::VectorXd wrows = row_masses(grid, sc.density);
  const std::size_t nu = grid.num_unknowns();
  Eigen::VectorXd w(static_cast<Eigen::Index>(nu));
  for (std::size_t r = 0; r < grid.num_rows(); ++r) {
    const long u = grid.unknown_of_row(r);
    if (u != Grid::kOutside) w[u] = wrows[static_cast<Eigen::Index>(r)];
  }

  std::vector<Triplet> t;
  sum_of_squares_triplets(sc.fields, grid, wrows, t);

  const Eigen::VectorXd v = node_values(grid, sc.potential);
  for (std::size_t u = 0; u < nu; ++u) {
    const auto i = static_cast<Eigen::Index>(u);
    if (v[i] != 0.0) t.emplace_back(static_cast<int>(u), static_cast<int>(u), w[i] * v[i]);
  }

  const vf::VectorField first = sc.first_order_field();
  if (!first.is_zero()) {
    const RowEntries a = field_rows(first, grid, Scheme::kCentral, true);
    for (std::size_t u = 0; u < nu; ++u) {
      for (const auto& [c, val] : a.rows[u]) t.emplace_back(static_cast<int>(u), static_cast<int>(c), w[u] * val);
    }
  }

  if (sc.psi && !sc.psi->psi.is_zero()) {
    std::vector<Triplet> tp;
    sum_of_squares_triplets(sc.psi->fields, grid, wrows, tp);
    SparseMatrix sp(static_cast<Eigen::Index>(nu), static_cast<Eigen::Index>(nu));
    sp.setFromTriplets(tp.begin(), tp.end());
    const Eigen::VectorXd psi = node_values(grid, sc.psi->psi);
    for (int k = 0; k < sp.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(sp, k); it; ++it) {
        const double pi = psi[it.row()] * psi[it.row()];
        const double pj = psi[it.col()] * psi[it.col()];
        const double val = 0.5 * (pi + pj) * it.value();
        if (val != 0.0) t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), val);
      }
    }
  }

  OperatorPencil p;
  p.S.resize(static_cast<Eigen::Index>(nu), static_cast<Eigen::Index>(nu));
  p.S.setFromTriplets(t.begin(), t.end());
  p.S.prune(0.0);
  p.S.makeCompressed();
  p.W = std::move(w);
  p.chart = to_string(grid.chart().kind);
  p.resolution = grid.resolution();
  p.grid = std::make_shared<Grid>(grid);
  measure_symmetry(p);
  if (sc.self_adjoint_claim && !first.is_zero() && p.asymmetry > 1e-10 * p.s_max) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "scenario claims self-adjointness but measured asymmetry %.3g exceeds 1e-10 * %.3g",
                  p.asymmetry, p.s_max);
    throw NumericalError(buf);
  }
  return p;
}

OperatorPencil assemble_operator(const Scenario& scenario, const std::vector<int>& resolution) {
  return assemble_operator(scenario, Grid(scenario.chart, resolution));
}

Scenario psi_transform(const Scenario& base, const std::vector<vf::VectorField>& lprime_fields,
                       const vf::ChartCoeff& psi) {
  if (!base.self_adjoint_claim) throw Error(ErrorCode::kInvalidArgument, "psi transform needs a self-adjoint base");
  for (const auto& f : lprime_fields) {
    if (f.dim() != base.dim()) throw DimensionError("perturbation fields live on a different chart");
  }
  if (psi.dim() != base.dim()) throw DimensionError("psi lives on a different chart");
  if (base.psi) throw Error(ErrorCode::kInvalidArgument, "scenario already carries a psi perturbation");
  Scenario out = base;
  out.psi = PsiPart{lprime_fields, psi};
  return out;
}

OperatorPencil make_pencil(SparseMatrix S, Eigen::VectorXd W) {
  if (S.rows() != S.cols() || S.rows() != W.size()) throw DimensionError("pencil matrices have inconsistent sizes");
  for (Eigen::Index i = 0; i < W.size(); ++i) {
    if (!(W[i] > 0.0)) throw Error(ErrorCode::kInvalidArgument, "mass matrix must be positive");
  }
  OperatorPencil p;
  p.S = std::move(S);
  p.S.makeCompressed();
  p.W = std::move(W);
  p.chart = "explicit";
  p.scheme = "explicit";
  measure_symmetry(p);
  return p;
}

OperatorPencil with_potential(const OperatorPencil& p, const Eigen::VectorXd& v) {
  if (v.size() != p.W.size()) throw DimensionError("potential size differs from pencil dimension");
  OperatorPencil out = p;
  SparseMatrix d(p.S.rows(), p.S.cols());
  std::vector<Triplet> t;
  for (Eigen::Index i = 0; i < v.size(); ++i) t.emplace_back(i, i, p.W[i] * v[i]);
  d.setFromTriplets(t.begin(), t.end());
  out.S = p.S + d;
  out.S.makeCompressed();
  measure_symmetry(out);
  return out;
}

std::string pencil_header_json(const OperatorPencil& p) {
  nlohmann::ordered_json j;
  j["format"] = "row col value";
  j["index_base"] = 0;
  j["dim"] = p.dim();
  j["nnz"] = p.S.nonZeros();
  j["chart"] = p.chart;
  j["resolution"] = p.resolution;
  j["scheme"] = p.scheme;
  j["symmetric"] = p.symmetric;
  j["asymmetry"] = p.asymmetry;
  j["s_max"] = p.s_max;
  j["total_mass"] = p.total_mass();
  std::vector<double> w(p.W.data(), p.W.data() + p.W.size());
  j["mass_min"] = w.empty() ? 0.0 : *std::min_element(w.begin(), w.end());
  j["mass_max"] = w.empty() ? 0.0 : *std::max_element(w.begin(), w.end());
  return j.dump(2) + "\n";
}

std::string pencil_triplets(const OperatorPencil& p) {
  const Eigen::SparseMatrix<double, Eigen::RowMajor> r = p.S;
  std::string out;
  out.reserve(static_cast<std::size_t>(r.nonZeros()) * 32);
  char buf[64];
  for (int k = 0; k < r.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(r, k); it; ++it) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", k, static_cast<int>(it.col()), it.value());
      out += buf;
    }
  }
  return out;
}

}  // namespace hypospec::assembly
