#pragma once

#include <Eigen/Sparse>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hypospec/chart_coeff.hpp"
#include "hypospec/grid.hpp"
#include "hypospec/vector_field.hpp"

namespace hypospec::assembly {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class Scheme { kForward, kBackward, kCentral };

const char* to_string(Scheme s);

/// Perturbation psi^2 L' / 2 + (psi^2 L')^* / 2 with L' = sum of squares of
/// `fields`.
struct PsiPart {
  std::vector<vf::VectorField> fields;
  vf::ChartCoeff psi;
};

/// L + V with L = -sum X_i^2 + sum c_ij [X_i, X_j] + sum gamma_i X_i, on a
/// chart with density mu = h dx.
struct Scenario {
  std::string id;
  ChartSpec chart;
  std::vector<vf::VectorField> fields;
  std::vector<std::vector<vf::ChartCoeff>> commutator;  // m x m, or empty
  std::vector<vf::ChartCoeff> drift;                    // m, or empty
  vf::ChartCoeff potential;                             // default: zero
  vf::ChartCoeff density;                               // default: one
  bool self_adjoint_claim = true;
  std::optional<PsiPart> psi;

  int dim() const noexcept { return chart.dim; }
  /// Fills in default potential/density and checks dimensions.
  void normalize();
  /// True when commutator and drift terms are all zero.
  bool first_order_free() const;
  /// Fields whose sum of squares has the same principal part, used by the
  /// audit: the base fields plus psi * Y for every perturbation field Y.
  std::vector<vf::VectorField> principal_fields() const;
  /// The symbolic first-order field sum c_ij [X_i, X_j] + sum gamma_i X_i.
  vf::VectorField first_order_field() const;
};

struct OperatorPencil {
  SparseMatrix S;     // both triangles stored
  Eigen::VectorXd W;  // diagonal mass matrix
  bool symmetric = true;
  double asymmetry = 0.0;  // max |S - S^T|
  double s_max = 0.0;      // max |S|
  std::string chart;
  std::vector<int> resolution;
  std::string scheme = "sum-of-squares:forward/backward";
  std::shared_ptr<const Grid> grid;  // null for synthetic pencils

  std::size_t dim() const noexcept { return static_cast<std::size_t>(W.size()); }
  double total_mass() const { return W.sum(); }
};

/// Dense-oracle cap for non-symmetric scenarios.
inline constexpr std::size_t kDenseCap = 4096;

/// Row-lattice by unknown matrix of X with the chosen difference scheme.
SparseMatrix discretize_field(const vf::VectorField& x, const Grid& grid, Scheme scheme);

/// Mass weights h(node) * cell volume over the row lattice.
Eigen::VectorXd row_masses(const Grid& grid, const vf::ChartCoeff& density);

OperatorPencil assemble_operator(const Scenario& scenario, const Grid& grid);
OperatorPencil assemble_operator(const Scenario& scenario, const std::vector<int>& resolution);

/// Scenario whose pencil is S_base + (diag(psi^2) S' + S' diag(psi^2)) / 2.
Scenario psi_transform(const Scenario& base, const std::vector<vf::VectorField>& lprime_fields,
                       const vf::ChartCoeff& psi);

/// Pencil from explicit matrices; used by tests and the C API.
OperatorPencil make_pencil(SparseMatrix S, Eigen::VectorXd W);

/// Returns a copy with S replaced by S + W diag(v).
OperatorPencil with_potential(const OperatorPencil& p, const Eigen::VectorXd& v);

/// Potential values at the unknowns of the pencil's grid.
Eigen::VectorXd node_values(const Grid& grid, const vf::ChartCoeff& f);

/// JSON header and sorted "row col value" triplet text.
std::string pencil_header_json(const OperatorPencil& p);
std::string pencil_triplets(const OperatorPencil& p);

}  // namespace hypospec::assembly
