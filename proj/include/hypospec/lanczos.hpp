#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

namespace hypospec::linalg {

/// y = A x for a symmetric operator A.
using MatVec = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& y)>;
/// Y = A X applied to a block of columns.
using BlockOp = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

struct QuadratureResult {
  std::vector<double> values;  // u^T exp(-t A) u per requested t
  int steps = 0;
  bool converged = false;
};

/// Gauss quadrature through plain Lanczos: approximates u^T exp(-t A) u for
/// all t at once, stopping when every value changes by less than rel_tol
/// between checks.
QuadratureResult lanczos_exp_quadrature(const MatVec& op, const Eigen::VectorXd& u, const std::vector<double>& ts,
                                        double rel_tol, int max_steps);

struct BlockEigResult {
  Eigen::VectorXd theta;     // largest Ritz values, descending
  Eigen::MatrixXd vectors;   // Ritz vectors, one column per value
  Eigen::VectorXd residual;  // ||A y - theta y|| estimates
  bool converged = false;
  int iterations = 0;
};

/// Largest k Ritz pairs of a symmetric operator by block Lanczos with full
/// reorthogonalization. Iteration stops once the leading `required` pairs,
/// and any others tied with the last of them, have residual <= tol * |theta|.
BlockEigResult block_lanczos_largest(const BlockOp& op, Eigen::Index n, int k, int required, int block,
                                     int max_basis, double tol, std::uint64_t seed);

}  // namespace hypospec::linalg
