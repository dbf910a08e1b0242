#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "hypospec/ordering.hpp"

namespace hypospec::linalg {

/// Supernodal multifrontal LDL^T of S - shift * diag(W) without pivoting.
/// The symbolic analysis is done once per pattern; numeric factorizations
/// for different shifts reuse it. Inertia is read off the pivots.
class MultifrontalLdlt {
 public:
  struct Result {
    bool ok = false;          // false on a zero or non-finite pivot
    long negative = 0;        // number of negative pivots
    double min_pivot = 0.0;   // min |d_j| / W_j over all pivots
  };

  MultifrontalLdlt(const Eigen::SparseMatrix<double>& s, const Ordering& ordering);

  /// Inertia of S - shift W (plus diag(jitter) when given); fronts are
  /// discarded, so concurrent calls are safe.
  Result inertia(const Eigen::VectorXd& w, double shift, const Eigen::VectorXd* jitter = nullptr) const;
  /// Factorizes and keeps the factor for solve().
  Result factorize(const Eigen::VectorXd& w, double shift, const Eigen::VectorXd* jitter = nullptr);

  /// Solves (S - shift W) X = B with the kept factor.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;

  int size() const noexcept { return n_; }
  int num_supernodes() const noexcept { return static_cast<int>(nodes_.size()); }
  /// Entries of L counting the dense supernodal blocks.
  long long factor_entries() const noexcept { return factor_entries_; }
  long long max_front() const noexcept { return max_front_; }
  /// Approximate floating-point operations of one numeric factorization.
  double flops() const noexcept { return flops_; }

 private:
  struct Supernode {
    int first = 0;
    int last = 0;           // exclusive
    std::vector<int> rows;  // permuted indices beyond the block, sorted
    std::vector<int> children;
    int parent = -1;
  };
  struct Stored {
    Eigen::MatrixXd l;  // front rows x pivots; unit lower part plus L21
    Eigen::VectorXd d;
  };

  void build_blocks_from_etree();
  Result run(const Eigen::VectorXd& w, double shift, const Eigen::VectorXd* jitter, std::vector<Stored>* keep) const;

  int n_ = 0;
  std::vector<int> perm_;   // perm_[new] = old
  std::vector<int> iperm_;  // iperm_[old] = new
  // Lower triangle of the permuted matrix in compressed columns.
  std::vector<int> col_start_;
  std::vector<int> col_rows_;
  std::vector<double> col_vals_;
  std::vector<Supernode> nodes_;
  std::vector<Stored> stored_;
  long long factor_entries_ = 0;
  long long max_front_ = 0;
  double flops_ = 0.0;
};

}  // namespace hypospec::linalg
