#include "hypospec/multifrontal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hypospec/error.hpp"

namespace hypospec::linalg {
namespace {

constexpr int kPanel = 48;

// In-place partial LDL^T of the leading p columns of the lower triangle of
// f. Returns false on a zero or non-finite pivot.
bool partial_ldlt(Eigen::MatrixXd& f, int p, Eigen::VectorXd& d) {
  const int n = static_cast<int>(f.rows());
  d.resize(p);
  Eigen::VectorXd c;
  for (int k0 = 0; k0 < p; k0 += kPanel) {
    const int b = std::min(kPanel, p - k0);
    for (int k = k0; k < k0 + b; ++k) {
      const double dk = f(k, k);
      if (dk == 0.0 || !std::isfinite(dk)) return false;
      d[k] = dk;
      const int below = n - k - 1;
      if (below > 0) {
        c = f.col(k).tail(below);
        f.col(k).tail(below) /= dk;
        // Update the remaining columns of the panel.
        for (int j = k + 1; j < k0 + b; ++j) {
          const double lj = f(j, k);
          f.col(j).tail(n - j) -= lj * c.tail(n - j);
        }
      }
    }
    const int r0 = k0 + b;
    if (r0 < n) {
      const auto lp = f.block(r0, k0, n - r0, b);
      const Eigen::MatrixXd ld = lp * d.segment(k0, b).asDiagonal();
      f.block(r0, r0, n - r0, n - r0).triangularView<Eigen::Lower>() -= ld * lp.transpose();
    }
  }
  return true;
}

}  // namespace

MultifrontalLdlt::MultifrontalLdlt(const Eigen::SparseMatrix<double>& s, const Ordering& ordering) {
  if (s.rows() != s.cols()) throw DimensionError("factorization needs a square matrix");
  n_ = static_cast<int>(s.rows());
  perm_ = ordering.perm;
  if (static_cast<int>(perm_.size()) != n_) throw DimensionError("ordering size differs from matrix size");
  iperm_.assign(n_, -1);
  for (int k = 0; k < n_; ++k) {
    if (perm_[k] < 0 || perm_[k] >= n_ || iperm_[perm_[k]] >= 0) throw Error(ErrorCode::kInternal, "invalid ordering");
    iperm_[perm_[k]] = k;
  }

  // Permuted lower triangle.
  std::vector<int> count(n_ + 1, 0);
  for (int c = 0; c < n_; ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(s, c); it; ++it) {
      const int i = iperm_[it.row()], j = iperm_[c];
      if (i >= j) ++count[j + 1];
    }
  }
  std::partial_sum(count.begin(), count.end(), count.begin());
  col_start_ = count;
  col_rows_.resize(col_start_[n_]);
  col_vals_.resize(col_start_[n_]);
  std::vector<int> fill(col_start_.begin(), col_start_.end() - 1);
  for (int c = 0; c < n_; ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(s, c); it; ++it) {
      const int i = iperm_[it.row()], j = iperm_[c];
      if (i < j) continue;
      col_rows_[fill[j]] = i;
      col_vals_[fill[j]] = it.value();
      ++fill[j];
    }
  }
  for (int j = 0; j < n_; ++j) {
    // Sort each column by row so the diagonal comes first.
    std::vector<std::pair<int, double>> tmp;
    for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) tmp.emplace_back(col_rows_[k], col_vals_[k]);
    std::sort(tmp.begin(), tmp.end());
    for (std::size_t k = 0; k < tmp.size(); ++k) {
      col_rows_[col_start_[j] + k] = tmp[k].first;
      col_vals_[col_start_[j] + k] = tmp[k].second;
    }
  }

  if (ordering.block_start.empty()) {
    build_blocks_from_etree();
  } else {
    const int nb = static_cast<int>(ordering.block_start.size()) - 1;
    if (ordering.block_start.front() != 0 || ordering.block_start.back() != n_ ||
        static_cast<int>(ordering.block_parent.size()) != nb) {
      throw Error(ErrorCode::kInternal, "inconsistent supernode partition");
    }
    nodes_.resize(nb);
    for (int b = 0; b < nb; ++b) {
      nodes_[b].first = ordering.block_start[b];
      nodes_[b].last = ordering.block_start[b + 1];
      nodes_[b].parent = ordering.block_parent[b];
      if (nodes_[b].parent >= 0) {
        if (nodes_[b].parent <= b) throw Error(ErrorCode::kInternal, "supernode parent precedes child");
        nodes_[nodes_[b].parent].children.push_back(b);
      }
    }
    // Row structure: own off-block pattern merged with the children's.
    for (int b = 0; b < nb; ++b) {
      Supernode& sn = nodes_[b];
      std::vector<int> rows;
      for (int j = sn.first; j < sn.last; ++j) {
        for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
          if (col_rows_[k] >= sn.last) rows.push_back(col_rows_[k]);
        }
      }
      for (int c : sn.children) {
        for (int r : nodes_[c].rows) {
          if (r >= sn.last) rows.push_back(r);
        }
      }
      std::sort(rows.begin(), rows.end());
      rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
      if (!rows.empty() && sn.parent >= 0 && rows.front() < nodes_[sn.parent].first) {
        throw Error(ErrorCode::kInternal, "supernode structure escapes its ancestors");
      }
      sn.rows = std::move(rows);
    }
  }
  for (const Supernode& sn : nodes_) {
    const long long p = sn.last - sn.first;
    const long long f = p + static_cast<long long>(sn.rows.size());
    factor_entries_ += f * p - p * (p - 1) / 2;
    max_front_ = std::max(max_front_, f);
    const double fd = static_cast<double>(f), rd = static_cast<double>(f - p);
    flops_ += (fd * fd * fd - rd * rd * rd) / 3.0;
  }
}

void MultifrontalLdlt::build_blocks_from_etree() {
  // Elimination tree (Liu) on the lower pattern viewed by rows.
  std::vector<int> parent(n_, -1), ancestor(n_, -1);
  std::vector<std::vector<int>> upper(n_);
  for (int j = 0; j < n_; ++j) {
    for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
      if (col_rows_[k] > j) upper[col_rows_[k]].push_back(j);
    }
  }
  for (int i = 0; i < n_; ++i) {
    for (int j : upper[i]) {
      int r = j;
      while (ancestor[r] != -1 && ancestor[r] != i) {
        const int next = ancestor[r];
        ancestor[r] = i;
        r = next;
      }
      if (ancestor[r] == -1) {
        ancestor[r] = i;
        parent[r] = i;
      }
    }
  }
  std::vector<std::vector<int>> kids(n_);
  for (int j = 0; j < n_; ++j) {
    if (parent[j] >= 0) kids[parent[j]].push_back(j);
  }
  // Column structures by merging children.
  std::vector<std::vector<int>> full(n_);
  for (int j = 0; j < n_; ++j) {
    std::vector<int> rows;
    for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
      if (col_rows_[k] > j) rows.push_back(col_rows_[k]);
    }
    for (int c : kids[j]) {
      for (int r : full[c]) {
        if (r > j) rows.push_back(r);
      }
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    full[j] = std::move(rows);
  }
  std::vector<int> block_of(n_, -1);
  for (int j = 0; j < n_; ++j) {
    const bool extend = j > 0 && parent[j - 1] == j && kids[j].size() == 1 &&
                        full[j - 1].size() == full[j].size() + 1 && !nodes_.empty() && nodes_.back().last == j;
    if (extend) {
      nodes_.back().last = j + 1;
    } else {
      Supernode sn;
      sn.first = j;
      sn.last = j + 1;
      nodes_.push_back(std::move(sn));
    }
    block_of[j] = static_cast<int>(nodes_.size()) - 1;
  }
  for (std::size_t b = 0; b < nodes_.size(); ++b) {
    Supernode& sn = nodes_[b];
    sn.rows = full[sn.last - 1];
    const int p = parent[sn.last - 1];
    sn.parent = p < 0 ? -1 : block_of[p];
    if (sn.parent >= 0) nodes_[sn.parent].children.push_back(static_cast<int>(b));
  }
}

MultifrontalLdlt::Result MultifrontalLdlt::inertia(const Eigen::VectorXd& w, double shift,
                                                   const Eigen::VectorXd* jitter) const {
  return run(w, shift, jitter, nullptr);
}

MultifrontalLdlt::Result MultifrontalLdlt::factorize(const Eigen::VectorXd& w, double shift,
                                                     const Eigen::VectorXd* jitter) {
  stored_.clear();
  std::vector<Stored> kept;
  const Result r = run(w, shift, jitter, &kept);
  if (r.ok) stored_ = std::move(kept);
  return r;
}

MultifrontalLdlt::Result MultifrontalLdlt::run(const Eigen::VectorXd& w, double shift, const Eigen::VectorXd* jitter,
                                               std::vector<Stored>* keep) const {
  if (w.size() != n_) throw DimensionError("mass vector size differs from matrix size");
  Result res;
  res.min_pivot = INFINITY;
  if (keep) keep->assign(nodes_.size(), Stored{});
  std::vector<Eigen::MatrixXd> pending(nodes_.size());
  std::vector<int> rel(n_, -1);
  for (std::size_t b = 0; b < nodes_.size(); ++b) {
    const Supernode& sn = nodes_[b];
    const int p = sn.last - sn.first;
    const int f = p + static_cast<int>(sn.rows.size());
    for (int k = 0; k < p; ++k) rel[sn.first + k] = k;
    for (std::size_t r = 0; r < sn.rows.size(); ++r) rel[sn.rows[r]] = p + static_cast<int>(r);
    Eigen::MatrixXd front = Eigen::MatrixXd::Zero(f, f);
    for (int j = sn.first; j < sn.last; ++j) {
      const int cj = rel[j];
      for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) front(rel[col_rows_[k]], cj) += col_vals_[k];
      const int old = perm_[j];
      front(cj, cj) -= shift * w[old];
      if (jitter) front(cj, cj) += (*jitter)[old];
    }
    for (int c : sn.children) {
      Eigen::MatrixXd& u = pending[c];
      const auto& crow = nodes_[c].rows;
      const int m = static_cast<int>(crow.size());
      for (int jj = 0; jj < m; ++jj) {
        const int fj = rel[crow[jj]];
        for (int ii = jj; ii < m; ++ii) front(rel[crow[ii]], fj) += u(ii, jj);
      }
      Eigen::MatrixXd().swap(u);
    }
    Eigen::VectorXd d;
    if (!partial_ldlt(front, p, d)) {
      res.ok = false;
      return res;
    }
    for (int k = 0; k < p; ++k) {
      if (d[k] < 0.0) ++res.negative;
      res.min_pivot = std::min(res.min_pivot, std::abs(d[k]) / w[perm_[sn.first + k]]);
    }
    if (f > p) pending[b] = front.bottomRightCorner(f - p, f - p);
    if (keep) {
      (*keep)[b].l = front.leftCols(p);
      (*keep)[b].d = std::move(d);
    }
  }
  res.ok = true;
  return res;
}

Eigen::MatrixXd MultifrontalLdlt::solve(const Eigen::MatrixXd& b) const {
  if (stored_.size() != nodes_.size()) throw Error(ErrorCode::kInternal, "solve called without a kept factor");
  if (b.rows() != n_) throw DimensionError("right-hand side size differs from matrix size");
  const Eigen::Index nrhs = b.cols();
  Eigen::MatrixXd y(n_, nrhs);
  for (int k = 0; k < n_; ++k) y.row(k) = b.row(perm_[k]);
  Eigen::MatrixXd gathered;
  for (std::size_t s = 0; s < nodes_.size(); ++s) {
    const Supernode& sn = nodes_[s];
    const int p = sn.last - sn.first;
    const Eigen::MatrixXd& l = stored_[s].l;
    auto ys = y.middleRows(sn.first, p);
    l.topRows(p).triangularView<Eigen::UnitLower>().solveInPlace(ys);
    if (!sn.rows.empty()) {
      gathered.noalias() = l.bottomRows(sn.rows.size()) * ys;
      for (std::size_t r = 0; r < sn.rows.size(); ++r) y.row(sn.rows[r]) -= gathered.row(r);
    }
  }
  for (std::size_t s = 0; s < nodes_.size(); ++s) {
    const Supernode& sn = nodes_[s];
    for (int k = 0; k < sn.last - sn.first; ++k) y.row(sn.first + k) /= stored_[s].d[k];
  }
  Eigen::MatrixXd xr;
  for (std::size_t s = nodes_.size(); s-- > 0;) {
    const Supernode& sn = nodes_[s];
    const int p = sn.last - sn.first;
    const Eigen::MatrixXd& l = stored_[s].l;
    auto ys = y.middleRows(sn.first, p);
    if (!sn.rows.empty()) {
      xr.resize(static_cast<Eigen::Index>(sn.rows.size()), nrhs);
      for (std::size_t r = 0; r < sn.rows.size(); ++r) xr.row(r) = y.row(sn.rows[r]);
      ys.noalias() -= l.bottomRows(sn.rows.size()).transpose() * xr;
    }
    l.topRows(p).transpose().triangularView<Eigen::UnitUpper>().solveInPlace(ys);
  }
  Eigen::MatrixXd x(n_, nrhs);
  for (int k = 0; k < n_; ++k) x.row(perm_[k]) = y.row(k);
  return x;
}

}  // namespace hypospec::linalg
