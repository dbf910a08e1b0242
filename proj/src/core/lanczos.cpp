#include "hypospec/lanczos.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "hypospec/error.hpp"
#include "hypospec/rng.hpp"

namespace hypospec::linalg {
namespace {

std::vector<double> gauss_values(const std::vector<double>& alpha, const std::vector<double>& beta, double unorm2,
                                 const std::vector<double>& ts, double& theta_min) {
  const int j = static_cast<int>(alpha.size());
  std::vector<double> out(ts.size(), 0.0);
  if (j == 1) {
    theta_min = alpha[0];
    for (std::size_t q = 0; q < ts.size(); ++q) out[q] = unorm2 * std::exp(-ts[q] * alpha[0]);
    return out;
  }
  Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(alpha.data(), j);
  Eigen::VectorXd e = Eigen::Map<const Eigen::VectorXd>(beta.data(), j - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
  const Eigen::VectorXd& theta = es.eigenvalues();
  theta_min = theta(0);
  const auto first = es.eigenvectors().row(0);
  for (std::size_t q = 0; q < ts.size(); ++q) {
    double s = 0.0;
    for (int i = 0; i < j; ++i) s += first(i) * first(i) * std::exp(-ts[q] * theta(i));
    out[q] = unorm2 * s;
  }
  return out;
}

}  // namespace

QuadratureResult lanczos_exp_quadrature(const MatVec& op, const Eigen::VectorXd& u, const std::vector<double>& ts,
                                        double rel_tol, int max_steps) {
  QuadratureResult res;
  const double unorm = u.norm();
  if (ts.empty()) {
    res.converged = true;
    return res;
  }
  if (unorm == 0.0) {
    res.values.assign(ts.size(), 0.0);
    res.converged = true;
    return res;
  }
  const Eigen::Index n = u.size();
  max_steps = std::max(1, std::min<int>(max_steps, static_cast<int>(n)));
  Eigen::VectorXd q = u / unorm, q_prev = Eigen::VectorXd::Zero(n), w(n);
  std::vector<double> alpha, beta;
  std::vector<double> prev;
  double beta_prev = 0.0;
  double theta_prev = 0.0;
  // Values can look stable while the lowest Ritz value is still far from the
  // bottom of the spectrum and exp(-t theta) underflows, so theta must settle too.
  const double t_max = *std::max_element(ts.begin(), ts.end());
  constexpr int kCheckEvery = 4;
  for (int j = 0; j < max_steps; ++j) {
    op(q, w);
    const double a = q.dot(w);
    w -= a * q;
    if (j > 0) w -= beta_prev * q_prev;
    alpha.push_back(a);
    const double b = w.norm();
    const bool invariant = b <= 1e-13 * std::max(std::abs(a), 1.0);
    const bool last = invariant || j + 1 == max_steps;
    if (last || (j + 1) % kCheckEvery == 0) {
      double theta = 0.0;
      std::vector<double> cur = gauss_values(alpha, beta, unorm * unorm, ts, theta);
      bool stable = !prev.empty() && t_max * std::abs(theta - theta_prev) <= std::max(rel_tol, 1e-12);
      for (std::size_t k = 0; stable && k < cur.size(); ++k) {
        if (std::abs(cur[k] - prev[k]) > rel_tol * std::abs(cur[k])) stable = false;
      }
      res.values = cur;
      res.steps = j + 1;
      if (stable || invariant) {
        res.converged = true;
        return res;
      }
      prev = std::move(cur);
      theta_prev = theta;
    }
    if (last) break;
    beta.push_back(b);
    q_prev.swap(q);
    q = w / b;
    beta_prev = b;
  }
  res.converged = false;
  return res;
}

BlockEigResult block_lanczos_largest(const BlockOp& op, Eigen::Index n, int k, int required, int block,
                                     int max_basis, double tol, std::uint64_t seed) {
  required = std::clamp(required, 1, k);
  if (k < 1 || block < 1 || n < 1) throw DimensionError("block Lanczos needs k, block and n positive");
  block = static_cast<int>(std::min<Eigen::Index>(block, n));
  max_basis = static_cast<int>(std::min<Eigen::Index>(max_basis, n));
  if (max_basis < k + block) max_basis = static_cast<int>(std::min<Eigen::Index>(n, k + block));
  Rng rng(seed);

  Eigen::MatrixXd basis(n, max_basis);
  auto random_block = [&](int cols) {
    Eigen::MatrixXd x(n, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < n; ++r) x(r, c) = rng.normal();
    return x;
  };
  // Orthonormalizes x against basis[:, 0:used) and itself; columns that
  // vanish are replaced by fresh random directions.
  auto orthonormalize = [&](Eigen::MatrixXd& x, int used, Eigen::MatrixXd* r_out) {
    const int cols = static_cast<int>(x.cols());
    for (int pass = 0; pass < 2 && used > 0; ++pass) {
      x -= basis.leftCols(used) * (basis.leftCols(used).transpose() * x);
    }
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(cols, cols);
    const double scale = std::max(x.norm(), 1e-300);
    for (int c = 0; c < cols; ++c) {
      for (int pass = 0; pass < 2; ++pass) {
        for (int p = 0; p < c; ++p) {
          const double h = x.col(p).dot(x.col(c));
          x.col(c) -= h * x.col(p);
          if (pass == 0) r(p, c) = h; else r(p, c) += h;
        }
      }
      double nrm = x.col(c).norm();
      if (nrm <= 1e-10 * scale) {
        for (int p = 0; p < c; ++p) r(p, c) = 0.0;
        r(c, c) = 0.0;
        for (int attempt = 0; attempt < 4; ++attempt) {
          Eigen::VectorXd v = random_block(1).col(0);
          for (int pass = 0; pass < 2; ++pass) {
            if (used > 0) v -= basis.leftCols(used) * (basis.leftCols(used).transpose() * v);
            for (int p = 0; p < c; ++p) v -= x.col(p).dot(v) * x.col(p);
          }
          nrm = v.norm();
          if (nrm > 1e-8) {
            x.col(c) = v / nrm;
            break;
          }
        }
      } else {
        r(c, c) = nrm;
        x.col(c) /= nrm;
      }
    }
    if (r_out) *r_out = r;
  };

  Eigen::MatrixXd x = random_block(block);
  orthonormalize(x, 0, nullptr);
  basis.leftCols(block) = x;
  // Projected matrix basis^T A basis: block tridiagonal, plus an arrow
  // coupling to the kept Ritz vectors after a thick restart.
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(max_basis, max_basis);
  int used = block;
  BlockEigResult res;
  constexpr int kMaxRestarts = 60;
  int restarts = 0;
  for (int it = 0;; ++it) {
    const int start = used - block;
    Eigen::MatrixXd z = op(basis.middleCols(start, block));
    Eigen::MatrixXd a = basis.middleCols(start, block).transpose() * z;
    t.block(start, start, block, block) = 0.5 * (a + a.transpose());
    Eigen::MatrixXd r;
    orthonormalize(z, used, &r);

    const int m = used;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t.topLeftCorner(m, m));
    const int want = std::min(k, m);
    Eigen::VectorXd theta(want), resid(want);
    Eigen::MatrixXd s(m, want);
    for (int i = 0; i < want; ++i) {
      theta(i) = es.eigenvalues()(m - 1 - i);
      s.col(i) = es.eigenvectors().col(m - 1 - i);
    }
    bool done = want == k;
    const double cluster = want >= required ? theta(required - 1) * (1.0 - 1e-6) : 0.0;
    for (int i = 0; i < want; ++i) {
      resid(i) = (r * s.col(i).tail(block)).norm();
      const bool needed = i < required || theta(i) >= cluster;
      if (needed && resid(i) > tol * std::max(std::abs(theta(i)), 1e-300)) done = false;
    }
    if (done || used >= n) {
      res.theta = theta;
      res.vectors = basis.leftCols(m) * s;
      res.residual = resid;
      res.converged = want == k && (done || used >= n);
      res.iterations = it + 1;
      return res;
    }
    if (used + block <= max_basis) {
      t.block(used, start, block, block) = r;
      t.block(start, used, block, block) = r.transpose();
      basis.middleCols(used, block) = z;
      used += block;
      continue;
    }
    // Thick restart: keep the leading Ritz vectors and the residual block.
    const int keep = std::min<int>({m - block, max_basis - 2 * block, k + (max_basis - k) / 3});
    if (++restarts > kMaxRestarts || keep < 1) {
      res.theta = theta;
      res.vectors = basis.leftCols(m) * s;
      res.residual = resid;
      res.converged = false;
      res.iterations = it + 1;
      return res;
    }
    Eigen::MatrixXd sk(m, keep);
    Eigen::VectorXd tk(keep);
    for (int i = 0; i < keep; ++i) {
      tk(i) = es.eigenvalues()(m - 1 - i);
      sk.col(i) = es.eigenvectors().col(m - 1 - i);
    }
    const Eigen::MatrixXd y = basis.leftCols(m) * sk;
    const Eigen::MatrixXd coupling = r * sk.bottomRows(block);  // block x keep
    basis.leftCols(keep) = y;
    basis.middleCols(keep, block) = z;
    t.setZero();
    t.topLeftCorner(keep, keep) = tk.asDiagonal();
    t.block(keep, 0, block, keep) = coupling;
    t.block(0, keep, keep, block) = coupling.transpose();
    used = keep + block;
  }
}

}  // namespace hypospec::linalg
