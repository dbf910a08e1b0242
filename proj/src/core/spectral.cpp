#include "hypospec/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "hypospec/error.hpp"
#include "hypospec/lanczos.hpp"
#include "hypospec/parallel.hpp"
#include "hypospec/rng.hpp"

namespace hypospec::spectral {
namespace {

constexpr double kTieTolerance = 1e-10;
constexpr double kTieStep = 1e-9;
constexpr double kJitter = 1e-12;
constexpr int kMaxTieRetries = 6;
constexpr int kMaxJitterRetries = 3;
constexpr double kRitzTol = 1e-9;

linalg::Ordering ordering_for(const OperatorPencil& p) {
  if (!p.grid || p.grid->num_unknowns() != p.dim()) return linalg::minimum_degree(p.S);
  const assembly::Grid& g = *p.grid;
  linalg::LatticeCoords lat;
  lat.dim = g.dim();
  lat.period.assign(lat.dim, 0);
  if (g.chart().kind != assembly::ChartKind::kBox) {
    for (int a = 0; a < lat.dim; ++a) lat.period[a] = g.unknown_shape()[a];
  }
  lat.coords.resize(p.dim() * lat.dim);
  for (std::size_t u = 0; u < p.dim(); ++u) {
    const std::vector<int> idx = g.unknown_index(u);
    for (int a = 0; a < lat.dim; ++a) lat.coords[u * lat.dim + a] = idx[a];
  }
  return linalg::nested_dissection(p.S, lat);
}

Eigen::MatrixXd dense_h(const OperatorPencil& p) {
  if (p.dim() > assembly::kDenseCap) throw DimensionError("dense oracle is limited to 4096 unknowns");
  const Eigen::VectorXd ws = p.W.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd h = Eigen::MatrixXd(p.S);
  return ws.asDiagonal() * h * ws.asDiagonal();
}

}  // namespace

SpectralEngine::SpectralEngine(OperatorPencil pencil)
    : pencil_(std::make_shared<const OperatorPencil>(std::move(pencil))) {
  const OperatorPencil& p = *pencil_;
  if (p.S.rows() != p.S.cols() || static_cast<std::size_t>(p.S.rows()) != p.dim())
    throw DimensionError("pencil matrices have inconsistent sizes");
  if (p.dim() == 0) throw DimensionError("empty pencil");
  if ((p.W.array() <= 0.0).any()) throw NumericalError("mass matrix must be positive");
  w_inv_sqrt_ = p.W.cwiseSqrt().cwiseInverse();
  Eigen::VectorXd center = Eigen::VectorXd::Zero(p.dim()), radius = Eigen::VectorXd::Zero(p.dim());
  for (int c = 0; c < p.S.outerSize(); ++c) {
    for (assembly::SparseMatrix::InnerIterator it(p.S, c); it; ++it) {
      const double v = it.value() * w_inv_sqrt_(it.row()) * w_inv_sqrt_(c);
      if (it.row() == c) center(c) += v;
      else radius(it.row()) += std::abs(v);
    }
  }
  scale_ = (center + radius).maxCoeff();
  lower_ = (center - radius).minCoeff();
  scale_ = std::max({scale_, std::abs(lower_), 1e-300});
}

const linalg::MultifrontalLdlt& SpectralEngine::symbolic() const {
  std::call_once(symbolic_once_, [this] {
    symbolic_ = std::make_unique<linalg::MultifrontalLdlt>(pencil_->S, ordering_for(*pencil_));
  });
  return *symbolic_;
}

const std::vector<double>& SpectralEngine::dense_real_parts() const {
  std::call_once(dense_once_, [this] {
    for (const auto& z : dense_eigenvalues(*pencil_)) dense_real_.push_back(z.real());
    std::sort(dense_real_.begin(), dense_real_.end());
  });
  return dense_real_;
}

void SpectralEngine::apply_h(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  y.noalias() = pencil_->S * w_inv_sqrt_.cwiseProduct(x);
  y.array() *= w_inv_sqrt_.array();
}

CountResult SpectralEngine::count_below(double lambda) const {
  CountResult out;
  out.lambda = lambda;
  if (!pencil_->symmetric) {
    const auto& re = dense_real_parts();
    out.lambda_used = lambda;
    out.count = std::upper_bound(re.begin(), re.end(), lambda) - re.begin();
    return out;
  }
  const auto& f = symbolic();
  const double tie_band = kTieTolerance * scale_;
  double lam = lambda;
  for (int tie = 0;; ++tie) {
    linalg::MultifrontalLdlt::Result r = f.inertia(pencil_->W, lam);
    for (int j = 0; !r.ok && j < kMaxJitterRetries; ++j) {
      Rng rng(derive_seed(static_cast<std::uint64_t>(std::hash<double>{}(lam)), j));
      Eigen::VectorXd jit(pencil_->dim());
      for (Eigen::Index i = 0; i < jit.size(); ++i) jit(i) = kJitter * scale_ * pencil_->W(i) * rng.symmetric_open();
      r = f.inertia(pencil_->W, lam, &jit);
      ++out.jitter_retries;
    }
    if (!r.ok) throw NumericalError("factorization broke down after jitter retries");
    if (r.min_pivot >= tie_band || tie >= kMaxTieRetries) {
      out.count = r.negative;
      out.lambda_used = lam;
      return out;
    }
    // Pivot signs are unreliable next to an eigenvalue; move up slightly.
    ++out.tie_retries;
    const double base = std::max(std::abs(lambda), 1e-3 * scale_);
    lam = lambda + kTieStep * base * std::pow(10.0, tie);
  }
}

std::vector<CountResult> SpectralEngine::count_curve(const std::vector<double>& lambdas, int workers) const {
  std::vector<CountResult> out(lambdas.size());
  if (!lambdas.empty()) {
    // Build shared state once before fanning out.
    if (pencil_->symmetric) symbolic();
    else dense_real_parts();
  }
  parallel_for(lambdas.size(), workers, [&](std::size_t i) { out[i] = count_below(lambdas[i]); });
  return out;
}

Spectrum SpectralEngine::lowest_eigs(int k, std::uint64_t seed) const {
  const OperatorPencil& p = *pencil_;
  const long n = static_cast<long>(p.dim());
  if (k < 1 || 2L * k >= n) throw DimensionError("lowest_eigs needs 1 <= k < dim/2");
  if (!p.symmetric) throw NumericalError("lowest_eigs needs a symmetric pencil");

  // Shift-invert converges at rate ~ gap / (lambda_k - sigma); a shift about
  // lambda_k below the spectrum keeps the lowest mode from dominating.
  double guess = std::max(scale_ * k / static_cast<double>(n), 1e-12 * scale_);
  while (guess < scale_ && count_below(lower_ + guess).count < k) guess *= 2.0;
  const double sigma = lower_ - guess;
  linalg::MultifrontalLdlt factor(p.S, ordering_for(p));
  const auto fr = factor.factorize(p.W, sigma);
  if (!fr.ok) throw NumericalError("shifted factorization broke down");
  const Eigen::VectorXd w_sqrt = p.W.cwiseSqrt();
  linalg::BlockOp op = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    Eigen::MatrixXd y = factor.solve(w_sqrt.asDiagonal() * x);
    return w_sqrt.asDiagonal() * y;
  };

  int block = std::clamp(k / 4, 8, 32);
  for (int attempt = 0; attempt < 4; ++attempt, block *= 2) {
    const int want = static_cast<int>(std::min<long>(k + block, n / 2));
    const int max_basis = static_cast<int>(std::min<long>(n, std::max(2 * want + 2 * block, want + 6 * block)));
    const auto res = linalg::block_lanczos_largest(op, n, want, k, block, max_basis, kRitzTol, derive_seed(seed, attempt));
    if (!res.converged) continue;

    std::vector<std::pair<double, double>> pairs;  // (lambda, residual)
    for (int i = 0; i < res.theta.size(); ++i) {
      if (res.residual(i) > kRitzTol * std::abs(res.theta(i))) continue;
      const Eigen::VectorXd v = w_inv_sqrt_.cwiseProduct(res.vectors.col(i));
      const Eigen::VectorXd sv = p.S * v;
      const Eigen::VectorXd wv = p.W.cwiseProduct(v);
      const double lam = v.dot(sv) / v.dot(wv);
      pairs.emplace_back(lam, (sv - lam * wv).norm() / wv.norm());
    }
    std::sort(pairs.begin(), pairs.end());
    if (static_cast<int>(pairs.size()) < k) continue;
    // Missed copies of multiple eigenvalues show up as an inertia excess.
    const double lam_k = pairs[k - 1].first;
    const double probe = lam_k + 1e-7 * std::max(std::abs(lam_k), 1e-3 * scale_);
    const long found = std::count_if(pairs.begin(), pairs.end(), [&](const auto& q) { return q.first <= probe; });
    if (found == static_cast<long>(res.theta.size()) && want < n / 2) continue;
    if (count_below(probe).count != found) continue;

    Spectrum s;
    s.k = k;
    s.method = "shift-invert-block-lanczos";
    for (int i = 0; i < k; ++i) {
      s.eigenvalues.push_back(pairs[i].first);
      s.residual_norms.push_back(pairs[i].second);
    }
    return s;
  }
  throw NumericalError("lowest_eigs did not converge within the iteration cap");
}

double SpectralEngine::eigsum_threshold(const Spectrum& spectrum) const {
  if (spectrum.eigenvalues.empty()) return INFINITY;
  const double cut = spectrum.eigenvalues.back();
  const double tail_count = static_cast<double>(pencil_->dim() - spectrum.eigenvalues.size());
  if (tail_count <= 0) return 0.0;
  // Bisection on t for tail(t) <= 0.01 value(t); the ratio is monotone in t.
  auto ok = [&](double t) {
    double v = 0.0;
    for (double l : spectrum.eigenvalues) v += std::exp(-t * (l - cut));
    return tail_count <= 0.01 * v;
  };
  double lo = 0.0, hi = 1.0 / std::max(cut - spectrum.eigenvalues.front(), 1e-300);
  while (!ok(hi)) {
    hi *= 2.0;
    if (hi > 1e300) return INFINITY;
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  // Margin so that eigsum_trace, which sums unshifted terms, agrees at tc.
  return hi * (1.0 + 1e-6);
}

TraceEstimate SpectralEngine::eigsum_trace(const Spectrum& spectrum, double t) const {
  if (!(t > 0.0)) throw NumericalError("heat trace needs t > 0");
  if (spectrum.eigenvalues.empty()) throw NumericalError("eigsum needs a computed spectrum");
  TraceEstimate e;
  e.t = t;
  e.method = "eigsum";
  for (double l : spectrum.eigenvalues) e.value += std::exp(-t * l);
  const double cut = spectrum.eigenvalues.back();
  e.tail_bound = static_cast<double>(pencil_->dim() - spectrum.eigenvalues.size()) * std::exp(-t * cut);
  if (e.tail_bound > 0.01 * e.value) throw NumericalError("t is below the certified-tail threshold for eigsum");
  return e;
}

std::vector<TraceEstimate> SpectralEngine::stochastic_trace(const std::vector<double>& ts,
                                                             const StochasticOptions& opt) const {
  if (opt.probes < kMinProbes) throw NumericalError("stochastic trace needs at least 8 probes");
  for (double t : ts)
    if (!(t > 0.0)) throw NumericalError("heat trace needs t > 0");
  if (!pencil_->symmetric) return dense_trace(ts);
  const std::size_t n = pencil_->dim();
  Eigen::MatrixXd samples(opt.probes, ts.size());
  linalg::MatVec op = [this](const Eigen::VectorXd& x, Eigen::VectorXd& y) { apply_h(x, y); };
  parallel_for(static_cast<std::size_t>(opt.probes), opt.workers, [&](std::size_t p) {
    Rng rng(derive_seed(opt.seed, p));
    Eigen::VectorXd z(n);
    for (std::size_t i = 0; i < n; ++i) z(i) = rng.rademacher();
    const auto q = linalg::lanczos_exp_quadrature(op, z, ts, opt.rel_tol, opt.max_steps);
    if (!q.converged) throw NumericalError("Lanczos quadrature did not converge");
    for (std::size_t j = 0; j < ts.size(); ++j) samples(p, j) = q.values[j];
  });
  std::vector<TraceEstimate> out;
  for (std::size_t j = 0; j < ts.size(); ++j) {
    const Eigen::VectorXd col = samples.col(j);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / (opt.probes - 1);
    TraceEstimate e;
    e.t = ts[j];
    e.value = mean;
    e.stderr_ = std::sqrt(var / opt.probes);
    e.method = "stochastic";
    e.probes = opt.probes;
    out.push_back(e);
  }
  return out;
}

std::vector<TraceEstimate> SpectralEngine::dense_trace(const std::vector<double>& ts) const {
  std::vector<double> re;
  if (pencil_->symmetric) re = dense_oracle(*pencil_).eigenvalues;
  else re = dense_real_parts();
  std::vector<TraceEstimate> out;
  const auto eig = pencil_->symmetric ? std::vector<std::complex<double>>{} : dense_eigenvalues(*pencil_);
  for (double t : ts) {
    TraceEstimate e;
    e.t = t;
    e.method = "dense";
    if (pencil_->symmetric) {
      for (double l : re) e.value += std::exp(-t * l);
    } else {
      // Complex eigenvalues come in conjugate pairs; the imaginary parts cancel.
      for (const auto& z : eig) e.value += (std::exp(-t * z)).real();
    }
    out.push_back(e);
  }
  return out;
}

std::vector<DiagProbe> SpectralEngine::heat_diag(const std::vector<double>& ts, const std::vector<std::size_t>& nodes,
                                                 double rel_tol, int workers) const {
  if (!pencil_->symmetric) throw NumericalError("heat_diag needs a symmetric pencil");
  for (double t : ts)
    if (!(t > 0.0)) throw NumericalError("heat_diag needs t > 0");
  const std::size_t n = pencil_->dim();
  std::vector<DiagProbe> out(nodes.size() * ts.size());
  linalg::MatVec op = [this](const Eigen::VectorXd& x, Eigen::VectorXd& y) { apply_h(x, y); };
  parallel_for(nodes.size(), workers, [&](std::size_t i) {
    const std::size_t x = nodes[i];
    if (x >= n) throw DimensionError("probe node out of range");
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(x) = 1.0;
    const auto q = linalg::lanczos_exp_quadrature(op, e, ts, rel_tol, 5000);
    if (!q.converged) throw NumericalError("heat-kernel Krylov iteration did not converge");
    for (std::size_t j = 0; j < ts.size(); ++j) out[i * ts.size() + j] = {x, ts[j], q.values[j] / pencil_->W(x)};
  });
  return out;
}

Spectrum dense_oracle(const OperatorPencil& pencil) {
  Spectrum s;
  s.method = "dense";
  if (pencil.symmetric) {
    const Eigen::MatrixXd h = dense_h(pencil);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
    const Eigen::VectorXd ws = pencil.W.cwiseSqrt().cwiseInverse();
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      const double lam = es.eigenvalues()(i);
      const Eigen::VectorXd v = ws.cwiseProduct(es.eigenvectors().col(i));
      const Eigen::VectorXd wv = pencil.W.cwiseProduct(v);
      s.eigenvalues.push_back(lam);
      s.residual_norms.push_back((pencil.S * v - lam * wv).norm() / wv.norm());
    }
  } else {
    for (const auto& z : dense_eigenvalues(pencil)) s.eigenvalues.push_back(z.real());
    std::sort(s.eigenvalues.begin(), s.eigenvalues.end());
    s.residual_norms.assign(s.eigenvalues.size(), 0.0);
  }
  s.k = static_cast<int>(s.eigenvalues.size());
  return s;
}

std::vector<std::complex<double>> dense_eigenvalues(const OperatorPencil& pencil) {
  const Eigen::MatrixXd h = dense_h(pencil);
  Eigen::EigenSolver<Eigen::MatrixXd> es(h, false);
  if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
  std::vector<std::complex<double>> out(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return out;
}

Eigen::MatrixXd dense_heat(const OperatorPencil& pencil, double t) {
  if (!pencil.symmetric) throw NumericalError("dense_heat needs a symmetric pencil");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_h(pencil));
  const Eigen::VectorXd f = (-t * es.eigenvalues().array()).exp();
  return es.eigenvectors() * f.asDiagonal() * es.eigenvectors().transpose();
}

std::string spectrum_csv(const Spectrum& s) {
  std::string out = "lambda\n";
  char buf[64];
  for (double l : s.eigenvalues) {
    std::snprintf(buf, sizeof buf, "%.17g\n", l);
    out += buf;
  }
  return out;
}

std::string trace_csv(const std::vector<TraceEstimate>& rows) {
  std::string out = "t,value,stderr,method\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%s\n", r.t, r.value, r.stderr_, r.method.c_str());
    out += buf;
  }
  return out;
}

std::string count_csv(const std::vector<CountResult>& rows) {
  std::string out = "lambda,count\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%ld\n", r.lambda, r.count);
    out += buf;
  }
  return out;
}

}  // namespace hypospec::spectral
