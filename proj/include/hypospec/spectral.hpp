#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "hypospec/assembly.hpp"
#include "hypospec/multifrontal.hpp"

namespace hypospec::spectral {

using assembly::OperatorPencil;

/// Lowest generalized eigenvalues of (S, W), ascending.
struct Spectrum {
  std::vector<double> eigenvalues;
  std::vector<double> residual_norms;  // ||S v - lambda W v|| / ||W v||
  int k = 0;
  std::string method;
};

struct CountResult {
  long count = 0;
  double lambda = 0.0;       // requested
  double lambda_used = 0.0;  // after tie retries
  int tie_retries = 0;
  int jitter_retries = 0;
};

struct TraceEstimate {
  double t = 0.0;
  double value = 0.0;
  double stderr_ = 0.0;
  double tail_bound = 0.0;  // eigsum only: bound on the omitted tail
  std::string method;       // "eigsum" | "stochastic" | "dense"
  int probes = 0;
};

/// mu-normalized heat kernel diagonal K(x, x, t) at an unknown x.
struct DiagProbe {
  std::size_t node = 0;
  double t = 0.0;
  double value = 0.0;
};

struct StochasticOptions {
  int probes = 64;
  std::uint64_t seed = 0;
  double rel_tol = 1e-3;
  int max_steps = 3000;
  int workers = 1;
};

inline constexpr int kMinProbes = 8;

/// Spectral computations on one pencil. The symbolic factorization is built
/// once and shared by all counts; counts may run concurrently.
class SpectralEngine {
 public:
  explicit SpectralEngine(OperatorPencil pencil);

  const OperatorPencil& pencil() const noexcept { return *pencil_; }
  /// Upper bound on the spectrum from Gershgorin discs of W^-1/2 S W^-1/2.
  double scale() const noexcept { return scale_; }
  /// Gershgorin lower bound on the spectrum.
  double lower_bound() const noexcept { return lower_; }

  CountResult count_below(double lambda) const;
  std::vector<CountResult> count_curve(const std::vector<double>& lambdas, int workers) const;

  /// Lowest k eigenvalues by shift-invert block Lanczos, verified against
  /// the inertia count.
  Spectrum lowest_eigs(int k, std::uint64_t seed = 0) const;

  /// Eigenvalue sum over `spectrum` with a certified tail bound.
  TraceEstimate eigsum_trace(const Spectrum& spectrum, double t) const;
  /// Smallest t at which eigsum_trace certifies its tail for `spectrum`.
  double eigsum_threshold(const Spectrum& spectrum) const;

  /// Hutchinson estimates with Rademacher probes and Lanczos quadrature.
  std::vector<TraceEstimate> stochastic_trace(const std::vector<double>& ts, const StochasticOptions& opt) const;

  /// Exact traces from the dense oracle (small pencils only).
  std::vector<TraceEstimate> dense_trace(const std::vector<double>& ts) const;

  std::vector<DiagProbe> heat_diag(const std::vector<double>& ts, const std::vector<std::size_t>& nodes,
                                   double rel_tol = 1e-8, int workers = 1) const;

  /// Applies W^-1/2 S W^-1/2.
  void apply_h(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;

 private:
  const linalg::MultifrontalLdlt& symbolic() const;
  const std::vector<double>& dense_real_parts() const;

  std::shared_ptr<const OperatorPencil> pencil_;
  Eigen::VectorXd w_inv_sqrt_;
  double scale_ = 0.0;
  double lower_ = 0.0;
  mutable std::once_flag symbolic_once_;
  mutable std::unique_ptr<linalg::MultifrontalLdlt> symbolic_;
  mutable std::once_flag dense_once_;
  mutable std::vector<double> dense_real_;
};

/// Full dense eigendecomposition (dim <= kDenseCap). Non-symmetric pencils
/// report real parts in ascending order.
Spectrum dense_oracle(const OperatorPencil& pencil);
/// Complex eigenvalues of W^-1 S for any pencil within the cap.
std::vector<std::complex<double>> dense_eigenvalues(const OperatorPencil& pencil);
/// exp(-t H) with H = W^-1/2 S W^-1/2, symmetric pencils only.
Eigen::MatrixXd dense_heat(const OperatorPencil& pencil, double t);

std::string spectrum_csv(const Spectrum& s);
std::string trace_csv(const std::vector<TraceEstimate>& rows);
std::string count_csv(const std::vector<CountResult>& rows);

}  // namespace hypospec::spectral
