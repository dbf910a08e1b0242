#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hypospec/chart_coeff.hpp"
#include "hypospec/vector_field.hpp"

namespace hypospec::filtration {

/// Singular values below this fraction of the largest one count as zero.
inline constexpr double kRankTolerance = 1e-9;

struct FiltrationPoint {
  std::vector<double> point;
  std::vector<int> dims;  // d(x, 1..tau)
  int tau = 0;
  int Q = 0;
};

struct MultiWord {
  std::vector<vf::Word> words;  // sorted
  int deg = 0;
  double det = 0.0;  // determinant at the evaluation point
};

struct LambdaPoly {
  std::vector<double> point;
  std::map<int, double> coeffs;  // degree -> sum of |det| over multi-words

  double evaluate(double delta) const;
  /// Smallest degree with a positive coefficient, or -1.
  int min_degree() const;
};

/// Numerical rank of a set of column vectors with the relative tolerance.
int numerical_rank(std::span<const std::vector<double>> columns, int dim);

FiltrationPoint tangent_filtration(std::span<const double> x, const vf::BracketTable& table, int depth_cap);
FiltrationPoint tangent_filtration(std::span<const double> x, std::span<const vf::VectorField> fields,
                                   int depth_cap = vf::kDefaultTauCap);

struct HomogeneousDimension {
  int Q = 0;
  int tau = 0;
};
HomogeneousDimension homogeneous_dimension(std::span<const double> x, std::span<const vf::VectorField> fields,
                                           int depth_cap = vf::kDefaultTauCap);

/// Multi-words over the bracket table's words, grouped for enumeration:
/// canonically zero brackets are dropped and words whose fields agree up to
/// sign (at equal length) share one class carrying a multiplicity.
class MultiWordEnumerator {
 public:
  explicit MultiWordEnumerator(const vf::BracketTable& table);

  /// Lambda coefficients at x; words are those of the table (|I| <= depth).
  LambdaPoly lambda_poly(std::span<const double> x) const;
  /// Minimal-degree multi-word with nonvanishing determinant at x; ties go
  /// to the lexicographically smallest sorted word sequence.
  MultiWord minimal_frame(std::span<const double> x) const;
  std::size_t num_classes() const noexcept { return classes_.size(); }

 private:
  struct WordClass {
    vf::Word representative;  // lexicographically smallest member
    int length = 0;
    int multiplicity = 0;
    const vf::VectorField* field = nullptr;
  };

  template <typename Visit>
  void for_each_combination(std::span<const double> x, Visit&& visit) const;

  const vf::BracketTable* table_;
  std::vector<WordClass> classes_;
};

/// Lambda polynomial with words of length <= depth (the audit uses tau_L).
LambdaPoly lambda_poly(std::span<const double> x, std::span<const vf::VectorField> fields, int depth);
MultiWord minimal_frame(std::span<const double> x, std::span<const vf::VectorField> fields,
                        int depth = vf::kDefaultTauCap);

struct SampleSpec {
  std::vector<int> grid_counts;  // cell-centered lattice, one count per axis
  int quasi_random = 0;          // Halton points with a seeded rotation
  // Lattice nodes lower + i (upper - lower) / count, weight zero. Degenerate
  // sets such as {sin x = 0} are lower dimensional and missed by the weighted
  // samples; these probes let tau_L and Q_L see them without adding mass.
  std::vector<int> probe_counts;
  std::uint64_t seed = 0;
};

struct AuditInput {
  std::vector<vf::VectorField> fields;
  vf::ChartCoeff density;  // h in mu = h dx
  std::vector<double> lower;
  std::vector<double> upper;
  int depth_cap = vf::kDefaultTauCap;
};

struct AuditPoint {
  std::vector<double> x;
  double weight = 0.0;
  bool failed = false;
  FiltrationPoint filtration;
  LambdaPoly lambda;
};

struct FkMass {
  int k = 0;
  double mass = 0.0;
  bool measure_zero_candidate = false;
};

struct AuditReport {
  int dim = 0;
  int tau_L = 0;
  int Q_L = 0;
  double total_mass = 0.0;
  double cell_mass = 0.0;  // mean sample weight, the resolution threshold
  std::vector<FkMass> fk;  // k = dim .. Q_L
  std::vector<std::vector<double>> failures;
  std::vector<AuditPoint> points;
  SampleSpec samples;
  int depth_cap = 0;

  const FkMass* find_fk(int k) const;
};

std::vector<std::pair<std::vector<double>, double>> sample_points(const AuditInput& input, const SampleSpec& spec);

AuditReport hormander_audit(const AuditInput& input, const SampleSpec& spec, int workers = 1);

/// Canonical JSON text (stable key order and number formatting).
std::string audit_to_json(const AuditReport& report);
/// Per-point CSV: x1..xn, tau, Q, lambda_min_deg, lambda_c<d>...
std::string audit_to_csv(const AuditReport& report);

}  // namespace hypospec::filtration
