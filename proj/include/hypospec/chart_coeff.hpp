#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hypospec/scalar.hpp"

namespace hypospec::vf {

/// One trigonometric factor per coordinate: 1, cos(k x) or sin(k x), k >= 1.
struct Harmonic {
  enum class Kind : std::uint8_t { kOne = 0, kCos = 1, kSin = 2 };
  Kind kind = Kind::kOne;
  int freq = 0;

  friend auto operator<=>(const Harmonic&, const Harmonic&) = default;
};

/// Monomial-times-harmonics part of a term; ordered lexicographically, which
/// fixes the canonical term order.
struct TermKey {
  std::vector<int> exponents;
  std::vector<Harmonic> harmonics;

  friend auto operator<=>(const TermKey&, const TermKey&) = default;
};

struct Term {
  Scalar coeff;
  TermKey key;
};

/// Closed-form chart function: a finite sum of scalar * monomial * product of
/// per-coordinate harmonics. Always stored in canonical form (terms sorted by
/// key, like terms merged, zero terms dropped), so == decides equality.
class ChartCoeff {
 public:
  ChartCoeff() = default;
  explicit ChartCoeff(int dim) : dim_(dim) {}

  static ChartCoeff constant(int dim, const Scalar& c);
  static ChartCoeff coordinate(int dim, int axis);
  static ChartCoeff harmonic(int dim, int axis, Harmonic::Kind kind, int freq);

  int dim() const noexcept { return dim_; }
  const std::vector<Term>& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }
  /// True when every scalar is an exact rational.
  bool is_exact() const noexcept;
  /// Constant value if the function has no coordinate dependence.
  bool is_constant() const noexcept;

  ChartCoeff operator-() const;
  friend ChartCoeff operator+(const ChartCoeff& a, const ChartCoeff& b);
  friend ChartCoeff operator-(const ChartCoeff& a, const ChartCoeff& b);
  friend ChartCoeff operator*(const ChartCoeff& a, const ChartCoeff& b);
  friend ChartCoeff operator*(const Scalar& s, const ChartCoeff& a);
  ChartCoeff pow(int exponent) const;
  ChartCoeff diff(int axis) const;

  double evaluate(std::span<const double> point) const;

  friend bool operator==(const ChartCoeff& a, const ChartCoeff& b);

  std::string to_string() const;

 private:
  void canonicalize();
  static void check_dims(const ChartCoeff& a, const ChartCoeff& b);

  int dim_ = 0;
  std::vector<Term> terms_;
};

}  // namespace hypospec::vf
