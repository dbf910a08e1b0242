#pragma once

#include <span>
#include <string>
#include <vector>

#include "hypospec/chart_coeff.hpp"

namespace hypospec::vf {

inline constexpr int kDefaultTauCap = 4;

/// "x", "y", "z" for charts of dimension <= 3, otherwise "x1".."xn".
std::string coordinate_name(int dim, int axis);

/// First-order differential operator sum_a components[a] * d/dx_a.
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(int dim);
  explicit VectorField(std::vector<ChartCoeff> components);

  /// The coordinate field d/dx_axis.
  static VectorField coordinate(int dim, int axis);

  int dim() const noexcept { return static_cast<int>(components_.size()); }
  const std::vector<ChartCoeff>& components() const noexcept { return components_; }
  const ChartCoeff& operator[](int axis) const { return components_.at(axis); }
  bool is_zero() const noexcept;

  /// X f = sum_a X_a * d_a f.
  ChartCoeff apply(const ChartCoeff& f) const;

  VectorField operator-() const;
  friend VectorField operator+(const VectorField& a, const VectorField& b);
  friend VectorField operator-(const VectorField& a, const VectorField& b);
  friend VectorField operator*(const ChartCoeff& f, const VectorField& x);
  friend VectorField operator*(const Scalar& s, const VectorField& x);
  friend bool operator==(const VectorField& a, const VectorField& b);

  std::vector<double> evaluate(std::span<const double> point) const;
  void evaluate_into(std::span<const double> point, std::span<double> out) const;

  std::string to_string() const;

 private:
  std::vector<ChartCoeff> components_;
};

/// Lie bracket [X, Y] = XY - YX.
VectorField bracket(const VectorField& x, const VectorField& y);

/// Nonempty sequence of 1-based field indices.
struct Word {
  std::vector<int> letters;

  int length() const noexcept { return static_cast<int>(letters.size()); }
  std::string to_string() const;
  friend auto operator<=>(const Word&, const Word&) = default;
};

/// X_I = ad(X_{i1}) ... ad(X_{i(j-1)}) X_{ij}; a length-one word is the field.
VectorField iterated_bracket(const Word& word, std::span<const VectorField> fields,
                             int tau_cap = kDefaultTauCap);

/// All words of length 1..depth over m letters, ordered by length then
/// lexicographically.
std::vector<Word> enumerate_words(int m, int depth);

/// Symbolic bracket fields for every word up to a depth, computed once and
/// shared by the pointwise filtration and Lambda computations.
class BracketTable {
 public:
  BracketTable(std::span<const VectorField> fields, int depth);

  int dim() const noexcept { return dim_; }
  int depth() const noexcept { return depth_; }
  int num_fields() const noexcept { return m_; }
  const std::vector<Word>& words() const noexcept { return words_; }
  const std::vector<VectorField>& brackets() const noexcept { return brackets_; }

 private:
  int dim_ = 0;
  int m_ = 0;
  int depth_ = 0;
  std::vector<Word> words_;
  std::vector<VectorField> brackets_;
};

}  // namespace hypospec::vf
