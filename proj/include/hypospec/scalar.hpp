#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace hypospec::vf {

/// Coefficient scalar: an exact rational while numerator and denominator fit
/// the configured bit bound, a double afterwards. Once a value has fallen back
/// to floating point every result derived from it stays floating point.
class Scalar {
 public:
  static constexpr int kDefaultBitBound = 62;

  Scalar() = default;
  Scalar(std::int64_t value) : num_(value) {}  // NOLINT(implicit)
  static Scalar rational(std::int64_t num, std::int64_t den);
  static Scalar real(double value);
  /// Parses decimal literals ("0.25", "3", "1e-3") exactly when possible.
  static Scalar parse(std::string_view text);

  bool is_exact() const noexcept { return exact_; }
  bool is_zero() const noexcept { return exact_ ? num_ == 0 : value_ == 0.0; }
  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }
  double to_double() const noexcept;

  Scalar operator-() const;
  friend Scalar operator+(const Scalar& a, const Scalar& b);
  friend Scalar operator-(const Scalar& a, const Scalar& b);
  friend Scalar operator*(const Scalar& a, const Scalar& b);
  friend Scalar operator/(const Scalar& a, const Scalar& b);
  Scalar& operator+=(const Scalar& o) { return *this = *this + o; }
  Scalar& operator*=(const Scalar& o) { return *this = *this * o; }

  /// Structural equality: exact values compare as rationals, inexact values
  /// bitwise as doubles; an exact and an inexact value are never equal.
  friend bool operator==(const Scalar& a, const Scalar& b) noexcept;

  std::string to_string() const;

  static void set_bit_bound(int bits);
  static int bit_bound();

 private:
  static Scalar from_wide(__int128 num, __int128 den);

  bool exact_ = true;
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
  double value_ = 0.0;
};

}  // namespace hypospec::vf
