#include "hypospec/scalar.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "hypospec/error.hpp"

namespace hypospec::vf {
namespace {

std::atomic<int> g_bit_bound{Scalar::kDefaultBitBound};

__int128 abs128(__int128 v) { return v < 0 ? -v : v; }

__int128 gcd128(__int128 a, __int128 b) {
  a = abs128(a);
  b = abs128(b);
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

bool fits(__int128 v, int bits) {
  const __int128 limit = (static_cast<__int128>(1) << bits);
  return abs128(v) < limit;
}

}  // namespace

void Scalar::set_bit_bound(int bits) {
  if (bits < 8 || bits > 62) throw Error(ErrorCode::kInvalidArgument, "bit bound must be in [8, 62]");
  g_bit_bound.store(bits);
}

int Scalar::bit_bound() { return g_bit_bound.load(); }

Scalar Scalar::from_wide(__int128 num, __int128 den) {
  if (den == 0) throw NumericalError("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const __int128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  const int bits = g_bit_bound.load();
  if (fits(num, bits) && fits(den, bits)) {
    Scalar s;
    s.num_ = static_cast<std::int64_t>(num);
    s.den_ = static_cast<std::int64_t>(den);
    return s;
  }
  return real(static_cast<double>(num) / static_cast<double>(den));
}

Scalar Scalar::rational(std::int64_t num, std::int64_t den) { return from_wide(num, den); }

Scalar Scalar::real(double value) {
  Scalar s;
  s.exact_ = false;
  s.value_ = value;
  s.num_ = 0;
  s.den_ = 1;
  return s;
}

Scalar Scalar::parse(std::string_view text) {
  if (text.empty()) throw ParseError("empty number literal");
  // Exact path: digits with an optional fractional part and no exponent.
  std::size_t dot = text.find('.');
  bool plain = text.find_first_of("eE") == std::string_view::npos;
  if (plain) {
    std::string_view ip = text.substr(0, dot);
    std::string_view fp = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
    bool digits = !ip.empty() || !fp.empty();
    for (char c : ip) digits = digits && (c >= '0' && c <= '9');
    for (char c : fp) digits = digits && (c >= '0' && c <= '9');
    if (digits && ip.size() + fp.size() <= 18) {
      __int128 num = 0;
      __int128 den = 1;
      for (char c : ip) num = num * 10 + (c - '0');
      for (char c : fp) {
        num = num * 10 + (c - '0');
        den *= 10;
      }
      return from_wide(num, den);
    }
  }
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ParseError("invalid number literal '" + std::string(text) + "'");
  }
  return real(v);
}

double Scalar::to_double() const noexcept {
  return exact_ ? static_cast<double>(num_) / static_cast<double>(den_) : value_;
}

Scalar Scalar::operator-() const {
  if (!exact_) return real(-value_);
  Scalar s = *this;
  s.num_ = -num_;
  return s;
}

Scalar operator+(const Scalar& a, const Scalar& b) {
  if (a.exact_ && b.exact_) {
    return Scalar::from_wide(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
                             static_cast<__int128>(a.den_) * b.den_);
  }
  return Scalar::real(a.to_double() + b.to_double());
}

Scalar operator-(const Scalar& a, const Scalar& b) { return a + (-b); }

Scalar operator*(const Scalar& a, const Scalar& b) {
  if (a.exact_ && b.exact_) {
    return Scalar::from_wide(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
  }
  return Scalar::real(a.to_double() * b.to_double());
}

Scalar operator/(const Scalar& a, const Scalar& b) {
  if (b.is_zero()) throw NumericalError("division by zero scalar");
  if (a.exact_ && b.exact_) {
    return Scalar::from_wide(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
  }
  return Scalar::real(a.to_double() / b.to_double());
}

bool operator==(const Scalar& a, const Scalar& b) noexcept {
  if (a.exact_ != b.exact_) return false;
  if (a.exact_) return a.num_ == b.num_ && a.den_ == b.den_;
  return a.value_ == b.value_;
}

std::string Scalar::to_string() const {
  if (exact_) {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value_);
  return buf;
}

}  // namespace hypospec::vf
