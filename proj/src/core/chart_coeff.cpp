#include "hypospec/chart_coeff.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "hypospec/error.hpp"
#include "hypospec/vector_field.hpp"

namespace hypospec::vf {
namespace {

struct Weighted {
  Scalar weight;
  Harmonic h;
};

// Normalizes cos/sin of a possibly nonpositive frequency into the canonical
// (k >= 1 or constant one) form. Returns weight 0 for sin(0).
Weighted normalized(Harmonic::Kind kind, int k) {
  if (kind == Harmonic::Kind::kOne) return {Scalar(1), {}};
  if (k == 0) return kind == Harmonic::Kind::kCos ? Weighted{Scalar(1), {}} : Weighted{Scalar(0), {}};
  if (k < 0) {
    if (kind == Harmonic::Kind::kCos) return {Scalar(1), {Harmonic::Kind::kCos, -k}};
    return {Scalar(-1), {Harmonic::Kind::kSin, -k}};
  }
  return {Scalar(1), {kind, k}};
}

// Angle-addition product of two single-axis harmonics.
std::vector<Weighted> multiply(const Harmonic& a, const Harmonic& b) {
  using K = Harmonic::Kind;
  if (a.kind == K::kOne) return {{Scalar(1), b}};
  if (b.kind == K::kOne) return {{Scalar(1), a}};
  const Scalar half = Scalar::rational(1, 2);
  std::vector<Weighted> out;
  auto push = [&](const Scalar& w, K kind, int k) {
    Weighted n = normalized(kind, k);
    if (!n.weight.is_zero()) out.push_back({w * n.weight, n.h});
  };
  const int p = a.freq, q = b.freq;
  if (a.kind == K::kCos && b.kind == K::kCos) {
    push(half, K::kCos, p - q);
    push(half, K::kCos, p + q);
  } else if (a.kind == K::kSin && b.kind == K::kSin) {
    push(half, K::kCos, p - q);
    push(-half, K::kCos, p + q);
  } else if (a.kind == K::kSin && b.kind == K::kCos) {
    push(half, K::kSin, p + q);
    push(half, K::kSin, p - q);
  } else {
    push(half, K::kSin, p + q);
    push(-half, K::kSin, p - q);
  }
  return out;
}

double int_pow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

}  // namespace

ChartCoeff ChartCoeff::constant(int dim, const Scalar& c) {
  ChartCoeff out(dim);
  if (!c.is_zero()) {
    out.terms_.push_back({c, {std::vector<int>(dim, 0), std::vector<Harmonic>(dim)}});
  }
  return out;
}

ChartCoeff ChartCoeff::coordinate(int dim, int axis) {
  if (axis < 0 || axis >= dim) throw DimensionError("coordinate axis out of range");
  ChartCoeff out = constant(dim, Scalar(1));
  out.terms_[0].key.exponents[axis] = 1;
  return out;
}

ChartCoeff ChartCoeff::harmonic(int dim, int axis, Harmonic::Kind kind, int freq) {
  if (axis < 0 || axis >= dim) throw DimensionError("harmonic axis out of range");
  Weighted n = normalized(kind, freq);
  ChartCoeff out = constant(dim, n.weight);
  if (!out.terms_.empty()) out.terms_[0].key.harmonics[axis] = n.h;
  return out;
}

bool ChartCoeff::is_exact() const noexcept {
  return std::all_of(terms_.begin(), terms_.end(), [](const Term& t) { return t.coeff.is_exact(); });
}

bool ChartCoeff::is_constant() const noexcept {
  if (terms_.empty()) return true;
  if (terms_.size() > 1) return false;
  const TermKey& k = terms_[0].key;
  return std::all_of(k.exponents.begin(), k.exponents.end(), [](int e) { return e == 0; }) &&
         std::all_of(k.harmonics.begin(), k.harmonics.end(),
                     [](const Harmonic& h) { return h.kind == Harmonic::Kind::kOne; });
}

void ChartCoeff::check_dims(const ChartCoeff& a, const ChartCoeff& b) {
  if (a.dim_ != b.dim_) throw DimensionError("chart coefficient dimension mismatch");
}

void ChartCoeff::canonicalize() {
  std::sort(terms_.begin(), terms_.end(), [](const Term& a, const Term& b) { return a.key < b.key; });
  std::vector<Term> merged;
  merged.reserve(terms_.size());
  for (Term& t : terms_) {
    if (!merged.empty() && merged.back().key == t.key) {
      merged.back().coeff += t.coeff;
    } else {
      merged.push_back(std::move(t));
    }
  }
  std::erase_if(merged, [](const Term& t) { return t.coeff.is_zero(); });
  terms_ = std::move(merged);
}

ChartCoeff ChartCoeff::operator-() const {
  ChartCoeff out = *this;
  for (Term& t : out.terms_) t.coeff = -t.coeff;
  return out;
}

ChartCoeff operator+(const ChartCoeff& a, const ChartCoeff& b) {
  ChartCoeff::check_dims(a, b);
  ChartCoeff out(a.dim_);
  out.terms_ = a.terms_;
  out.terms_.insert(out.terms_.end(), b.terms_.begin(), b.terms_.end());
  out.canonicalize();
  return out;
}

ChartCoeff operator-(const ChartCoeff& a, const ChartCoeff& b) { return a + (-b); }

ChartCoeff operator*(const Scalar& s, const ChartCoeff& a) {
  ChartCoeff out(a.dim_);
  out.terms_ = a.terms_;
  for (Term& t : out.terms_) t.coeff = s * t.coeff;
  out.canonicalize();
  return out;
}

ChartCoeff operator*(const ChartCoeff& a, const ChartCoeff& b) {
  ChartCoeff::check_dims(a, b);
  const int n = a.dim_;
  ChartCoeff out(n);
  for (const Term& ta : a.terms_) {
    for (const Term& tb : b.terms_) {
      std::vector<Term> partial{{ta.coeff * tb.coeff, {std::vector<int>(n), std::vector<Harmonic>(n)}}};
      for (int ax = 0; ax < n; ++ax) {
        for (Term& p : partial) p.key.exponents[ax] = ta.key.exponents[ax] + tb.key.exponents[ax];
        auto prod = multiply(ta.key.harmonics[ax], tb.key.harmonics[ax]);
        std::vector<Term> next;
        next.reserve(partial.size() * prod.size());
        for (const Term& p : partial) {
          for (const Weighted& w : prod) {
            Term t = p;
            t.coeff = t.coeff * w.weight;
            t.key.harmonics[ax] = w.h;
            next.push_back(std::move(t));
          }
        }
        partial = std::move(next);
      }
      for (Term& t : partial) out.terms_.push_back(std::move(t));
    }
  }
  out.canonicalize();
  return out;
}

ChartCoeff ChartCoeff::pow(int exponent) const {
  if (exponent < 0) throw Error(ErrorCode::kInvalidArgument, "negative power of a chart coefficient");
  ChartCoeff out = constant(dim_, Scalar(1));
  for (int i = 0; i < exponent; ++i) out = out * *this;
  return out;
}

ChartCoeff ChartCoeff::diff(int axis) const {
  if (axis < 0 || axis >= dim_) throw DimensionError("derivative axis out of range");
  ChartCoeff out(dim_);
  for (const Term& t : terms_) {
    const int e = t.key.exponents[axis];
    if (e > 0) {
      Term d = t;
      d.coeff = d.coeff * Scalar(e);
      d.key.exponents[axis] = e - 1;
      out.terms_.push_back(std::move(d));
    }
    const Harmonic& h = t.key.harmonics[axis];
    if (h.kind != Harmonic::Kind::kOne) {
      Term d = t;
      if (h.kind == Harmonic::Kind::kSin) {
        d.coeff = d.coeff * Scalar(h.freq);
        d.key.harmonics[axis] = {Harmonic::Kind::kCos, h.freq};
      } else {
        d.coeff = d.coeff * Scalar(-h.freq);
        d.key.harmonics[axis] = {Harmonic::Kind::kSin, h.freq};
      }
      out.terms_.push_back(std::move(d));
    }
  }
  out.canonicalize();
  return out;
}

double ChartCoeff::evaluate(std::span<const double> point) const {
  if (static_cast<int>(point.size()) != dim_) throw DimensionError("evaluation point dimension mismatch");
  double total = 0.0;
  for (const Term& t : terms_) {
    double v = t.coeff.to_double();
    for (int ax = 0; ax < dim_; ++ax) {
      const double x = point[ax];
      v *= int_pow(x, t.key.exponents[ax]);
      const Harmonic& h = t.key.harmonics[ax];
      if (h.kind == Harmonic::Kind::kCos) v *= std::cos(h.freq * x);
      if (h.kind == Harmonic::Kind::kSin) v *= std::sin(h.freq * x);
    }
    total += v;
  }
  return total;
}

bool operator==(const ChartCoeff& a, const ChartCoeff& b) {
  if (a.dim_ != b.dim_ || a.terms_.size() != b.terms_.size()) return false;
  for (std::size_t i = 0; i < a.terms_.size(); ++i) {
    if (!(a.terms_[i].key == b.terms_[i].key) || !(a.terms_[i].coeff == b.terms_[i].coeff)) return false;
  }
  return true;
}

std::string ChartCoeff::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const Term& t = terms_[i];
    std::vector<std::string> factors;
    for (int ax = 0; ax < dim_; ++ax) {
      const std::string name = coordinate_name(dim_, ax);
      const int e = t.key.exponents[ax];
      if (e == 1) factors.push_back(name);
      if (e > 1) factors.push_back(name + "^" + std::to_string(e));
      const Harmonic& h = t.key.harmonics[ax];
      if (h.kind != Harmonic::Kind::kOne) {
        std::string arg = h.freq == 1 ? name : std::to_string(h.freq) + "*" + name;
        factors.push_back((h.kind == Harmonic::Kind::kSin ? "sin(" : "cos(") + arg + ")");
      }
    }
    std::string c = t.coeff.to_string();
    bool negative = !c.empty() && c[0] == '-';
    if (negative) c.erase(0, 1);
    if (i == 0) {
      if (negative) out += "-";
    } else {
      out += negative ? " - " : " + ";
    }
    std::string body;
    if (c != "1" || factors.empty()) body = c;
    for (const std::string& f : factors) body += (body.empty() ? "" : "*") + f;
    out += body;
  }
  return out;
}

}  // namespace hypospec::vf
