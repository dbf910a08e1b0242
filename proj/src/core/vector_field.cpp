#include "hypospec/vector_field.hpp"

#include <algorithm>
#include <map>

#include "hypospec/error.hpp"

namespace hypospec::vf {

std::string coordinate_name(int dim, int axis) {
  static const char* kShort[] = {"x", "y", "z"};
  if (dim <= 3) return kShort[axis];
  return "x" + std::to_string(axis + 1);
}

VectorField::VectorField(int dim) : components_(dim, ChartCoeff(dim)) {}

VectorField::VectorField(std::vector<ChartCoeff> components) : components_(std::move(components)) {
  for (const ChartCoeff& c : components_) {
    if (c.dim() != dim()) throw DimensionError("vector field component dimension mismatch");
  }
}

VectorField VectorField::coordinate(int dim, int axis) {
  VectorField out(dim);
  out.components_.at(axis) = ChartCoeff::constant(dim, Scalar(1));
  return out;
}

bool VectorField::is_zero() const noexcept {
  return std::all_of(components_.begin(), components_.end(), [](const ChartCoeff& c) { return c.is_zero(); });
}

ChartCoeff VectorField::apply(const ChartCoeff& f) const {
  if (f.dim() != dim()) throw DimensionError("field and function dimension mismatch");
  ChartCoeff out(dim());
  for (int a = 0; a < dim(); ++a) {
    if (components_[a].is_zero()) continue;
    out = out + components_[a] * f.diff(a);
  }
  return out;
}

VectorField VectorField::operator-() const {
  VectorField out = *this;
  for (ChartCoeff& c : out.components_) c = -c;
  return out;
}

VectorField operator+(const VectorField& a, const VectorField& b) {
  if (a.dim() != b.dim()) throw DimensionError("vector field dimension mismatch");
  VectorField out(a.dim());
  for (int i = 0; i < a.dim(); ++i) out.components_[i] = a.components_[i] + b.components_[i];
  return out;
}

VectorField operator-(const VectorField& a, const VectorField& b) { return a + (-b); }

VectorField operator*(const ChartCoeff& f, const VectorField& x) {
  if (f.dim() != x.dim()) throw DimensionError("scaling function dimension mismatch");
  VectorField out(x.dim());
  for (int i = 0; i < x.dim(); ++i) out.components_[i] = f * x.components_[i];
  return out;
}

VectorField operator*(const Scalar& s, const VectorField& x) {
  VectorField out(x.dim());
  for (int i = 0; i < x.dim(); ++i) out.components_[i] = s * x.components_[i];
  return out;
}

bool operator==(const VectorField& a, const VectorField& b) { return a.components_ == b.components_; }

std::vector<double> VectorField::evaluate(std::span<const double> point) const {
  std::vector<double> out(dim());
  evaluate_into(point, out);
  return out;
}

void VectorField::evaluate_into(std::span<const double> point, std::span<double> out) const {
  if (static_cast<int>(point.size()) != dim() || out.size() != point.size()) {
    throw DimensionError("evaluation point dimension mismatch");
  }
  for (int a = 0; a < dim(); ++a) out[a] = components_[a].evaluate(point);
}

std::string VectorField::to_string() const {
  std::string out;
  for (int a = 0; a < dim(); ++a) {
    const ChartCoeff& c = components_[a];
    if (c.is_zero()) continue;
    const std::string d = "d/d" + coordinate_name(dim(), a);
    std::string piece;
    if (c.is_constant() && c.terms()[0].coeff == Scalar(1)) {
      piece = d;
    } else if (c.terms().size() == 1) {
      piece = c.to_string() + "*" + d;
    } else {
      piece = "(" + c.to_string() + ")*" + d;
    }
    if (!out.empty()) {
      if (piece[0] == '-') {
        out += " - " + piece.substr(1);
        continue;
      }
      out += " + ";
    }
    out += piece;
  }
  return out.empty() ? "0" : out;
}

VectorField bracket(const VectorField& x, const VectorField& y) {
  if (x.dim() != y.dim()) throw DimensionError("bracket of fields with different dimensions");
  const int n = x.dim();
  std::vector<ChartCoeff> comps;
  comps.reserve(n);
  for (int k = 0; k < n; ++k) comps.push_back(x.apply(y[k]) - y.apply(x[k]));
  return VectorField(std::move(comps));
}

std::string Word::to_string() const {
  std::string out = "(";
  for (std::size_t i = 0; i < letters.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(letters[i]);
  }
  return out + ")";
}

VectorField iterated_bracket(const Word& word, std::span<const VectorField> fields, int tau_cap) {
  if (word.letters.empty()) throw Error(ErrorCode::kInvalidArgument, "empty word");
  if (word.length() > tau_cap) {
    throw Error(ErrorCode::kInvalidArgument, "word " + word.to_string() + " longer than the bracket depth cap");
  }
  for (int l : word.letters) {
    if (l < 1 || l > static_cast<int>(fields.size())) {
      throw Error(ErrorCode::kInvalidArgument, "word letter " + std::to_string(l) + " out of range");
    }
  }
  VectorField acc = fields[word.letters.back() - 1];
  for (int i = word.length() - 2; i >= 0; --i) acc = bracket(fields[word.letters[i] - 1], acc);
  return acc;
}

std::vector<Word> enumerate_words(int m, int depth) {
  std::vector<Word> out;
  std::vector<Word> level{Word{}};
  for (int len = 1; len <= depth; ++len) {
    std::vector<Word> next;
    for (const Word& w : level) {
      for (int l = 1; l <= m; ++l) {
        Word e = w;
        e.letters.push_back(l);
        next.push_back(std::move(e));
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    level = std::move(next);
  }
  return out;
}

BracketTable::BracketTable(std::span<const VectorField> fields, int depth) : depth_(depth) {
  if (fields.empty()) throw Error(ErrorCode::kInvalidArgument, "bracket table needs at least one field");
  dim_ = fields[0].dim();
  m_ = static_cast<int>(fields.size());
  for (const VectorField& f : fields) {
    if (f.dim() != dim_) throw DimensionError("fields with different chart dimensions");
  }
  words_ = enumerate_words(m_, depth);
  // Left-nested brackets share suffixes: X_(i,J) = [X_i, X_J].
  std::map<Word, std::size_t> index;
  brackets_.reserve(words_.size());
  for (const Word& w : words_) {
    if (w.length() == 1) {
      brackets_.push_back(fields[w.letters[0] - 1]);
    } else {
      Word tail{std::vector<int>(w.letters.begin() + 1, w.letters.end())};
      const VectorField& inner = brackets_[index.at(tail)];
      brackets_.push_back(inner.is_zero() ? VectorField(dim_) : bracket(fields[w.letters[0] - 1], inner));
    }
    index.emplace(w, brackets_.size() - 1);
  }
}

}  // namespace hypospec::vf
