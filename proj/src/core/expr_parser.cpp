#include "hypospec/expr_parser.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "hypospec/error.hpp"

namespace hypospec::vf {
namespace {

enum class Tok { kNumber, kIdent, kDeriv, kOp, kLParen, kRParen, kEnd };

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
};

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
      if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
        if (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
          i = j;
          while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        }
      }
      out.push_back({Tok::kNumber, std::string(s.substr(start, i - start)), start});
      continue;
    }
    if (s.substr(i, 3) == "d/d") {
      i += 3;
      const std::size_t name_start = i;
      while (i < s.size() && std::isalnum(static_cast<unsigned char>(s[i]))) ++i;
      if (i == name_start) throw ParseError("expected coordinate after d/d at offset " + std::to_string(start));
      out.push_back({Tok::kDeriv, std::string(s.substr(name_start, i - name_start)), start});
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      out.push_back({Tok::kIdent, std::string(s.substr(start, i - start)), start});
      continue;
    }
    if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
      out.push_back({Tok::kOp, std::string(1, c), start});
      ++i;
      continue;
    }
    if (c == '(') {
      out.push_back({Tok::kLParen, "(", start});
      ++i;
      continue;
    }
    if (c == ')') {
      out.push_back({Tok::kRParen, ")", start});
      ++i;
      continue;
    }
    throw ParseError(std::string("unexpected character '") + c + "' at offset " + std::to_string(i));
  }
  out.push_back({Tok::kEnd, "", s.size()});
  return out;
}

struct Value {
  bool is_field = false;
  ChartCoeff f;
  VectorField x;
};

class Parser {
 public:
  Parser(std::string_view text, int dim) : text_(text), toks_(lex(text)), dim_(dim) {
    if (dim < 1) throw DimensionError("chart dimension must be positive");
  }

  Value parse_all() {
    Value v = expr();
    if (peek().kind != Tok::kEnd) fail("unexpected '" + peek().text + "'");
    return v;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }
  bool accept_op(char op) {
    if (peek().kind == Tok::kOp && peek().text[0] == op) {
      ++pos_;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg + " at offset " + std::to_string(peek().pos) + " in '" + std::string(text_) + "'");
  }

  std::optional<int> axis_of(const std::string& name) const {
    for (int a = 0; a < dim_; ++a) {
      if (coordinate_name(dim_, a) == name) return a;
    }
    return std::nullopt;
  }

  Value make_coeff(ChartCoeff c) const { return Value{false, std::move(c), {}}; }

  Value add(Value a, const Value& b, bool subtract) {
    if (a.is_field != b.is_field) fail("cannot add a function and a vector field");
    if (a.is_field) {
      a.x = subtract ? a.x - b.x : a.x + b.x;
    } else {
      a.f = subtract ? a.f - b.f : a.f + b.f;
    }
    return a;
  }

  Value mul(const Value& a, const Value& b) {
    if (a.is_field && b.is_field) fail("product of two vector fields is not first order");
    if (a.is_field) return Value{true, {}, b.f * a.x};
    if (b.is_field) return Value{true, {}, a.f * b.x};
    return make_coeff(a.f * b.f);
  }

  Value expr() {
    bool negate = false;
    if (accept_op('-')) {
      negate = true;
    } else {
      accept_op('+');
    }
    Value acc = term();
    if (negate) acc = negated(acc);
    while (true) {
      if (accept_op('+')) {
        acc = add(acc, term(), false);
      } else if (accept_op('-')) {
        acc = add(acc, term(), true);
      } else {
        return acc;
      }
    }
  }

  static Value negated(Value v) {
    if (v.is_field) {
      v.x = -v.x;
    } else {
      v.f = -v.f;
    }
    return v;
  }

  Value term() {
    Value acc = unary();
    while (true) {
      if (accept_op('*')) {
        acc = mul(acc, unary());
      } else if (accept_op('/')) {
        Value d = unary();
        if (d.is_field || !d.f.is_constant() || d.f.is_zero()) fail("division only by nonzero constants");
        const Scalar inv = Scalar(1) / d.f.terms()[0].coeff;
        if (acc.is_field) {
          acc.x = inv * acc.x;
        } else {
          acc.f = inv * acc.f;
        }
      } else {
        return acc;
      }
    }
  }

  Value unary() {
    if (accept_op('-')) return negated(unary());
    if (accept_op('+')) return unary();
    return power();
  }

  Value power() {
    Value base = primary();
    if (accept_op('^')) {
      if (base.is_field) fail("power of a vector field");
      const Token& t = next();
      if (t.kind != Tok::kNumber || t.text.find_first_not_of("0123456789") != std::string::npos) {
        fail("exponent must be a nonnegative integer");
      }
      base.f = base.f.pow(std::stoi(t.text));
    }
    return base;
  }

  Value primary() {
    const Token t = next();
    switch (t.kind) {
      case Tok::kNumber:
        return make_coeff(ChartCoeff::constant(dim_, Scalar::parse(t.text)));
      case Tok::kDeriv: {
        auto axis = axis_of(t.text);
        if (!axis) fail("unknown coordinate '" + t.text + "' in d/d");
        return Value{true, {}, VectorField::coordinate(dim_, *axis)};
      }
      case Tok::kLParen: {
        Value v = expr();
        if (next().kind != Tok::kRParen) fail("expected ')'");
        return v;
      }
      case Tok::kIdent: {
        if (t.text == "pi") return make_coeff(ChartCoeff::constant(dim_, Scalar::real(std::numbers::pi)));
        if (t.text == "sin" || t.text == "cos") return trig(t.text == "sin");
        auto axis = axis_of(t.text);
        if (!axis) fail("unknown identifier '" + t.text + "'");
        return make_coeff(ChartCoeff::coordinate(dim_, *axis));
      }
      default:
        --pos_;
        fail("unexpected token");
    }
  }

  Value trig(bool is_sin) {
    if (next().kind != Tok::kLParen) fail("expected '(' after sin/cos");
    Value arg = expr();
    if (next().kind != Tok::kRParen) fail("expected ')'");
    if (arg.is_field) fail("trigonometric argument must be a function");
    const auto kind = is_sin ? Harmonic::Kind::kSin : Harmonic::Kind::kCos;
    if (arg.f.is_zero()) return make_coeff(ChartCoeff::harmonic(dim_, 0, kind, 0));
    if (arg.f.terms().size() != 1) fail("trigonometric argument must be k*coordinate");
    const Term& term = arg.f.terms()[0];
    int axis = -1;
    for (int a = 0; a < dim_; ++a) {
      if (term.key.harmonics[a].kind != Harmonic::Kind::kOne) fail("nested trigonometric functions are not supported");
      if (term.key.exponents[a] == 0) continue;
      if (term.key.exponents[a] != 1 || axis >= 0) fail("trigonometric argument must be k*coordinate");
      axis = a;
    }
    if (axis < 0 || !term.coeff.is_exact() || term.coeff.den() != 1) {
      fail("trigonometric frequency must be an integer multiple of one coordinate");
    }
    return make_coeff(ChartCoeff::harmonic(dim_, axis, kind, static_cast<int>(term.coeff.num())));
  }

  std::string_view text_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int dim_;
};

}  // namespace

ChartCoeff parse_function(std::string_view text, int dim) {
  Value v = Parser(text, dim).parse_all();
  if (v.is_field) throw ParseError("expected a function, got a vector field: '" + std::string(text) + "'");
  return v.f;
}

VectorField parse_field(std::string_view text, int dim) {
  Value v = Parser(text, dim).parse_all();
  if (!v.is_field) {
    if (v.f.is_zero()) return VectorField(dim);
    throw ParseError("expected a vector field, got a function: '" + std::string(text) + "'");
  }
  return v.x;
}

std::pair<std::string, std::string> split_assignment(std::string_view text) {
  const std::size_t eq = text.find('=');
  if (eq == std::string_view::npos) throw ParseError("expected 'NAME = expression': '" + std::string(text) + "'");
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
  };
  std::string name = trim(text.substr(0, eq));
  if (name.empty()) throw ParseError("missing name before '='");
  return {name, trim(text.substr(eq + 1))};
}

}  // namespace hypospec::vf
