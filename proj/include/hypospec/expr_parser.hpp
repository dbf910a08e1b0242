#pragma once

#include <string>
#include <string_view>
#include <utility>

#include "hypospec/chart_coeff.hpp"
#include "hypospec/vector_field.hpp"

namespace hypospec::vf {

// Textual syntax shared by configs and the registry:
//
//   expr    := ['+'|'-'] term (('+'|'-') term)*
//   term    := unary (('*'|'/') unary)*      division only by constants
//   unary   := ('+'|'-') unary | power
//   power   := primary ['^' integer]
//   primary := number | 'pi' | coord | 'd/d' coord
//            | ('sin'|'cos') '(' k*coord ')' | '(' expr ')'
//   coord   := x | y | z   (charts of dimension <= 3)  |  x1 .. xn
//
// A field expression must reduce to a sum of coefficient * d/dcoord terms;
// a function expression must not contain d/d. Decimal literals are read as
// exact rationals; 'pi' is a floating-point constant. Trigonometric
// arguments must be an integer multiple of a single coordinate, anything
// else is outside the supported coefficient class and is rejected.

ChartCoeff parse_function(std::string_view text, int dim);
VectorField parse_field(std::string_view text, int dim);

/// Splits "NAME = rhs"; throws ParseError when there is no '='.
std::pair<std::string, std::string> split_assignment(std::string_view text);

}  // namespace hypospec::vf
