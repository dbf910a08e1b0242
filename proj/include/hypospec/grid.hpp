#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace hypospec::assembly {

enum class ChartKind { kTorus, kNilmanifold, kBox };

const char* to_string(ChartKind kind);
ChartKind chart_kind_from_string(const std::string& s);

/// Chart geometry. Torus and box cover [origin, origin + lengths); the
/// nilmanifold is the unit cube with (x, y, z) ~ (x + 1, y, z + y), and
/// (x, y, z) ~ (x, y + 1, z) ~ (x, y, z + 1).
struct ChartSpec {
  ChartKind kind = ChartKind::kTorus;
  int dim = 2;
  std::vector<double> lengths;
  std::vector<double> origin;  // defaults to zeros

  double coordinate_volume() const;
};

/// Lattice over a chart. Unknowns sit on the periodic lattice for tori and
/// the nilmanifold, and on interior nodes for boxes. Stencil rows run over the
/// "row lattice": identical to the unknown lattice on periodic charts and the
/// closed lattice 0..N_a on boxes, so boundary rows see Dirichlet zeros.
class Grid {
 public:
  static constexpr long kOutside = -1;

  Grid(ChartSpec chart, std::vector<int> resolution);

  const ChartSpec& chart() const noexcept { return chart_; }
  int dim() const noexcept { return chart_.dim; }
  const std::vector<int>& resolution() const noexcept { return n_; }
  const std::vector<double>& spacing() const noexcept { return h_; }
  double max_spacing() const noexcept;
  double cell_volume() const noexcept;

  std::size_t num_unknowns() const noexcept { return num_unknowns_; }
  std::size_t num_rows() const noexcept { return num_rows_; }
  /// Shape of the unknown lattice (N_a, or N_a - 1 on boxes).
  const std::vector<int>& unknown_shape() const noexcept { return unknown_shape_; }
  const std::vector<int>& row_shape() const noexcept { return row_shape_; }

  /// Lattice multi-index (in chart lattice coordinates i_a, position
  /// origin + i_a h_a) of a row or unknown.
  std::vector<int> row_index(std::size_t r) const;
  std::vector<int> unknown_index(std::size_t u) const;
  std::vector<double> position(const std::vector<int>& idx) const;

  /// Unknown at a lattice multi-index after wrap rules, or kOutside when it is
  /// a Dirichlet boundary or exterior node.
  long unknown_at(std::vector<int> idx) const;
  /// Row number of a row-lattice multi-index (no wrapping).
  std::size_t row_at(const std::vector<int>& idx) const;
  /// Unknown number of the row, or kOutside for boundary rows.
  long unknown_of_row(std::size_t r) const;

  /// Applies the periodic and twist identifications to a lattice index;
  /// returns false when the index is not a lattice node of the chart.
  bool wrap(std::vector<int>& idx) const;

 private:
  ChartSpec chart_;
  std::vector<int> n_;
  std::vector<double> h_;
  std::vector<int> unknown_shape_;
  std::vector<int> row_shape_;
  std::size_t num_unknowns_ = 0;
  std::size_t num_rows_ = 0;
};

Grid build_grid(const ChartSpec& chart, const std::vector<int>& resolution);

}  // namespace hypospec::assembly
