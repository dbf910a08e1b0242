#include "hypospec/grid.hpp"

#include <algorithm>

#include "hypospec/error.hpp"

namespace hypospec::assembly {

const char* to_string(ChartKind kind) {
  switch (kind) {
    case ChartKind::kTorus:
      return "torus";
    case ChartKind::kNilmanifold:
      return "nilmanifold";
    case ChartKind::kBox:
      return "box";
  }
  return "?";
}

ChartKind chart_kind_from_string(const std::string& s) {
  if (s == "torus") return ChartKind::kTorus;
  if (s == "nilmanifold") return ChartKind::kNilmanifold;
  if (s == "box") return ChartKind::kBox;
  throw Error(ErrorCode::kInvalidArgument, "unknown chart '" + s + "' (expected torus, nilmanifold or box)");
}

double ChartSpec::coordinate_volume() const {
  double v = 1.0;
  for (double l : lengths) v *= l;
  return v;
}

Grid::Grid(ChartSpec chart, std::vector<int> resolution) : chart_(std::move(chart)), n_(std::move(resolution)) {
  const int d = chart_.dim;
  if (chart_.kind == ChartKind::kNilmanifold) {
    if (d != 3) throw DimensionError("the nilmanifold chart is three-dimensional");
    if (chart_.lengths.empty()) chart_.lengths = {1.0, 1.0, 1.0};
    for (double l : chart_.lengths) {
      if (l != 1.0) throw Error(ErrorCode::kInvalidArgument, "nilmanifold chart has unit side lengths");
    }
  }
  if (d < 1) throw DimensionError("chart dimension must be positive");
  if (static_cast<int>(chart_.lengths.size()) != d) throw DimensionError("chart lengths must match the dimension");
  if (chart_.origin.empty()) chart_.origin.assign(d, 0.0);
  if (static_cast<int>(chart_.origin.size()) != d) throw DimensionError("chart origin must match the dimension");
  if (n_.size() == 1 && d > 1) n_.assign(d, n_[0]);
  if (static_cast<int>(n_.size()) != d) throw DimensionError("resolution must give one count per axis");
  for (int a = 0; a < d; ++a) {
    if (n_[a] < 4) throw Error(ErrorCode::kInvalidArgument, "resolution must be at least 4 per axis");
    if (!(chart_.lengths[a] > 0.0)) throw Error(ErrorCode::kInvalidArgument, "chart lengths must be positive");
  }
  if (chart_.kind == ChartKind::kNilmanifold && n_[1] != n_[2]) {
    throw Error(ErrorCode::kInvalidArgument, "nilmanifold grids need equal y and z resolutions for the twist");
  }
  h_.resize(d);
  for (int a = 0; a < d; ++a) h_[a] = chart_.lengths[a] / n_[a];
  const bool box = chart_.kind == ChartKind::kBox;
  unknown_shape_.resize(d);
  row_shape_.resize(d);
  num_unknowns_ = num_rows_ = 1;
  for (int a = 0; a < d; ++a) {
    unknown_shape_[a] = box ? n_[a] - 1 : n_[a];
    row_shape_[a] = box ? n_[a] + 1 : n_[a];
    num_unknowns_ *= static_cast<std::size_t>(unknown_shape_[a]);
    num_rows_ *= static_cast<std::size_t>(row_shape_[a]);
  }
}

double Grid::max_spacing() const noexcept { return *std::max_element(h_.begin(), h_.end()); }

double Grid::cell_volume() const noexcept {
  double v = 1.0;
  for (double h : h_) v *= h;
  return v;
}

namespace {

std::vector<int> decode(std::size_t k, const std::vector<int>& shape) {
  std::vector<int> idx(shape.size());
  for (int a = static_cast<int>(shape.size()) - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(k % static_cast<std::size_t>(shape[a]));
    k /= static_cast<std::size_t>(shape[a]);
  }
  return idx;
}

int mod(int a, int n) { return ((a % n) + n) % n; }

}  // namespace

std::vector<int> Grid::row_index(std::size_t r) const { return decode(r, row_shape_); }

std::vector<int> Grid::unknown_index(std::size_t u) const {
  std::vector<int> idx = decode(u, unknown_shape_);
  if (chart_.kind == ChartKind::kBox) {
    for (int& i : idx) ++i;
  }
  return idx;
}

std::vector<double> Grid::position(const std::vector<int>& idx) const {
  std::vector<double> p(idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a) p[a] = chart_.origin[a] + idx[a] * h_[a];
  return p;
}

bool Grid::wrap(std::vector<int>& idx) const {
  switch (chart_.kind) {
    case ChartKind::kBox:
      for (int a = 0; a < dim(); ++a) {
        if (idx[a] < 0 || idx[a] > n_[a]) return false;
      }
      return true;
    case ChartKind::kTorus:
      for (int a = 0; a < dim(); ++a) idx[a] = mod(idx[a], n_[a]);
      return true;
    case ChartKind::kNilmanifold: {
      idx[1] = mod(idx[1], n_[1]);
      // Crossing x = 1 forward lands at x = 0 with z shifted by -y.
      while (idx[0] >= n_[0]) {
        idx[0] -= n_[0];
        idx[2] -= idx[1];
      }
      while (idx[0] < 0) {
        idx[0] += n_[0];
        idx[2] += idx[1];
      }
      idx[2] = mod(idx[2], n_[2]);
      return true;
    }
  }
  return false;
}

long Grid::unknown_at(std::vector<int> idx) const {
  if (!wrap(idx)) return kOutside;
  std::size_t k = 0;
  const bool box = chart_.kind == ChartKind::kBox;
  for (int a = 0; a < dim(); ++a) {
    int i = idx[a];
    if (box) {
      if (i <= 0 || i >= n_[a]) return kOutside;
      --i;
    }
    k = k * static_cast<std::size_t>(unknown_shape_[a]) + static_cast<std::size_t>(i);
  }
  return static_cast<long>(k);
}

std::size_t Grid::row_at(const std::vector<int>& idx) const {
  std::size_t k = 0;
  for (int a = 0; a < dim(); ++a) k = k * static_cast<std::size_t>(row_shape_[a]) + static_cast<std::size_t>(idx[a]);
  return k;
}

long Grid::unknown_of_row(std::size_t r) const {
  if (chart_.kind != ChartKind::kBox) return static_cast<long>(r);
  return unknown_at(row_index(r));
}

Grid build_grid(const ChartSpec& chart, const std::vector<int>& resolution) { return Grid(chart, resolution); }

}  // namespace hypospec::assembly
