#include "hypospec/ordering.hpp"

#include <Eigen/OrderingMethods>
#include <algorithm>
#include <numeric>

#include "hypospec/error.hpp"

namespace hypospec::linalg {
namespace {

struct Adjacency {
  std::vector<int> start;
  std::vector<int> list;
};

Adjacency adjacency_of(const Eigen::SparseMatrix<double>& a) {
  const int n = static_cast<int>(a.cols());
  Adjacency adj;
  adj.start.assign(n + 1, 0);
  for (int c = 0; c < n; ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, c); it; ++it) {
      if (it.row() != c) ++adj.start[c + 1];
    }
  }
  std::partial_sum(adj.start.begin(), adj.start.end(), adj.start.begin());
  adj.list.resize(adj.start[n]);
  std::vector<int> fill(adj.start.begin(), adj.start.end() - 1);
  for (int c = 0; c < n; ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, c); it; ++it) {
      if (it.row() != c) adj.list[fill[c]++] = static_cast<int>(it.row());
    }
  }
  return adj;
}

class Dissector {
 public:
  Dissector(const Adjacency& adj, const LatticeCoords& lat, int leaf)
      : adj_(adj), lat_(lat), leaf_(std::max(1, leaf)), owner_(adj.start.size() - 1, -1),
        seen_(adj.start.size() - 1, -1) {}

  int build(std::vector<int> nodes, std::vector<int> shift) {
    const int d = lat_.dim;
    if (static_cast<int>(nodes.size()) <= leaf_) return make_block(std::move(nodes), {});
    auto unwrapped = [&](int v, int a) {
      const int c = lat_.coords[static_cast<std::size_t>(v) * d + a];
      const int p = lat_.period[a];
      return p > 0 ? ((c - shift[a]) % p + p) % p : c;
    };
    int axis = -1, best = 0;
    for (int a = 0; a < d; ++a) {
      int lo = INT32_MAX, hi = INT32_MIN;
      for (int v : nodes) {
        const int u = unwrapped(v, a);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
      }
      if (hi - lo > best) {
        best = hi - lo;
        axis = a;
      }
    }
    if (axis < 0) return make_block(std::move(nodes), {});
    std::vector<int> vals;
    vals.reserve(nodes.size());
    for (int v : nodes) vals.push_back(unwrapped(v, axis));
    std::nth_element(vals.begin(), vals.begin() + vals.size() / 2, vals.end());
    const int cut = vals[vals.size() / 2];

    std::vector<int> sep, rest;
    for (int v : nodes) (unwrapped(v, axis) == cut ? sep : rest).push_back(v);
    const int frame = frame_counter_++;
    for (int v : rest) owner_[v] = frame;
    std::vector<std::vector<int>> comps;
    for (int v : rest) {
      if (seen_[v] == frame) continue;
      std::vector<int> comp{v};
      seen_[v] = frame;
      for (std::size_t q = 0; q < comp.size(); ++q) {
        const int u = comp[q];
        for (int k = adj_.start[u]; k < adj_.start[u + 1]; ++k) {
          const int w = adj_.list[k];
          if (owner_[w] == frame && seen_[w] != frame) {
            seen_[w] = frame;
            comp.push_back(w);
          }
        }
      }
      std::sort(comp.begin(), comp.end());
      comps.push_back(std::move(comp));
    }
    std::vector<int> child_shift = shift;
    if (comps.size() == 1 && lat_.period[axis] > 0) {
      // The remainder wraps around the cut; unwrap it so it starts right
      // after the separator plane.
      child_shift[axis] = (cut + shift[axis] + 1) % lat_.period[axis];
    }
    std::vector<int> children;
    for (auto& comp : comps) children.push_back(build(std::move(comp), comps.size() == 1 ? child_shift : shift));
    return make_block(std::move(sep), std::move(children));
  }

  Ordering emit(int root) {
    Ordering out;
    out.block_start.push_back(0);
    std::vector<int> ids;
    emit_rec(root, out, ids);
    // Parent links in emitted numbering.
    std::vector<int> new_id(blocks_.size(), -1);
    for (std::size_t k = 0; k < ids.size(); ++k) new_id[ids[k]] = static_cast<int>(k);
    out.block_parent.assign(ids.size(), -1);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      for (int c : blocks_[ids[k]].children) out.block_parent[new_id[c]] = static_cast<int>(k);
    }
    return out;
  }

 private:
  struct Block {
    std::vector<int> nodes;
    std::vector<int> children;
  };

  int make_block(std::vector<int> nodes, std::vector<int> children) {
    std::sort(nodes.begin(), nodes.end());
    blocks_.push_back({std::move(nodes), std::move(children)});
    return static_cast<int>(blocks_.size()) - 1;
  }

  void emit_rec(int b, Ordering& out, std::vector<int>& ids) {
    for (int c : blocks_[b].children) emit_rec(c, out, ids);
    for (int v : blocks_[b].nodes) out.perm.push_back(v);
    out.block_start.push_back(static_cast<int>(out.perm.size()));
    ids.push_back(b);
  }

  const Adjacency& adj_;
  const LatticeCoords& lat_;
  int leaf_;
  std::vector<int> owner_;
  std::vector<int> seen_;
  int frame_counter_ = 0;
  std::vector<Block> blocks_;
};

}  // namespace

Ordering nested_dissection(const Eigen::SparseMatrix<double>& a, const LatticeCoords& lattice, int leaf_size) {
  const int n = static_cast<int>(a.cols());
  if (a.rows() != a.cols()) throw DimensionError("ordering needs a square matrix");
  if (lattice.dim < 1 || static_cast<int>(lattice.coords.size()) != n * lattice.dim ||
      static_cast<int>(lattice.period.size()) != lattice.dim) {
    throw DimensionError("lattice coordinates do not match the matrix");
  }
  if (n == 0) return {};
  const Adjacency adj = adjacency_of(a);
  Dissector dis(adj, lattice, leaf_size);
  // Disconnected graphs: one tree per component under a common empty root is
  // not needed since every root is processed independently.
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  const int root = dis.build(std::move(all), std::vector<int>(lattice.dim, 0));
  Ordering out = dis.emit(root);
  // An empty separator block can appear when the root frame is disconnected.
  Ordering compact;
  compact.perm = std::move(out.perm);
  std::vector<int> remap(out.block_parent.size(), -1);
  compact.block_start.push_back(0);
  for (std::size_t b = 0; b < out.block_parent.size(); ++b) {
    if (out.block_start[b + 1] == out.block_start[b]) continue;
    remap[b] = static_cast<int>(compact.block_start.size()) - 1;
    compact.block_start.push_back(out.block_start[b + 1]);
  }
  for (std::size_t b = 0; b < out.block_parent.size(); ++b) {
    if (remap[b] < 0) continue;
    int p = out.block_parent[b];
    while (p >= 0 && remap[p] < 0) p = out.block_parent[p];
    compact.block_parent.push_back(p < 0 ? -1 : remap[p]);
  }
  return compact;
}

Ordering minimum_degree(const Eigen::SparseMatrix<double>& a) {
  if (a.rows() != a.cols()) throw DimensionError("ordering needs a square matrix");
  Eigen::AMDOrdering<int> amd;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> p;
  amd(a, p);
  Ordering out;
  out.perm.assign(p.indices().data(), p.indices().data() + p.indices().size());
  return out;
}

}  // namespace hypospec::linalg
