#pragma once

#include <Eigen/Sparse>
#include <vector>

namespace hypospec::linalg {

/// Fill-reducing ordering. perm[new] = old. When blocks are present they
/// partition the new index range into contiguous supernodes listed in
/// postorder, with block_parent[b] = -1 for roots.
struct Ordering {
  std::vector<int> perm;
  std::vector<int> block_start;  // size num_blocks + 1, or empty
  std::vector<int> block_parent;
};

/// Lattice description for geometric nested dissection: coords[v * dim + a]
/// is the lattice index of vertex v along axis a, period[a] > 0 marks axes
/// that wrap (the lattice extent), 0 otherwise.
struct LatticeCoords {
  int dim = 0;
  std::vector<int> coords;
  std::vector<int> period;
};

/// Nested dissection with plane separators in lattice-index space; components
/// are found by breadth-first search on the matrix graph.
Ordering nested_dissection(const Eigen::SparseMatrix<double>& a, const LatticeCoords& lattice, int leaf_size = 48);

/// Approximate minimum degree ordering without block information.
Ordering minimum_degree(const Eigen::SparseMatrix<double>& a);

}  // namespace hypospec::linalg
