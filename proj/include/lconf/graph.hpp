#pragma once

#include <vector>

#include "lconf/core.hpp"

namespace lconf::graph {

struct KnnOptions {
  // Scale each feature row to unit length first, making the inner product a cosine similarity.
  bool l2_normalize = false;
};

struct Neighbor {
  int index;
  double similarity;
};

// For every query j, the k samples i != j with the largest <v_i, v_j>,
// ordered by decreasing similarity; ties go to the lower index.
std::vector<std::vector<Neighbor>> knn_search(const FeatureMatrix& features, std::size_t k,
                                              const KnnOptions& options = {});

// A_ij = max(<v_i, v_j>, 0) whenever i is among the k nearest of j, then
// symmetrized with an elementwise max. Zero weights are not stored.
// Throws DegenerateGraphError if some node ends up with no positive edge.
SparseMatrix knn_adjacency(const FeatureMatrix& features, std::size_t k, const KnnOptions& options = {});

// D = A 1, normalized = D^{-1/2} A D^{-1/2}.
SparseGraph normalize(const SparseMatrix& adjacency);

inline SparseGraph build(const FeatureMatrix& features, std::size_t k, const KnnOptions& options = {}) {
  return normalize(knn_adjacency(features, k, options));
}

}  // namespace lconf::graph
