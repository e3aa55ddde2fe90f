#include "lconf/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

namespace lconf::graph {

namespace {

constexpr Eigen::Index kQueryBlock = 256;

RowMatrix prepared_features(const FeatureMatrix& features, const KnnOptions& options) {
  RowMatrix x = features.data();
  if (options.l2_normalize) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double norm = x.row(i).norm();
      if (norm > 0.0) x.row(i) /= norm;
    }
  }
  return x;
}

}  // namespace

std::vector<std::vector<Neighbor>> knn_search(const FeatureMatrix& features, std::size_t k,
                                              const KnnOptions& options) {
  const std::size_t n = features.n();
  if (k < 1 || k >= n) {
    throw InputError("k = " + std::to_string(k) + " must satisfy 1 <= k < N = " + std::to_string(n));
  }
  const RowMatrix x = prepared_features(features, options);
  const auto rows = static_cast<Eigen::Index>(n);
  const Eigen::Index blocks = (rows + kQueryBlock - 1) / kQueryBlock;
  std::vector<std::vector<Neighbor>> result(n);

#pragma omp parallel
  {
    std::vector<int> candidates(n);
    Matrix gram;
#pragma omp for schedule(dynamic)
    for (Eigen::Index b = 0; b < blocks; ++b) {
      const Eigen::Index q0 = b * kQueryBlock;
      const Eigen::Index nq = std::min(kQueryBlock, rows - q0);
      gram.noalias() = x * x.middleRows(q0, nq).transpose();
      for (Eigen::Index q = 0; q < nq; ++q) {
        const int j = static_cast<int>(q0 + q);
        const auto col = gram.col(q);
        std::iota(candidates.begin(), candidates.end(), 0);
        std::swap(candidates[static_cast<std::size_t>(j)], candidates.back());
        const auto closer = [&col](int a, int c) {
          return col(a) > col(c) || (col(a) == col(c) && a < c);
        };
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                          candidates.end() - 1, closer);
        auto& out = result[static_cast<std::size_t>(j)];
        out.reserve(k);
        for (std::size_t r = 0; r < k; ++r) out.push_back({candidates[r], col(candidates[r])});
      }
    }
  }
  return result;
}

SparseMatrix knn_adjacency(const FeatureMatrix& features, std::size_t k, const KnnOptions& options) {
  const auto neighbors = knn_search(features, k, options);
  const std::size_t n = features.n();

  std::vector<std::tuple<int, int, double>> entries;
  entries.reserve(2 * n * k);
  for (std::size_t j = 0; j < n; ++j) {
    for (const auto& nb : neighbors[j]) {
      const double w = std::max(nb.similarity, 0.0);
      if (w <= 0.0) continue;
      entries.emplace_back(nb.index, static_cast<int>(j), w);
      entries.emplace_back(static_cast<int>(j), nb.index, w);
    }
  }
  std::sort(entries.begin(), entries.end());

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(entries.size());
  for (std::size_t e = 0; e < entries.size();) {
    const auto [i, j, w0] = entries[e];
    double w = w0;
    std::size_t f = e + 1;
    for (; f < entries.size() && std::get<0>(entries[f]) == i && std::get<1>(entries[f]) == j; ++f) {
      w = std::max(w, std::get<2>(entries[f]));
    }
    triplets.emplace_back(i, j, w);
    e = f;
  }

  SparseMatrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  for (Eigen::Index i = 0; i < a.outerSize(); ++i) {
    if (a.outerIndexPtr()[i + 1] == a.outerIndexPtr()[i]) {
      throw DegenerateGraphError("node has zero degree after clamping negative similarities",
                                 static_cast<std::size_t>(i));
    }
  }
  return a;
}

SparseGraph normalize(const SparseMatrix& adjacency) {
  if (adjacency.rows() != adjacency.cols()) throw InputError("adjacency matrix must be square");
  const Eigen::Index n = adjacency.rows();
  SparseMatrix a = adjacency;
  a.makeCompressed();
  const SparseMatrix at = a.transpose();

  Vector degrees = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    SparseMatrix::InnerIterator it(a, i), jt(at, i);
    for (; it && jt; ++it, ++jt) {
      if (it.col() != jt.col() || it.value() != jt.value()) {
        throw InputError("adjacency matrix is not symmetric at row " + std::to_string(i));
      }
      if (it.col() == i && it.value() != 0.0) throw InputError("adjacency has a self-loop at " + std::to_string(i));
      if (!(it.value() >= 0.0) || !std::isfinite(it.value())) {
        throw InputError("adjacency weight must be finite and non-negative");
      }
      degrees(i) += it.value();
    }
    if (it || jt) throw InputError("adjacency matrix is not symmetric at row " + std::to_string(i));
    if (!(degrees(i) > 0.0)) throw DegenerateGraphError("zero degree", static_cast<std::size_t>(i));
  }

  SparseMatrix normalized = a;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (SparseMatrix::InnerIterator it(normalized, i); it; ++it) {
      it.valueRef() = it.value() / std::sqrt(degrees(i) * degrees(it.col()));
    }
  }
  return SparseGraph(std::move(a), std::move(degrees), std::move(normalized));
}

}  // namespace lconf::graph
