#include <Eigen/Eigenvalues>
#include <set>

#include "doctest.h"
#include "lconf/error.hpp"
#include "lconf/graph.hpp"
#include "oracles.hpp"

using namespace lconf;

namespace {

SparseMatrix sparse(const Matrix& dense) {
  SparseMatrix s = dense.sparseView();
  s.makeCompressed();
  return s;
}

RowMatrix unit_rows(RowMatrix x) {
  x.rowwise().normalize();
  return x;
}

}  // namespace

TEST_CASE("two identical unit vectors") {
  RowMatrix x(2, 2);
  x << 1, 0, 1, 0;
  const Matrix a = graph::knn_adjacency(FeatureMatrix(x), 1);
  Matrix expected(2, 2);
  expected << 0, 1, 1, 0;
  CHECK(a == expected);
}

TEST_CASE("orthogonal node ends up isolated") {
  RowMatrix x(3, 2);
  x << 1, 0, 1, 0, 0, 1;
  try {
    graph::knn_adjacency(FeatureMatrix(x), 2);
    FAIL("expected a degenerate graph");
  } catch (const DegenerateGraphError& e) {
    CHECK(e.node() == 2);
  }
}

TEST_CASE("k must be in [1, N)") {
  const FeatureMatrix x(RowMatrix::Ones(3, 2));
  CHECK_THROWS_AS(graph::knn_adjacency(x, 3), InputError);
  CHECK_THROWS_AS(graph::knn_adjacency(x, 0), InputError);
}

TEST_CASE("neighbor sets match a brute-force scan") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const RowMatrix x = unit_rows(oracle::gaussian_matrix(50, 6, seed));
    const auto fast = graph::knn_search(FeatureMatrix(x), 5);
    const auto slow = oracle::brute_knn(x, 5);
    for (int j = 0; j < 50; ++j) {
      std::vector<int> got;
      for (const auto& nb : fast[j]) got.push_back(nb.index);
      CHECK(got == slow[j]);
    }
  }
}

TEST_CASE("search agrees with brute force up to N = 500 across the query blocking") {
  const RowMatrix x = oracle::gaussian_matrix(500, 12, 77);
  const auto fast = graph::knn_search(FeatureMatrix(x), 10);
  const auto slow = oracle::brute_knn(x, 10);
  for (int j = 0; j < 500; ++j) {
    std::vector<int> got;
    for (const auto& nb : fast[j]) got.push_back(nb.index);
    CHECK(got == slow[j]);
  }
}

TEST_CASE("ties break to the lower index") {
  const RowMatrix x = RowMatrix::Ones(6, 2);
  const auto nn = graph::knn_search(FeatureMatrix(x), 2);
  CHECK(nn[0][0].index == 1);
  CHECK(nn[0][1].index == 2);
  CHECK(nn[3][0].index == 0);
  CHECK(nn[3][1].index == 1);
}

TEST_CASE("adjacency matches brute-force construction") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const RowMatrix x = oracle::positive_features(80, 4, seed);
    const Matrix a = graph::knn_adjacency(FeatureMatrix(x), 5);
    CHECK((a - oracle::brute_adjacency(x, 5)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(a == a.transpose());
    CHECK(a.diagonal().isZero(0.0));
    CHECK(a.minCoeff() >= 0.0);
  }
}

TEST_CASE("l2 normalization turns inner products into cosines") {
  RowMatrix x(3, 2);
  x << 10, 0, 1, 1, 0, 2;
  const Matrix a = graph::knn_adjacency(FeatureMatrix(x), 1, {true});
  CHECK(a(0, 1) == doctest::Approx(std::sqrt(0.5)));
  CHECK(a.maxCoeff() <= 1.0 + 1e-12);
}

TEST_CASE("normalize two nodes") {
  Matrix a(2, 2);
  a << 0, 2, 2, 0;
  const SparseGraph g = graph::normalize(sparse(a));
  CHECK(g.degrees()(0) == 2.0);
  CHECK(g.degrees()(1) == 2.0);
  CHECK(Matrix(g.normalized())(0, 1) == 1.0);
  CHECK(Matrix(g.normalized())(0, 0) == 0.0);
}

TEST_CASE("normalize a star") {
  Matrix a(3, 3);
  a << 0, 1, 1, 1, 0, 0, 1, 0, 0;
  const SparseGraph g = graph::normalize(sparse(a));
  CHECK(g.degrees()(0) == 2.0);
  CHECK(g.degrees()(1) == 1.0);
  CHECK(Matrix(g.normalized())(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("normalize matches dense D^-1/2 A D^-1/2") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const RowMatrix x = oracle::positive_features(40, 3, seed + 100);
    const Matrix a = graph::knn_adjacency(FeatureMatrix(x), 4);
    const SparseGraph g = graph::normalize(sparse(a));
    const Matrix abar = g.normalized();
    CHECK((abar - oracle::dense_normalized(a)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(abar == abar.transpose());
  }
}

TEST_CASE("spectrum of the normalized adjacency lies in [-1, 1]") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const RowMatrix x = oracle::positive_features(20 + 8 * seed, 5, seed + 200);
    const SparseGraph g = graph::build(FeatureMatrix(x), 3);
    Eigen::SelfAdjointEigenSolver<Matrix> eig{Matrix(g.normalized())};
    CHECK(eig.eigenvalues().cwiseAbs().maxCoeff() <= 1.0 + 1e-9);
  }
}

TEST_CASE("normalize rejects invalid adjacency") {
  Matrix a(2, 2);
  a << 0, 1, 0.5, 0;
  CHECK_THROWS_AS(graph::normalize(sparse(a)), InputError);
  a << 1, 1, 1, 0;
  CHECK_THROWS_AS(graph::normalize(sparse(a)), InputError);
  a << 0, -1, -1, 0;
  CHECK_THROWS_AS(graph::normalize(sparse(a)), InputError);
  Matrix iso = Matrix::Zero(3, 3);
  iso(0, 1) = iso(1, 0) = 1.0;
  try {
    graph::normalize(sparse(iso));
    FAIL("expected a degenerate graph");
  } catch (const DegenerateGraphError& e) {
    CHECK(e.node() == 2);
  }
}
