#include <cmath>
#include <limits>

#include "doctest.h"
#include "lconf/core.hpp"
#include "lconf/error.hpp"
#include "oracles.hpp"

using namespace lconf;

TEST_CASE("one_hot of two labels") {
  const Labels y{0, 1};
  const Matrix m = one_hot(y, 2);
  CHECK(m == Matrix::Identity(2, 2));
}

TEST_CASE("one_hot repeats identical rows") {
  const Labels y{1, 1, 1};
  const Matrix m = one_hot(y, 3);
  REQUIRE(m.rows() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(m(i, 0) == 0.0);
    CHECK(m(i, 1) == 1.0);
    CHECK(m(i, 2) == 0.0);
  }
}

TEST_CASE("one_hot rejects out-of-range labels") {
  const Labels y{2};
  CHECK_THROWS_AS(one_hot(y, 2), InputError);
  const Labels neg{-1};
  CHECK_THROWS_AS(one_hot(neg, 2), InputError);
}

TEST_CASE("argmax inverts one_hot") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Labels y = oracle::random_labels(50, 7, seed);
    CHECK(argmax_rows(one_hot(y, 7)) == y);
  }
}

TEST_CASE("argmax ties go to the lower column") {
  Matrix m(1, 3);
  m << 0.4, 0.4, 0.2;
  CHECK(argmax_rows(m) == Labels{0});
}

TEST_CASE("feature matrix rejects empty and non-finite data") {
  CHECK_THROWS_AS(FeatureMatrix(RowMatrix(0, 3)), InputError);
  CHECK_THROWS_AS(FeatureMatrix(RowMatrix(3, 0)), InputError);
  RowMatrix bad = RowMatrix::Zero(2, 2);
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(FeatureMatrix{bad}, InputError);
  bad(1, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(FeatureMatrix{bad}, InputError);
}

TEST_CASE("label distribution and confidence reject bad values") {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(LabelDistribution{m}, InputError);
  CHECK_THROWS_AS(ConfidenceVector({0.5, 1.5}), InputError);
  CHECK_THROWS_AS(ConfidenceVector({-0.1}), InputError);
  CHECK_THROWS_AS(ConfidenceVector({std::nan("")}), InputError);
  CHECK_NOTHROW(ConfidenceVector({0.0, 1.0}));
}

TEST_CASE("row stochastic check") {
  Matrix m(2, 2);
  m << 0.25, 0.75, 1.0, 0.0;
  CHECK(LabelDistribution(m).is_row_stochastic());
  m(1, 1) = 0.1;
  CHECK_FALSE(LabelDistribution(m).is_row_stochastic());
}

TEST_CASE("noisy dataset validates labels and truth") {
  FeatureMatrix x(RowMatrix::Zero(3, 2));
  CHECK_THROWS_AS(NoisyDataset(x, {0, 1, 3}, 3), InputError);
  CHECK_THROWS_AS(NoisyDataset(x, {0, 1}, 3), InputError);
  CHECK_THROWS_AS(NoisyDataset(x, {0, 1, 2}, 3, Labels{0, 1}), InputError);
  const NoisyDataset ds(x, {0, 1, 2}, 3, Labels{0, 1, 1});
  CHECK(ds.has_truth());
  CHECK(ds.size() == 3);
}

TEST_CASE("subset keeps rows, labels and truth aligned") {
  RowMatrix x(3, 1);
  x << 10, 20, 30;
  const NoisyDataset ds(FeatureMatrix(x), {0, 1, 0}, 2, Labels{1, 1, 0});
  const std::vector<std::size_t> rows{2, 0};
  const NoisyDataset sub = ds.subset(rows);
  CHECK(sub.features().data()(0, 0) == 30);
  CHECK(sub.features().data()(1, 0) == 10);
  CHECK(sub.noisy_labels() == Labels{0, 0});
  const NoisyDataset relabeled = ds.with_noisy_labels({1, 1, 1});
  CHECK(relabeled.noisy_labels() == Labels{1, 1, 1});
  CHECK(&relabeled.features().data() == &ds.features().data());
}
