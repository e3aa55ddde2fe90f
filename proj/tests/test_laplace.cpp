#include "doctest.h"
#include "lconf/corpus.hpp"
#include "lconf/error.hpp"
#include "lconf/laplace.hpp"
#include "lconf/metrics.hpp"
#include "oracles.hpp"

using namespace lconf;

namespace {

SparseGraph two_node() {
  Matrix a(2, 2);
  a << 0, 1, 1, 0;
  SparseMatrix s = a.sparseView();
  return graph::normalize(s);
}

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix m(r.size(), r.begin()->size());
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

laplace::SolverConfig config(double mu, laplace::RhsMode mode = laplace::RhsMode::Paper, double tol = 1e-12) {
  laplace::SolverConfig c;
  c.mu = mu;
  c.tol = tol;
  c.rhs_mode = mode;
  return c;
}

struct Instance {
  SparseGraph graph;
  Matrix noisy;
};

Instance random_instance(std::uint64_t seed, std::size_t n, std::size_t k, int c) {
  const RowMatrix x = oracle::positive_features(n, 4, seed);
  const Labels y = oracle::random_labels(n, c, seed + 1);
  return {graph::build(FeatureMatrix(x), k), one_hot(y, c)};
}

}  // namespace

TEST_CASE("energy of agreeing identical rows is zero") {
  const Matrix y = rows({{1, 0}, {1, 0}});
  CHECK(laplace::laplacian_energy(two_node(), y, y, 1.0) == 0.0);
}

TEST_CASE("energy of disagreeing rows is pure smoothness") {
  const Matrix y = rows({{1, 0}, {0, 1}});
  for (double mu : {0.1, 1.0, 7.0}) CHECK(laplace::laplacian_energy(two_node(), y, y, mu) == doctest::Approx(2.0));
}

TEST_CASE("energy matches the naive double loop") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = random_instance(seed, 30, 4, 3);
    const Matrix y = oracle::gaussian_matrix(30, 3, seed + 50);
    const double fast = laplace::laplacian_energy(inst.graph, y, inst.noisy, 0.7);
    const double slow = oracle::naive_energy(Matrix(inst.graph.adjacency()), y, inst.noisy, 0.7);
    CHECK(std::abs(fast - slow) <= 1e-12 * std::max(1.0, std::abs(slow)));
  }
}

TEST_CASE("energy rejects mismatched shapes") {
  CHECK_THROWS_AS(laplace::laplacian_energy(two_node(), Matrix::Zero(3, 2), Matrix::Zero(3, 2), 1.0), InputError);
  CHECK_THROWS_AS(laplace::laplacian_energy(two_node(), Matrix::Zero(2, 2), Matrix::Zero(2, 3), 1.0), InputError);
}

TEST_CASE("two-node solve with agreeing labels") {
  const auto r = laplace::solve_labels(two_node(), rows({{1, 0}, {1, 0}}), config(1.0));
  CHECK((r.labels.matrix() - rows({{2, 0}, {2, 0}})).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-node solve with disagreeing labels") {
  const auto r = laplace::solve_labels(two_node(), rows({{1, 0}, {0, 1}}), config(1.0));
  CHECK((r.labels.matrix() - rows({{4.0 / 3, 2.0 / 3}, {2.0 / 3, 4.0 / 3}})).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(r.stats.iterations.size() == 2);
  for (double res : r.stats.residuals) CHECK(res <= 1e-12);
}

TEST_CASE("CG matches a dense LU solve") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const std::size_t n = 20 + 15 * seed;
    const auto inst = random_instance(seed, n, 2 + seed % 5, 4);
    for (auto mode : {laplace::RhsMode::Paper, laplace::RhsMode::Stationary}) {
      const double mu = 0.5 + seed;
      const auto r = laplace::solve_labels(inst.graph, inst.noisy, config(mu, mode, 1e-10));
      const double scale = mode == laplace::RhsMode::Paper ? 1.0 : mu / (1.0 + mu);
      const Matrix ref = oracle::dense_solve(Matrix(inst.graph.normalized()), inst.noisy, mu, scale);
      CHECK((r.labels.matrix() - ref).cwiseAbs().maxCoeff() <= 1e-6);
    }
  }
}

TEST_CASE("CG converges within N iterations at tol 1e-10") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = random_instance(seed + 30, 60, 5, 3);
    for (double mu : {0.1, 1.0, 10.0}) {
      const auto r = laplace::solve_labels(inst.graph, inst.noisy, config(mu, laplace::RhsMode::Paper, 1e-10));
      for (int it : r.stats.iterations) CHECK(it <= 60);
      for (double res : r.stats.residuals) CHECK(res <= 1e-9);
    }
  }
}

TEST_CASE("iteration cap raises a convergence error with the residual") {
  const auto inst = random_instance(3, 100, 5, 3);
  auto c = config(0.01);
  c.max_iter = 1;
  try {
    laplace::solve_labels(inst.graph, inst.noisy, c);
    FAIL("expected a convergence error");
  } catch (const ConvergenceError& e) {
    CHECK(e.residual() > c.tol);
  }
}

TEST_CASE("solver config validation") {
  laplace::SolverConfig c;
  c.mu = 0.0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = {};
  c.tol = 0.0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = {};
  c.max_iter = 0;
  CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("stationary solution zeroes the finite-difference gradient and lowers the energy") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto inst = random_instance(seed + 60, 25, 3, 3);
    for (double mu : {0.1, 1.0, 10.0}) {
      const auto r = laplace::solve_labels(inst.graph, inst.noisy, config(mu, laplace::RhsMode::Stationary));
      Matrix y = r.labels.matrix();
      double worst = 0.0;
      for (Eigen::Index i = 0; i < y.rows(); ++i) {
        for (Eigen::Index c = 0; c < y.cols(); ++c) {
          const double g = oracle::central_difference(
              [&] { return laplace::laplacian_energy(inst.graph, y, inst.noisy, mu); }, y(i, c), 1e-6);
          worst = std::max(worst, std::abs(g));
        }
      }
      CHECK(worst <= 1e-4);
      CHECK(laplace::laplacian_energy(inst.graph, y, inst.noisy, mu) <=
            laplace::laplacian_energy(inst.graph, inst.noisy, inst.noisy, mu));
    }
  }
}

TEST_CASE("paper and stationary modes agree after normalization") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto inst = random_instance(seed + 90, 70, 5, 4);
    const auto a = laplace::solve_labels(inst.graph, inst.noisy, config(1.3, laplace::RhsMode::Paper));
    const auto b = laplace::solve_labels(inst.graph, inst.noisy, config(1.3, laplace::RhsMode::Stationary));
    const Matrix na = laplace::row_normalize(a.labels.matrix()).labels.matrix();
    const Matrix nb = laplace::row_normalize(b.labels.matrix()).labels.matrix();
    CHECK((na - nb).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("row normalization examples") {
  auto r = laplace::row_normalize(rows({{2, 0}}));
  CHECK(r.labels.matrix() == rows({{1, 0}}));
  r = laplace::row_normalize(rows({{4.0 / 3, 2.0 / 3}}));
  CHECK((r.labels.matrix() - rows({{2.0 / 3, 1.0 / 3}})).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(r.degenerate_rows == 0);
  r = laplace::row_normalize(rows({{-1, -1}}));
  CHECK(r.labels.matrix() == rows({{0.5, 0.5}}));
  CHECK(r.degenerate_rows == 1);
}

TEST_CASE("row normalization matches the naive version") {
  const Matrix raw = oracle::gaussian_matrix(40, 5, 3);
  const auto r = laplace::row_normalize(raw);
  CHECK((r.labels.matrix() - oracle::naive_row_normalize(raw)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(r.labels.is_row_stochastic());
}

TEST_CASE("confidence is the mass on the given label") {
  auto w = laplace::extract_confidence(LabelDistribution(rows({{1, 0}})), Labels{0});
  CHECK(w[0] == 1.0);
  w = laplace::extract_confidence(LabelDistribution(rows({{2.0 / 3, 1.0 / 3}, {1.0 / 3, 2.0 / 3}})), Labels{0, 1});
  CHECK(w[0] == doctest::Approx(2.0 / 3));
  CHECK(w[1] == doctest::Approx(2.0 / 3));
  w = laplace::extract_confidence(LabelDistribution(Matrix::Constant(1, 4, 0.25)), Labels{3});
  CHECK(w[0] == 0.25);
  CHECK_THROWS_AS(laplace::extract_confidence(LabelDistribution(rows({{1, 0}})), Labels{2}), InputError);
  CHECK_THROWS_AS(laplace::extract_confidence(LabelDistribution(rows({{2, 0}})), Labels{0}), InputError);
}

TEST_CASE("two-node fixture end to end gives 2/3") {
  const auto r = laplace::solve_labels(two_node(), rows({{1, 0}, {0, 1}}), config(1.0));
  const auto w = laplace::extract_confidence(laplace::row_normalize(r.labels.matrix()).labels, Labels{0, 1});
  CHECK(std::abs(w[0] - 2.0 / 3) <= 1e-9);
  CHECK(std::abs(w[1] - 2.0 / 3) <= 1e-9);
}

namespace {

// Two tight clusters of identical points along orthogonal axes.
RowMatrix two_clusters(std::size_t per) {
  RowMatrix x(2 * per, 2);
  for (std::size_t i = 0; i < per; ++i) {
    x.row(i) << 1, 0.01;
    x.row(per + i) << 0.01, 1;
  }
  return x;
}

}  // namespace

TEST_CASE("consistent labels on clean clusters give full confidence") {
  const RowMatrix x = two_clusters(6);
  Labels y(12);
  for (int i = 0; i < 12; ++i) y[i] = i < 6 ? 0 : 1;
  laplace::EstimateOptions opts;
  opts.k = 5;
  const auto r = laplace::estimate(FeatureMatrix(x), y, 2, opts);
  for (double w : r.confidence.values()) CHECK(std::abs(w - 1.0) <= 1e-9);
}

TEST_CASE("all-agreeing labels on a connected graph give w = 1") {
  const RowMatrix x = oracle::positive_features(80, 3, 5);
  const Labels y(80, 2);
  laplace::EstimateOptions opts;
  opts.k = 6;
  const auto r = laplace::estimate(FeatureMatrix(x), y, 4, opts);
  for (double w : r.confidence.values()) CHECK(std::abs(w - 1.0) <= 1e-9);
}

TEST_CASE("a single flipped label gets the smallest confidence") {
  const RowMatrix x = two_clusters(6);
  Labels y(12);
  for (int i = 0; i < 12; ++i) y[i] = i < 6 ? 0 : 1;
  y[3] = 1;
  laplace::EstimateOptions opts;
  opts.k = 5;
  const auto w = laplace::estimate(FeatureMatrix(x), y, 2, opts).confidence.values();

  const SparseGraph g = graph::build(FeatureMatrix(x), 5);
  const Matrix dense = oracle::dense_solve(Matrix(g.normalized()), one_hot(y, 2), 1.0, 1.0);
  const Matrix ref = oracle::naive_row_normalize(dense);
  for (int i = 0; i < 12; ++i) {
    CHECK(std::abs(w[i] - ref(i, y[i])) <= 1e-9);
    if (i != 3) CHECK(w[3] < w[i]);
  }
}

TEST_CASE("blobs with 40% symmetric noise are detected well") {
  auto ds = corpus::make_gaussian_blobs({600, 3, 8, 8.0, 1.0, 0});
  ds = corpus::inject_symmetric(ds, 0.4, 1);
  laplace::EstimateOptions opts;
  const auto w = laplace::estimate(ds.features(), ds.noisy_labels(), 3, opts).confidence;
  const auto mask = metrics::clean_mask(ds);

  const SparseGraph g = graph::build(ds.features(), 10);
  const Matrix ref = oracle::naive_row_normalize(oracle::dense_solve(Matrix(g.normalized()), one_hot(ds.noisy_labels(), 3), 1.0, 1.0));
  std::vector<double> wref(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) wref[i] = ref(i, ds.noisy_labels()[i]);
  const double f1 = metrics::noise_detection_scores(w, mask).f1;
  CHECK(f1 == doctest::Approx(oracle::f1_from(oracle::count_confusion(wref, mask, 0.5))));
  MESSAGE("F1 = " << f1);
  CHECK(f1 >= 0.88);
}
