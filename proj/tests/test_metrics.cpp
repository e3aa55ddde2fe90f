#include "doctest.h"
#include "lconf/error.hpp"
#include "lconf/metrics.hpp"
#include "oracles.hpp"

using namespace lconf;

namespace {

std::vector<bool> random_mask(std::size_t n, std::uint64_t seed) {
  const Labels y = oracle::random_labels(n, 2, seed);
  return {y.begin(), y.end()};
}

std::vector<double> random_weights(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(n);
  for (double& v : w) v = u(rng);
  return w;
}

}  // namespace

TEST_CASE("perfect separation scores F1 = 1") {
  const std::vector<bool> mask{true, false, true, true, false};
  std::vector<double> w;
  for (bool b : mask) w.push_back(b ? 1.0 : 0.0);
  const auto s = metrics::noise_detection_scores(ConfidenceVector(w), mask);
  CHECK(s.f1 == 1.0);
  CHECK(s.precision == 1.0);
  CHECK(s.recall == 1.0);
}

TEST_CASE("nothing predicted clean is flagged and scores zero") {
  const std::vector<bool> mask{true, false, true};
  const auto s = metrics::noise_detection_scores(ConfidenceVector({0.1, 0.2, 0.49}), mask);
  CHECK(s.empty_prediction);
  CHECK(s.precision == 0.0);
  CHECK(s.f1 == 0.0);
}

TEST_CASE("ties at the threshold count as clean") {
  const auto s = metrics::noise_detection_scores(ConfidenceVector({0.5}), {true});
  CHECK(s.true_positive == 1);
}

TEST_CASE("flipped and random confidence match naive counting") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto mask = random_mask(300, seed);
    std::vector<double> flipped;
    for (bool b : mask) flipped.push_back(b ? 0.0 : 1.0);
    for (const auto& w : {flipped, random_weights(300, seed + 1)}) {
      const auto s = metrics::noise_detection_scores(ConfidenceVector(w), mask);
      const auto c = oracle::count_confusion(w, mask, 0.5);
      CHECK(s.true_positive == c.tp);
      CHECK(s.false_positive == c.fp);
      CHECK(s.false_negative == c.fn);
      CHECK(s.true_negative == c.tn);
      CHECK(s.f1 == doctest::Approx(oracle::f1_from(c)));
      CHECK(s.true_positive + s.false_positive + s.false_negative + s.true_negative == 300);
      CHECK((s.precision >= 0.0 && s.precision <= 1.0));
      CHECK((s.recall >= 0.0 && s.recall <= 1.0));
    }
  }
}

TEST_CASE("F1 is invariant under monotone maps that keep the threshold crossings") {
  const auto mask = random_mask(200, 3);
  const auto w = random_weights(200, 4);
  std::vector<double> squashed;
  for (double v : w) squashed.push_back(v >= 0.5 ? 0.5 + 0.5 * std::sqrt(2.0 * v - 1.0) : 0.5 * (2.0 * v) * (2.0 * v));
  CHECK(metrics::noise_detection_scores(ConfidenceVector(w), mask).f1 ==
        metrics::noise_detection_scores(ConfidenceVector(squashed), mask).f1);
}

TEST_CASE("detection scores reject length mismatch") {
  CHECK_THROWS_AS(metrics::noise_detection_scores(ConfidenceVector({0.5, 0.5}), {true}), InputError);
}

TEST_CASE("accuracy examples") {
  const Labels a{0, 1, 2, 1};
  CHECK(metrics::accuracy(a, a) == 1.0);
  CHECK(metrics::accuracy(a, Labels{1, 2, 0, 0}) == 0.0);
  CHECK_THROWS_AS(metrics::accuracy(a, Labels{0}), InputError);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Labels p = oracle::random_labels(500, 4, seed), t = oracle::random_labels(500, 4, seed + 10);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < p.size(); ++i) hits += p[i] == t[i];
    CHECK(metrics::accuracy(p, t) == doctest::Approx(hits / 500.0));
  }
}

TEST_CASE("confusion matrix examples") {
  const Labels truth{0, 1, 2, 2, 1};
  const auto perfect = metrics::confusion_matrix(truth, truth, 3);
  CHECK(perfect(1, 1) == 2);
  CHECK(perfect.sum() == perfect.diagonal().sum());
  const auto constant = metrics::confusion_matrix(Labels(5, 2), truth, 3);
  CHECK(constant.col(2).sum() == 5);
  CHECK(constant.col(0).sum() + constant.col(1).sum() == 0);
  CHECK_THROWS_AS(metrics::confusion_matrix(Labels{0, 3}, Labels{0, 1}, 3), InputError);
}

TEST_CASE("confusion matrix vs naive double loop") {
  const Labels p = oracle::random_labels(400, 5, 1), t = oracle::random_labels(400, 5, 2);
  const auto m = metrics::confusion_matrix(p, t, 5);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      long n = 0;
      for (std::size_t s = 0; s < p.size(); ++s) n += t[s] == i && p[s] == j;
      CHECK(m(i, j) == n);
    }
  }
  CHECK(m.sum() == 400);
}

TEST_CASE("clean mask needs truth") {
  const NoisyDataset ds(FeatureMatrix(RowMatrix::Zero(3, 1)), {0, 1, 1}, 2, Labels{0, 0, 1});
  CHECK(metrics::clean_mask(ds) == std::vector<bool>{true, false, true});
  const NoisyDataset blind(FeatureMatrix(RowMatrix::Zero(3, 1)), {0, 1, 1}, 2);
  CHECK_THROWS_AS(metrics::clean_mask(blind), InputError);
}
