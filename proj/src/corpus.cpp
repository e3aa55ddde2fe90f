#include "lconf/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace lconf::corpus {

namespace {

// Independent streams for directions and samples so a change in n never
// moves the class geometry.
constexpr std::uint64_t kDirectionStream = 0x9e3779b97f4a7c15ull;

void check_rate(double rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw InputError("noise rate must lie in [0, 1]");
}

}  // namespace

Matrix class_directions(int num_classes, std::size_t dim, std::uint64_t seed) {
  if (num_classes < 1 || dim < 1) throw InputError("class_directions needs C >= 1 and d >= 1");
  std::mt19937_64 rng(seed ^ kDirectionStream);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto d = static_cast<Eigen::Index>(dim);
  Matrix u(num_classes, d);
  for (int c = 0; c < num_classes; ++c) {
    Vector v(d);
    for (Eigen::Index j = 0; j < d; ++j) v(j) = gauss(rng);
    Vector raw = v;
    if (static_cast<std::size_t>(c) < dim) {
      for (int p = 0; p < c; ++p) v -= u.row(p).dot(v) * u.row(p).transpose();
    }
    if (v.norm() < 1e-12) v = raw;
    u.row(c) = v.normalized().transpose();
  }
  return u;
}

NoisyDataset make_gaussian_blobs(const BlobSpec& spec) {
  if (spec.num_classes < 1) throw InputError("need at least one class");
  if (spec.n < static_cast<std::size_t>(spec.num_classes)) {
    throw InputError("n = " + std::to_string(spec.n) + " is smaller than C = " + std::to_string(spec.num_classes));
  }
  if (spec.dim < 1) throw InputError("dimension must be >= 1");
  if (!(spec.separation > 0.0) || !(spec.spread >= 0.0)) throw InputError("separation must be > 0, spread >= 0");

  const Matrix u = class_directions(spec.num_classes, spec.dim, spec.seed);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  RowMatrix x(static_cast<Eigen::Index>(spec.n), static_cast<Eigen::Index>(spec.dim));
  Labels y(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const int c = static_cast<int>(i % static_cast<std::size_t>(spec.num_classes));
    y[i] = c;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double noise = spec.spread > 0.0 ? spec.spread * gauss(rng) : 0.0;
      x(static_cast<Eigen::Index>(i), j) = spec.separation * u(c, j) + noise;
    }
  }
  Labels truth = y;
  return NoisyDataset(FeatureMatrix(std::move(x)), std::move(y), spec.num_classes, std::move(truth));
}

Labels corrupt_symmetric(std::span<const int> labels, int num_classes, double rate, std::uint64_t seed) {
  check_rate(rate);
  check_labels(labels, num_classes);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> any_class(0, num_classes - 1);
  Labels out(labels.begin(), labels.end());
  for (int& l : out) {
    // Draw both variates unconditionally so sample i's outcome depends only on (seed, i).
    const double u = coin(rng);
    const int redraw = any_class(rng);
    if (u < rate) l = redraw;
  }
  return out;
}

NoisyDataset inject_symmetric(const NoisyDataset& dataset, double rate, std::uint64_t seed) {
  return dataset.with_noisy_labels(corrupt_symmetric(dataset.noisy_labels(), dataset.num_classes(), rate, seed));
}

void check_transition(const Matrix& transition, int num_classes) {
  if (transition.rows() != num_classes || transition.cols() != num_classes) {
    throw InputError("transition matrix must be " + std::to_string(num_classes) + "x" + std::to_string(num_classes));
  }
  for (Eigen::Index r = 0; r < transition.rows(); ++r) {
    if (!transition.row(r).allFinite() || (transition.row(r).array() < 0.0).any()) {
      throw InputError("transition row " + std::to_string(r) + " has negative or non-finite entries");
    }
    if (std::abs(transition.row(r).sum() - 1.0) > 1e-9) {
      throw InputError("transition row " + std::to_string(r) + " does not sum to 1");
    }
  }
}

Labels corrupt_asymmetric(std::span<const int> labels, double rate, const Matrix& transition, std::uint64_t seed) {
  check_rate(rate);
  const auto classes = static_cast<int>(transition.rows());
  check_transition(transition, classes);
  check_labels(labels, classes);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  Labels out(labels.begin(), labels.end());
  for (int& l : out) {
    const double u = coin(rng);
    const double pick = coin(rng);
    if (u >= rate) continue;
    double acc = 0.0;
    int next = l;
    for (Eigen::Index c = 0; c < transition.cols(); ++c) {
      if (transition(l, c) <= 0.0) continue;
      acc += transition(l, c);
      next = static_cast<int>(c);
      if (pick < acc) break;
    }
    l = next;
  }
  return out;
}

NoisyDataset inject_asymmetric(const NoisyDataset& dataset, double rate, const Matrix& transition,
                               std::uint64_t seed) {
  check_transition(transition, dataset.num_classes());
  return dataset.with_noisy_labels(corrupt_asymmetric(dataset.noisy_labels(), rate, transition, seed));
}

NoisyDataset inject_noise(const NoisyDataset& dataset, const NoiseSpec& spec) {
  if (spec.kind == NoiseKind::Symmetric) return inject_symmetric(dataset, spec.rate, spec.seed);
  if (!spec.transition) throw InputError("asymmetric noise needs a transition matrix");
  return inject_asymmetric(dataset, spec.rate, *spec.transition, spec.seed);
}

Matrix cifar10_pairflip_transition() {
  Matrix t = Matrix::Identity(10, 10);
  const auto flip = [&t](int from, int to) {
    t(from, from) = 0.0;
    t(from, to) = 1.0;
  };
  flip(9, 1);  // truck -> automobile
  flip(2, 0);  // bird -> airplane
  flip(4, 7);  // deer -> horse
  flip(3, 5);  // cat -> dog
  flip(5, 3);  // dog -> cat
  return t;
}

std::pair<NoisyDataset, NoisyDataset> split(const NoisyDataset& dataset, std::size_t n_first, std::uint64_t seed) {
  if (n_first == 0 || n_first >= dataset.size()) throw InputError("split point must leave both parts non-empty");
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::span<const std::size_t> all(order);
  return {dataset.subset(all.first(n_first)), dataset.subset(all.subspan(n_first))};
}

}  // namespace lconf::corpus
