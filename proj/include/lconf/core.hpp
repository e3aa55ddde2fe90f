#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "lconf/error.hpp"

namespace lconf {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Labels = std::vector<int>;

class NoisyDataset;
class SparseGraph;

namespace metrics {
const std::optional<Labels>& true_labels(const NoisyDataset& dataset);
}
namespace graph {
SparseGraph normalize(const SparseMatrix& adjacency);
}

/// N x d sample embeddings, one row per sample. Immutable; copies share storage.
class FeatureMatrix {
 public:
  explicit FeatureMatrix(RowMatrix data);

  const RowMatrix& data() const noexcept { return *data_; }
  std::size_t n() const noexcept { return static_cast<std::size_t>(data_->rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(data_->cols()); }

 private:
  std::shared_ptr<const RowMatrix> data_;
};

/// Features plus integer noisy labels. The clean labels, when known, are only
/// reachable through metrics::true_labels so estimators cannot consume them.
class NoisyDataset {
 public:
  NoisyDataset(FeatureMatrix features, Labels noisy_labels, int num_classes,
               std::optional<Labels> true_labels = std::nullopt);

  const FeatureMatrix& features() const noexcept { return features_; }
  const Labels& noisy_labels() const noexcept { return noisy_labels_; }
  int num_classes() const noexcept { return num_classes_; }
  std::size_t size() const noexcept { return noisy_labels_.size(); }
  bool has_truth() const noexcept { return true_labels_.has_value(); }

  // Same features and hidden truth, different observed labels.
  NoisyDataset with_noisy_labels(Labels labels) const;
  // Rows in the given order; truth follows along.
  NoisyDataset subset(std::span<const std::size_t> rows) const;

 private:
  friend const std::optional<Labels>& metrics::true_labels(const NoisyDataset&);

  FeatureMatrix features_;
  Labels noisy_labels_;
  int num_classes_;
  std::optional<Labels> true_labels_;
};

/// Symmetric k-NN adjacency A, its degrees D and D^{-1/2} A D^{-1/2}.
/// Only graph::normalize constructs one, after checking every invariant.
class SparseGraph {
 public:
  const SparseMatrix& adjacency() const noexcept { return adjacency_; }
  const Vector& degrees() const noexcept { return degrees_; }
  const SparseMatrix& normalized() const noexcept { return normalized_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(degrees_.size()); }

 private:
  friend SparseGraph graph::normalize(const SparseMatrix&);
  SparseGraph(SparseMatrix adjacency, Vector degrees, SparseMatrix normalized)
      : adjacency_(std::move(adjacency)), degrees_(std::move(degrees)), normalized_(std::move(normalized)) {}

  SparseMatrix adjacency_;
  Vector degrees_;
  SparseMatrix normalized_;
};

/// N x C refined label matrix.
class LabelDistribution {
 public:
  explicit LabelDistribution(Matrix matrix);

  const Matrix& matrix() const noexcept { return matrix_; }
  std::size_t n() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
  int num_classes() const noexcept { return static_cast<int>(matrix_.cols()); }

  bool is_row_stochastic(double tol = 1e-9) const;

 private:
  Matrix matrix_;
};

/// Per-sample clean probability, every entry in [0, 1].
class ConfidenceVector {
 public:
  explicit ConfidenceVector(std::vector<double> values);

  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

// Dense one-hot view of integer labels. Throws InputError on a label outside [0, C).
Matrix one_hot(std::span<const int> labels, int num_classes);

// Row-wise argmax; ties go to the lower column.
Labels argmax_rows(const Eigen::Ref<const Matrix>& m);

void check_labels(std::span<const int> labels, int num_classes);

}  // namespace lconf
