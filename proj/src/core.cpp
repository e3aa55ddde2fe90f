#include "lconf/core.hpp"

#include <cmath>
#include <string>

namespace lconf {

FeatureMatrix::FeatureMatrix(RowMatrix data) {
  if (data.rows() < 1 || data.cols() < 1) {
    throw InputError("feature matrix must have at least one row and one column");
  }
  if (!data.allFinite()) {
    throw InputError("feature matrix contains non-finite entries");
  }
  data_ = std::make_shared<const RowMatrix>(std::move(data));
}

NoisyDataset::NoisyDataset(FeatureMatrix features, Labels noisy_labels, int num_classes,
                           std::optional<Labels> true_labels)
    : features_(std::move(features)),
      noisy_labels_(std::move(noisy_labels)),
      num_classes_(num_classes),
      true_labels_(std::move(true_labels)) {
  if (num_classes_ < 1) throw InputError("num_classes must be >= 1");
  if (noisy_labels_.size() != features_.n()) {
    throw InputError("label count " + std::to_string(noisy_labels_.size()) + " does not match sample count " +
                     std::to_string(features_.n()));
  }
  check_labels(noisy_labels_, num_classes_);
  if (true_labels_) {
    if (true_labels_->size() != features_.n()) throw InputError("true label count does not match sample count");
    check_labels(*true_labels_, num_classes_);
  }
}

NoisyDataset NoisyDataset::with_noisy_labels(Labels labels) const {
  return NoisyDataset(features_, std::move(labels), num_classes_, true_labels_);
}

NoisyDataset NoisyDataset::subset(std::span<const std::size_t> rows) const {
  RowMatrix x(static_cast<Eigen::Index>(rows.size()), features_.data().cols());
  Labels noisy(rows.size());
  std::optional<Labels> truth;
  if (true_labels_) truth.emplace(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t i = rows[r];
    if (i >= size()) throw InputError("subset row " + std::to_string(i) + " out of range");
    x.row(static_cast<Eigen::Index>(r)) = features_.data().row(static_cast<Eigen::Index>(i));
    noisy[r] = noisy_labels_[i];
    if (truth) (*truth)[r] = (*true_labels_)[i];
  }
  return NoisyDataset(FeatureMatrix(std::move(x)), std::move(noisy), num_classes_, std::move(truth));
}

LabelDistribution::LabelDistribution(Matrix matrix) : matrix_(std::move(matrix)) {
  if (!matrix_.allFinite()) throw InputError("label distribution contains non-finite entries");
}

bool LabelDistribution::is_row_stochastic(double tol) const {
  for (Eigen::Index i = 0; i < matrix_.rows(); ++i) {
    if ((matrix_.row(i).array() < 0.0).any()) return false;
    if (std::abs(matrix_.row(i).sum() - 1.0) > tol) return false;
  }
  return true;
}

ConfidenceVector::ConfidenceVector(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double v = values_[i];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw InputError("confidence " + std::to_string(v) + " at index " + std::to_string(i) + " outside [0, 1]");
    }
  }
}

void check_labels(std::span<const int> labels, int num_classes) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw InputError("label " + std::to_string(labels[i]) + " at index " + std::to_string(i) +
                       " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
}

Matrix one_hot(std::span<const int> labels, int num_classes) {
  if (num_classes < 1) throw InputError("num_classes must be >= 1");
  check_labels(labels, num_classes);
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return y;
}

Labels argmax_rows(const Eigen::Ref<const Matrix>& m) {
  Labels out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < m.cols(); ++c) {
      if (m(i, c) > m(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

}  // namespace lconf
