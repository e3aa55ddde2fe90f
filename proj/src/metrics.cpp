#include "lconf/metrics.hpp"

#include <string>

namespace lconf::metrics {

const std::optional<Labels>& true_labels(const NoisyDataset& dataset) { return dataset.true_labels_; }

std::vector<bool> clean_mask(const NoisyDataset& dataset) {
  const auto& truth = true_labels(dataset);
  if (!truth) throw InputError("dataset carries no true labels");
  std::vector<bool> mask(dataset.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = dataset.noisy_labels()[i] == (*truth)[i];
  return mask;
}

DetectionScores noise_detection_scores(const ConfidenceVector& w, const std::vector<bool>& clean_mask,
                                       double threshold) {
  if (w.size() != clean_mask.size()) {
    throw InputError("noise_detection_scores: " + std::to_string(w.size()) + " confidences vs " +
                     std::to_string(clean_mask.size()) + " mask entries");
  }
  DetectionScores s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const bool predicted_clean = w[i] >= threshold;
    if (predicted_clean && clean_mask[i]) ++s.true_positive;
    else if (predicted_clean) ++s.false_positive;
    else if (clean_mask[i]) ++s.false_negative;
    else ++s.true_negative;
  }
  const std::size_t predicted = s.true_positive + s.false_positive;
  const std::size_t actual = s.true_positive + s.false_negative;
  s.empty_prediction = predicted == 0;
  s.precision = predicted ? static_cast<double>(s.true_positive) / static_cast<double>(predicted) : 0.0;
  s.recall = actual ? static_cast<double>(s.true_positive) / static_cast<double>(actual) : 0.0;
  s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

double accuracy(std::span<const int> predictions, std::span<const int> truth) {
  if (predictions.size() != truth.size()) throw InputError("accuracy: length mismatch");
  if (truth.empty()) throw InputError("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predictions[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

Eigen::MatrixX<long> confusion_matrix(std::span<const int> predictions, std::span<const int> truth, int num_classes) {
  if (predictions.size() != truth.size()) throw InputError("confusion_matrix: length mismatch");
  check_labels(predictions, num_classes);
  check_labels(truth, num_classes);
  Eigen::MatrixX<long> m = Eigen::MatrixX<long>::Zero(num_classes, num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) ++m(truth[i], predictions[i]);
  return m;
}

nlohmann::json to_json(const DetectionScores& s) {
  return {{"precision", s.precision},         {"recall", s.recall},
          {"f1", s.f1},                       {"true_positive", s.true_positive},
          {"false_positive", s.false_positive}, {"false_negative", s.false_negative},
          {"true_negative", s.true_negative}, {"empty_prediction", s.empty_prediction}};
}

}  // namespace lconf::metrics
