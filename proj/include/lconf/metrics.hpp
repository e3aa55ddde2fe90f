#pragma once

#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "lconf/core.hpp"

namespace lconf::metrics {

// The only way to read a dataset's clean labels. Evaluation code only.
const std::optional<Labels>& true_labels(const NoisyDataset& dataset);

// clean_mask[i] = (noisy label == true label). Throws InputError without truth.
std::vector<bool> clean_mask(const NoisyDataset& dataset);

struct DetectionScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
  std::size_t true_negative = 0;
  bool empty_prediction = false;  // nothing predicted clean; precision reported as 0
};

// Clean is the positive class; w >= threshold predicts clean.
DetectionScores noise_detection_scores(const ConfidenceVector& w, const std::vector<bool>& clean_mask,
                                       double threshold = 0.5);

double accuracy(std::span<const int> predictions, std::span<const int> truth);

// Entry (i, j) counts samples of true class i predicted as j.
Eigen::MatrixX<long> confusion_matrix(std::span<const int> predictions, std::span<const int> truth, int num_classes);

nlohmann::json to_json(const DetectionScores& s);

}  // namespace lconf::metrics
