#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lconf/core.hpp"

namespace lconf::trainer {

// Weights of a [d, h, C] classifier. With h == 0 the model is a linear
// softmax classifier and w1/b1 are empty.
struct Parameters {
  Matrix w1;  // h x d
  Vector b1;  // h
  Matrix w2;  // C x h (or C x d)
  Vector b2;  // C

  Parameters& operator+=(const Parameters& other);
  Parameters& operator*=(double s);
  Parameters zeros_like() const;
  std::size_t count() const;
  // Flat view helpers for finite-difference checks.
  double& at(std::size_t flat);
  double at(std::size_t flat) const;
};

class MlpClassifier {
 public:
  // Gaussian initialization (He scaling) from `seed`; biases start at zero.
  MlpClassifier(std::size_t input_dim, std::size_t hidden_dim, int num_classes, std::uint64_t seed);
  // All-zero parameters.
  static MlpClassifier zeros(std::size_t input_dim, std::size_t hidden_dim, int num_classes);

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t hidden_dim() const noexcept { return hidden_dim_; }
  int num_classes() const noexcept { return num_classes_; }

  Parameters& params() noexcept { return params_; }
  const Parameters& params() const noexcept { return params_; }

  Matrix logits(const Eigen::Ref<const Matrix>& x) const;
  // Row-stochastic class probabilities.
  Matrix forward(const Eigen::Ref<const Matrix>& x) const;
  // Input to the final linear layer: the hidden activations, or x itself when h == 0.
  Matrix representation(const Eigen::Ref<const Matrix>& x) const;

 private:
  MlpClassifier(std::size_t input_dim, std::size_t hidden_dim, int num_classes);
  void check_input(const Eigen::Ref<const Matrix>& x) const;

  std::size_t input_dim_;
  std::size_t hidden_dim_;
  int num_classes_;
  Parameters params_;
};

struct RegWeights {
  double uniform_prior = 0.0;  // KL(uniform || batch-mean prediction)
  double neg_entropy = 0.0;    // mean_i sum_c p log p
};

struct LossGrad {
  double loss = 0.0;
  double cross_entropy = 0.0;
  double uniform_prior = 0.0;
  double neg_entropy = 0.0;
  Parameters grad;
};

// Mean soft-target cross-entropy plus the weighted regularizers, with the
// exact gradient by backpropagation.
LossGrad loss_and_gradient(const MlpClassifier& model, const Eigen::Ref<const Matrix>& x,
                           const Eigen::Ref<const Matrix>& targets, const RegWeights& reg = {});

// Row-wise p^(1/T) / sum p^(1/T).
Matrix sharpen(const Eigen::Ref<const Matrix>& p, double temperature);
Matrix cotrain_pseudo_label(const Eigen::Ref<const Matrix>& p1, const Eigen::Ref<const Matrix>& p2,
                            double temperature);
// y* = w * noisy + (1 - w) * pseudo, row by row.
Matrix refurbish(std::span<const double> w, const Eigen::Ref<const Matrix>& noisy_one_hot,
                 const Eigen::Ref<const Matrix>& pseudo);

struct TrainConfig {
  int rounds = 40;
  int warmup_rounds = 10;
  int iterations_per_round = 0;  // 0: one pass over the data
  int batch_size = 64;
  double learning_rate = 0.05;
  int lr_decay_round = -1;  // < 0: never
  double decayed_learning_rate = 0.005;
  double momentum = 0.0;
  double weight_decay = 0.0;
  double temperature = 1.0;
  std::size_t k = 10;
  double mu = 1.0;
  double uniform_prior_weight = 0.0;
  double neg_entropy_weight = 0.0;  // applied during warm-up only
  double jitter = -1.0;             // < 0: 0.05 * feature standard deviation
  std::size_t hidden = 64;
  bool l2_normalize_graph = false;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);

struct RoundMetrics {
  int round = 0;
  int model = 0;
  bool warmup = true;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double noisy_train_accuracy = 0.0;
  std::optional<double> clean_train_accuracy;
  std::optional<double> test_accuracy;
  std::optional<double> ensemble_test_accuracy;
  std::optional<double> noise_f1;
  std::optional<double> mean_confidence_clean;
  std::optional<double> mean_confidence_noisy;
  std::optional<double> mean_confidence;
  std::optional<int> solver_iterations;
  std::optional<std::string> aborted;  // degenerate graph diagnostics
};

nlohmann::json to_json(const RoundMetrics& m);

struct PipelineResult {
  std::array<MlpClassifier, 2> models;
  std::vector<RoundMetrics> rounds;
  std::optional<double> final_test_accuracy;  // ensemble of both models
  std::optional<double> final_noise_f1;
};

// Two co-trained models: plain cross-entropy for the first warmup_rounds
// rounds, then per round and model the peer's representation feeds the
// Laplace estimator and training uses refurbished targets built from
// jittered-input pseudo-labels. `test` is only used for reporting.
PipelineResult run_pipeline(const NoisyDataset& train, const std::optional<NoisyDataset>& test,
                            const TrainConfig& config);

// Ensemble prediction: argmax of the averaged probabilities.
Labels predict(const std::array<MlpClassifier, 2>& models, const Eigen::Ref<const Matrix>& x);

}  // namespace lconf::trainer
