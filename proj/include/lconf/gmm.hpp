#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "lconf/core.hpp"

namespace lconf::gmm {

inline constexpr double kVarianceFloor = 1e-6;

// Two-component 1-D Gaussian mixture. Component 0 has the smaller mean and
// stands for "clean".
struct Gmm2 {
  std::array<double, 2> means{};
  std::array<double, 2> variances{};
  std::array<double, 2> weights{};
};

struct GmmOptions {
  int max_iter = 100;
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

struct GmmFit {
  Gmm2 model;
  std::vector<double> log_likelihood;  // after initialization, then after every EM step
  int iterations = 0;
  bool converged = false;
};

// -log(max(p[i, label_i], 1e-12)).
std::vector<double> per_sample_loss(const Matrix& probs, std::span<const int> noisy_labels);

// EM from a split at the median. Throws DegenerateFitError when all losses are equal.
GmmFit fit_gmm2(std::span<const double> losses, const GmmOptions& options = {});

double log_likelihood(const Gmm2& model, std::span<const double> losses);

// Posterior of component 0 at each loss.
ConfidenceVector clean_posterior(const Gmm2& model, std::span<const double> losses);

// Running mean of per-sample losses over the last `window` epochs.
class LossHistory {
 public:
  explicit LossHistory(std::size_t window = 5);

  void push(std::vector<double> losses);
  std::vector<double> averaged() const;
  std::size_t size() const noexcept { return epochs_.size(); }

 private:
  std::size_t window_;
  std::deque<std::vector<double>> epochs_;
};

}  // namespace lconf::gmm
