#include "lconf/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

namespace lconf::gmm {

namespace {

double log_density(double x, double mean, double variance) {
  const double diff = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) - diff * diff / (2.0 * variance);
}

double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

void check_losses(std::span<const double> losses) {
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (!std::isfinite(losses[i])) throw InputError("loss at index " + std::to_string(i) + " is not finite");
  }
}

}  // namespace

std::vector<double> per_sample_loss(const Matrix& probs, std::span<const int> noisy_labels) {
  if (static_cast<std::size_t>(probs.rows()) != noisy_labels.size()) {
    throw InputError("per_sample_loss: " + std::to_string(probs.rows()) + " prediction rows vs " +
                     std::to_string(noisy_labels.size()) + " labels");
  }
  check_labels(noisy_labels, static_cast<int>(probs.cols()));
  std::vector<double> loss(noisy_labels.size());
  for (std::size_t i = 0; i < loss.size(); ++i) {
    loss[i] = -std::log(std::max(probs(static_cast<Eigen::Index>(i), noisy_labels[i]), 1e-12));
  }
  return loss;
}

double log_likelihood(const Gmm2& model, std::span<const double> losses) {
  double total = 0.0;
  for (double x : losses) {
    total += log_sum_exp(std::log(model.weights[0]) + log_density(x, model.means[0], model.variances[0]),
                         std::log(model.weights[1]) + log_density(x, model.means[1], model.variances[1]));
  }
  return total / static_cast<double>(losses.size());
}

GmmFit fit_gmm2(std::span<const double> losses, const GmmOptions& options) {
  const std::size_t n = losses.size();
  if (n < 2) throw InputError("fit_gmm2 needs at least two losses");
  if (options.max_iter < 1 || !(options.tol > 0.0)) throw InputError("fit_gmm2: bad iteration settings");
  check_losses(losses);
  const auto [lo, hi] = std::minmax_element(losses.begin(), losses.end());
  if (*lo == *hi) throw DegenerateFitError("all losses are identical; nothing to separate");

  // Median split; the seed only decides the order among equal losses.
  std::mt19937_64 rng(options.seed);
  std::vector<std::uint64_t> tiebreak(n);
  for (auto& t : tiebreak) t = rng();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return losses[a] < losses[b] || (losses[a] == losses[b] && tiebreak[a] < tiebreak[b]);
  });
  const std::size_t half = n / 2;

  GmmFit fit;
  Gmm2& m = fit.model;
  const auto moments = [&](std::size_t begin, std::size_t end, int c) {
    double sum = 0.0;
    for (std::size_t r = begin; r < end; ++r) sum += losses[order[r]];
    const double mean = sum / static_cast<double>(end - begin);
    double ss = 0.0;
    for (std::size_t r = begin; r < end; ++r) ss += (losses[order[r]] - mean) * (losses[order[r]] - mean);
    m.means[c] = mean;
    m.variances[c] = std::max(ss / static_cast<double>(end - begin), kVarianceFloor);
    m.weights[c] = 0.5;
  };
  moments(0, half, 0);
  moments(half, n, 1);
  fit.log_likelihood.push_back(log_likelihood(m, losses));

  std::vector<double> resp(n);
  for (int it = 0; it < options.max_iter; ++it) {
    // E step: responsibility of component 0.
    for (std::size_t i = 0; i < n; ++i) {
      const double l0 = std::log(m.weights[0]) + log_density(losses[i], m.means[0], m.variances[0]);
      const double l1 = std::log(m.weights[1]) + log_density(losses[i], m.means[1], m.variances[1]);
      resp[i] = 1.0 / (1.0 + std::exp(l1 - l0));
    }
    // M step.
    std::array<double, 2> nk{0.0, 0.0}, sx{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      nk[0] += resp[i];
      nk[1] += 1.0 - resp[i];
      sx[0] += resp[i] * losses[i];
      sx[1] += (1.0 - resp[i]) * losses[i];
    }
    for (int c = 0; c < 2; ++c) {
      if (nk[c] <= 0.0) continue;  // empty component keeps its shape
      m.means[c] = sx[c] / nk[c];
    }
    std::array<double, 2> sv{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      const double d0 = losses[i] - m.means[0], d1 = losses[i] - m.means[1];
      sv[0] += resp[i] * d0 * d0;
      sv[1] += (1.0 - resp[i]) * d1 * d1;
    }
    for (int c = 0; c < 2; ++c) {
      if (nk[c] > 0.0) m.variances[c] = std::max(sv[c] / nk[c], kVarianceFloor);
      m.weights[c] = std::clamp(nk[c] / static_cast<double>(n), 1e-12, 1.0 - 1e-12);
    }
    const double wsum = m.weights[0] + m.weights[1];
    m.weights[0] /= wsum;
    m.weights[1] = 1.0 - m.weights[0];

    fit.log_likelihood.push_back(log_likelihood(m, losses));
    fit.iterations = it + 1;
    const double change = fit.log_likelihood.back() - fit.log_likelihood[fit.log_likelihood.size() - 2];
    if (std::abs(change) < options.tol) {
      fit.converged = true;
      break;
    }
  }

  if (m.means[0] > m.means[1]) {
    std::swap(m.means[0], m.means[1]);
    std::swap(m.variances[0], m.variances[1]);
    std::swap(m.weights[0], m.weights[1]);
  }
  return fit;
}

ConfidenceVector clean_posterior(const Gmm2& model, std::span<const double> losses) {
  check_losses(losses);
  std::vector<double> w(losses.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double l0 = std::log(model.weights[0]) + log_density(losses[i], model.means[0], model.variances[0]);
    const double l1 = std::log(model.weights[1]) + log_density(losses[i], model.means[1], model.variances[1]);
    w[i] = 1.0 / (1.0 + std::exp(l1 - l0));
  }
  return ConfidenceVector(std::move(w));
}

LossHistory::LossHistory(std::size_t window) : window_(window) {
  if (window_ < 1) throw InputError("loss window must be >= 1");
}

void LossHistory::push(std::vector<double> losses) {
  if (!epochs_.empty() && epochs_.front().size() != losses.size()) {
    throw InputError("loss history: sample count changed between epochs");
  }
  epochs_.push_back(std::move(losses));
  if (epochs_.size() > window_) epochs_.pop_front();
}

std::vector<double> LossHistory::averaged() const {
  if (epochs_.empty()) return {};
  std::vector<double> mean(epochs_.front().size(), 0.0);
  for (const auto& e : epochs_) {
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += e[i];
  }
  for (double& v : mean) v /= static_cast<double>(epochs_.size());
  return mean;
}

}  // namespace lconf::gmm
