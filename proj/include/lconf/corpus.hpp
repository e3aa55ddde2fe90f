#pragma once

#include <cstdint>
#include <optional>

#include "lconf/core.hpp"

namespace lconf::corpus {

enum class NoiseKind { Symmetric, Asymmetric };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Symmetric;
  double rate = 0.0;
  std::optional<Matrix> transition;  // C x C, row-stochastic; asymmetric only
  std::uint64_t seed = 0;
};

struct BlobSpec {
  std::size_t n = 0;
  int num_classes = 0;
  std::size_t dim = 0;
  double separation = 1.0;
  double spread = 1.0;
  std::uint64_t seed = 0;
};

// Unit class directions: Gram-Schmidt over a seeded Gaussian matrix. When
// C > d the trailing rows are only normalized, not orthogonal.
Matrix class_directions(int num_classes, std::size_t dim, std::uint64_t seed);

// Sample i belongs to class i mod C and sits at separation * u_c plus
// isotropic Gaussian noise of standard deviation `spread`. noisy == true.
NoisyDataset make_gaussian_blobs(const BlobSpec& spec);

// Label-level noise. Each label is independently hit with probability `rate`;
// symmetric redraws uniformly over all C classes (so it may stay put),
// asymmetric resamples from the transition row of the current label.
Labels corrupt_symmetric(std::span<const int> labels, int num_classes, double rate, std::uint64_t seed);
Labels corrupt_asymmetric(std::span<const int> labels, double rate, const Matrix& transition, std::uint64_t seed);

NoisyDataset inject_symmetric(const NoisyDataset& dataset, double rate, std::uint64_t seed);
NoisyDataset inject_asymmetric(const NoisyDataset& dataset, double rate, const Matrix& transition,
                               std::uint64_t seed);
NoisyDataset inject_noise(const NoisyDataset& dataset, const NoiseSpec& spec);

// Rows must be non-negative and sum to 1 within 1e-9.
void check_transition(const Matrix& transition, int num_classes);

// Pairwise-flip convention for ten classes in CIFAR-10 order:
// truck->automobile, bird->airplane, deer->horse, cat<->dog, identity elsewhere.
Matrix cifar10_pairflip_transition();

// First n_first rows vs the rest (after a seeded shuffle).
std::pair<NoisyDataset, NoisyDataset> split(const NoisyDataset& dataset, std::size_t n_first, std::uint64_t seed);

}  // namespace lconf::corpus
