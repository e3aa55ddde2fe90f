#pragma once

#include <filesystem>

#include "lconf/core.hpp"

namespace lconf::reduce {

struct PcaModel {
  Vector mean;                // d
  RowMatrix components;       // m x d, orthonormal rows
  Vector explained_variance;  // m, descending, 1/(N-1) normalization
};

inline std::size_t default_target_dim(std::size_t d) { return std::min<std::size_t>(64, d); }

// Top-m principal directions. Uses the d x d covariance, or the N x N Gram
// matrix of centered rows when N < d. Each component is signed so that its
// largest-magnitude entry is positive.
PcaModel pca_fit(const FeatureMatrix& features, std::size_t m);

// (x - mean) projected onto the components: N x m.
FeatureMatrix pca_transform(const PcaModel& model, const FeatureMatrix& features);

// Maps reduced coordinates back to the original space.
RowMatrix pca_inverse_transform(const PcaModel& model, const RowMatrix& reduced);

// <stem>.lcf holds the components, <stem>.json the mean and variances.
void save_pca(const PcaModel& model, const std::filesystem::path& stem);
PcaModel load_pca(const std::filesystem::path& stem);

}  // namespace lconf::reduce
