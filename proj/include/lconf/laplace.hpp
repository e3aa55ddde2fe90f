#pragma once

#include <span>
#include <vector>

#include "lconf/core.hpp"
#include "lconf/graph.hpp"

namespace lconf::laplace {

// Paper: (I - A_norm / (1 + mu)) Y = Y_noisy.
// Stationary: same operator, right-hand side scaled by mu / (1 + mu), which is
// exactly where the energy gradient vanishes. Both agree after row_normalize.
enum class RhsMode { Paper, Stationary };

struct SolverConfig {
  double mu = 1.0;
  double tol = 1e-8;
  int max_iter = 2000;
  RhsMode rhs_mode = RhsMode::Paper;

  void validate() const;
};

struct SolveStats {
  std::vector<int> iterations;   // per class column
  std::vector<double> residuals; // final relative residual per column, recomputed from scratch
};

struct SolveResult {
  LabelDistribution labels;  // raw, not row-normalized
  SolveStats stats;
};

struct NormalizeResult {
  LabelDistribution labels;
  std::size_t degenerate_rows = 0;
};

struct EstimateOptions {
  std::size_t k = 10;
  SolverConfig solver;
  graph::KnnOptions knn;
};

struct EstimateResult {
  ConfidenceVector confidence;
  SolveStats solve;
  std::size_t degenerate_rows = 0;
  double graph_seconds = 0.0;
  double solve_seconds = 0.0;
};

// Smoothness plus fidelity:
//   1/2 sum_ij A_ij |y_i / sqrt(D_i) - y_j / sqrt(D_j)|^2 + mu sum_i |y_i - t_i|^2
// with the unnormalized weights A. Its unique minimizer solves the stationary system.
double laplacian_energy(const SparseGraph& graph, const Matrix& refined, const Matrix& noisy_one_hot, double mu);

// Each class column is an independent CG solve; columns run in parallel.
// Throws ConvergenceError when a column misses tol within max_iter.
SolveResult solve_labels(const SparseGraph& graph, const Matrix& noisy_one_hot, const SolverConfig& config);

// Clamp negatives to zero, scale rows to sum 1. Rows whose clamped sum is
// <= 1e-12 become uniform and are counted.
NormalizeResult row_normalize(const Matrix& raw);

// w_i = Y[i, label_i]. The distribution must be row-stochastic.
ConfidenceVector extract_confidence(const LabelDistribution& refined, std::span<const int> noisy_labels);

// knn_adjacency -> normalize -> solve_labels -> row_normalize -> extract_confidence
EstimateResult estimate(const FeatureMatrix& features, std::span<const int> noisy_labels, int num_classes,
                        const EstimateOptions& options);

}  // namespace lconf::laplace
