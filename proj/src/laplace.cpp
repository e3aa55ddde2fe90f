#include "lconf/laplace.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <string>

#include "lconf/cg.hpp"

namespace lconf::laplace {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

void SolverConfig::validate() const {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw InputError("mu must be a positive finite number");
  if (!(tol > 0.0)) throw InputError("solver tolerance must be positive");
  if (max_iter < 1) throw InputError("max_iter must be >= 1");
}

double laplacian_energy(const SparseGraph& graph, const Matrix& refined, const Matrix& noisy_one_hot, double mu) {
  const auto n = static_cast<Eigen::Index>(graph.size());
  if (refined.rows() != n || noisy_one_hot.rows() != n || refined.cols() != noisy_one_hot.cols()) {
    throw InputError("laplacian_energy: dimension mismatch");
  }
  const SparseMatrix& a = graph.adjacency();
  const Vector& deg = graph.degrees();

  double smooth = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double si = std::sqrt(deg(i));
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) {
      const Eigen::Index j = it.col();
      smooth += it.value() * (refined.row(i) / si - refined.row(j) / std::sqrt(deg(j))).squaredNorm();
    }
  }
  const double fidelity = (refined - noisy_one_hot).squaredNorm();
  return 0.5 * smooth + mu * fidelity;
}

SolveResult solve_labels(const SparseGraph& graph, const Matrix& noisy_one_hot, const SolverConfig& config) {
  config.validate();
  const auto n = static_cast<Eigen::Index>(graph.size());
  if (noisy_one_hot.rows() != n) throw InputError("solve_labels: label matrix has wrong row count");

  const SparseMatrix& s = graph.normalized();
  const double alpha = 1.0 / (1.0 + config.mu);
  const double rhs_scale = config.rhs_mode == RhsMode::Paper ? 1.0 : config.mu / (1.0 + config.mu);
  const auto apply = [&s, alpha](const Vector& p, Vector& out) {
    out.noalias() = s * p;
    out = p - alpha * out;
  };

  const Eigen::Index classes = noisy_one_hot.cols();
  Matrix solution(n, classes);
  SolveStats stats;
  stats.iterations.assign(static_cast<std::size_t>(classes), 0);
  stats.residuals.assign(static_cast<std::size_t>(classes), 0.0);
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(classes));

#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index c = 0; c < classes; ++c) {
    try {
      const Vector b = rhs_scale * noisy_one_hot.col(c);
      Vector x = Vector::Zero(n);
      const CgResult r = conjugate_gradient(apply, b, x, config.tol, config.max_iter);
      Vector mx(n);
      apply(x, mx);
      const double b_norm = b.norm();
      const double true_residual = b_norm > 0.0 ? (b - mx).norm() / b_norm : 0.0;
      stats.iterations[static_cast<std::size_t>(c)] = r.iterations;
      stats.residuals[static_cast<std::size_t>(c)] = true_residual;
      if (!r.converged) {
        throw ConvergenceError("CG did not converge for class " + std::to_string(c) + " within " +
                                   std::to_string(config.max_iter) + " iterations",
                               r.relative_residual);
      }
      solution.col(c) = x;
    } catch (...) {
      failures[static_cast<std::size_t>(c)] = std::current_exception();
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return SolveResult{LabelDistribution(std::move(solution)), std::move(stats)};
}

NormalizeResult row_normalize(const Matrix& raw) {
  Matrix y = raw.cwiseMax(0.0);
  std::size_t degenerate = 0;
  const double uniform = y.cols() > 0 ? 1.0 / static_cast<double>(y.cols()) : 0.0;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const double sum = y.row(i).sum();
    if (sum <= 1e-12) {
      y.row(i).setConstant(uniform);
      ++degenerate;
    } else {
      y.row(i) /= sum;
    }
  }
  return NormalizeResult{LabelDistribution(std::move(y)), degenerate};
}

ConfidenceVector extract_confidence(const LabelDistribution& refined, std::span<const int> noisy_labels) {
  if (noisy_labels.size() != refined.n()) throw InputError("extract_confidence: label count mismatch");
  if (!refined.is_row_stochastic(1e-9)) throw InputError("extract_confidence: distribution is not row-normalized");
  check_labels(noisy_labels, refined.num_classes());
  std::vector<double> w(noisy_labels.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    // Row sums may exceed 1 by rounding; keep the entry inside [0, 1].
    w[i] = std::clamp(refined.matrix()(static_cast<Eigen::Index>(i), noisy_labels[i]), 0.0, 1.0);
  }
  return ConfidenceVector(std::move(w));
}

EstimateResult estimate(const FeatureMatrix& features, std::span<const int> noisy_labels, int num_classes,
                        const EstimateOptions& options) {
  options.solver.validate();
  if (noisy_labels.size() != features.n()) throw InputError("estimate: label count does not match features");
  const Matrix targets = one_hot(noisy_labels, num_classes);

  auto t0 = Clock::now();
  const SparseGraph g = graph::build(features, options.k, options.knn);
  const double graph_seconds = seconds_since(t0);

  t0 = Clock::now();
  SolveResult solved = solve_labels(g, targets, options.solver);
  NormalizeResult normalized = row_normalize(solved.labels.matrix());
  ConfidenceVector w = extract_confidence(normalized.labels, noisy_labels);
  const double solve_seconds = seconds_since(t0);

  return EstimateResult{std::move(w), std::move(solved.stats), normalized.degenerate_rows, graph_seconds,
                        solve_seconds};
}

}  // namespace lconf::laplace
