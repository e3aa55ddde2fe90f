#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace lconf {

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;  // recursive residual at exit
  bool converged = false;
};

// Unpreconditioned conjugate gradient for a symmetric positive definite
// operator. `apply(p, out)` must write M p into out. Starts from x as given
// and stops once ||r|| <= tol * ||b||.
template <typename Apply>
CgResult conjugate_gradient(const Apply& apply, const Eigen::VectorXd& b, Eigen::VectorXd& x, double tol,
                            int max_iter) {
  CgResult result;
  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    x.setZero();
    result.converged = true;
    return result;
  }
  Eigen::VectorXd q(b.size());
  apply(x, q);
  Eigen::VectorXd r = b - q;
  Eigen::VectorXd p = r;
  double rr = r.squaredNorm();
  const double stop = tol * b_norm;

  while (std::sqrt(rr) > stop && result.iterations < max_iter) {
    apply(p, q);
    const double alpha = rr / p.dot(q);
    x.noalias() += alpha * p;
    r.noalias() -= alpha * q;
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
    ++result.iterations;
  }
  result.relative_residual = std::sqrt(rr) / b_norm;
  result.converged = std::sqrt(rr) <= stop;
  return result;
}

}  // namespace lconf
