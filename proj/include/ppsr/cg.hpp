#pragma once

// Matrix-free conjugate gradient for symmetric positive definite operators.

#include <cmath>

#include "ppsr/operators.hpp"
#include "ppsr/volume.hpp"

namespace ppsr {

struct CgOptions {
  double tolerance = 1e-6;  // on ||A x - b|| / ||b||
  int max_iterations = 400;
};

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Solves A x = b starting from the current contents of x. The returned
/// residual is the true residual b - A x, recomputed on exit.
template <LinearOperator Op>
CgResult conjugate_gradient(const Op& A, const ImageVolume& b, ImageVolume& x, const CgOptions& opt = {}) {
  b.require_same_shape(x, "conjugate_gradient");
  CgResult result;
  const double b_norm = norm(b);
  if (b_norm == 0.0) {
    x *= 0.0;
    result.converged = true;
    return result;
  }

  ImageVolume r = b - A.apply(x);
  double rr = squared_norm(r);
  result.relative_residual = std::sqrt(rr) / b_norm;
  if (result.relative_residual <= opt.tolerance) {
    result.converged = true;
    return result;
  }

  ImageVolume p = r;
  while (result.iterations < opt.max_iterations) {
    const ImageVolume q = A.apply(p);
    const double pq = dot(p, q);
    if (!(pq > 0.0)) break;  // operator not positive definite along p, or breakdown
    const double step = rr / pq;
    x = elementwise_axpy(step, p, x);
    r = elementwise_axpy(-step, q, r);
    ++result.iterations;

    const double rr_next = squared_norm(r);
    if (std::sqrt(rr_next) / b_norm <= opt.tolerance) {
      // Recursive residual can drift; confirm against the true one.
      r = b - A.apply(x);
      rr = squared_norm(r);
      result.relative_residual = std::sqrt(rr) / b_norm;
      if (result.relative_residual <= opt.tolerance) {
        result.converged = true;
        return result;
      }
      p = r;
      continue;
    }
    p = elementwise_axpy(rr_next / rr, p, r);
    rr = rr_next;
  }
  result.relative_residual = norm(b - A.apply(x)) / b_norm;
  result.converged = result.relative_residual <= opt.tolerance;
  return result;
}

}  // namespace ppsr
