#pragma once

#include <cstddef>

#include "pushforward/tensor.hpp"

namespace pf {

// Kernels over sample pairs. Gaussian uses exp(-|x-y|^2 / (2 sigma^2)).
struct KernelSpec {
  enum class Type { Gaussian, NegDistance, Distance };
  Type type = Type::Gaussian;
  double sigma = 1.0;
};

enum class Exec { Serial, Parallel };

// Sum over all pairs (i, j) of k(x_i, y_j); x [n,d], y [m,d].
// `exclude_diagonal` skips i == j (only meaningful when x and y are the same
// array). The parallel path distributes rows; each row sum runs in fixed
// index order and the row totals are reduced serially, so Serial and
// Parallel are bitwise identical.
double pairwise_kernel_sum(const Tensor& x, const Tensor& y, KernelSpec kernel,
                           bool exclude_diagonal, Exec exec);

// grad[p] += coeff_xx * 2/denom_xx * sum_j d/dx_p k(x_p, x_j)
//          + coeff_xy / denom_xy * sum_j d/dx_p k(x_p, y_j)
// Used by the fused differentiable objectives; accumulates into `grad`
// ([n,d], preallocated). Diagonal handling as above for the xx term.
struct PairwiseGradTerms {
  double self_coeff = 0.0;   // multiplies sum_j d1 k(x_p, x_j)
  double cross_coeff = 0.0;  // multiplies sum_j d1 k(x_p, y_j)
  bool exclude_self_diagonal = false;
};
void pairwise_kernel_grad_x(const Tensor& x, const Tensor& y, KernelSpec kernel,
                            PairwiseGradTerms terms, Tensor& grad, Exec exec);

// O(n log n) 1-D distance sums via sorting and prefix sums; used as the
// default energy-distance path for d == 1 and cross-checked against the
// O(n^2) kernels in tests.
double sum_abs_within_1d(const Tensor& x);                    // sum_{i,j} |x_i - x_j|
double sum_abs_cross_1d(const Tensor& x, const Tensor& y);    // sum_{i,j} |x_i - y_j|

// Default execution mode; Parallel when OpenMP is compiled in.
Exec default_exec();

}  // namespace pf
