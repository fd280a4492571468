#include "pushforward/pairwise.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "pushforward/errors.hpp"

namespace pf {

namespace {

inline double sq_dist(const Tensor& x, std::size_t i, const Tensor& y, std::size_t j,
                      std::size_t d) {
  double s = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    double diff = x(i, c) - y(j, c);
    s += diff * diff;
  }
  return s;
}

inline double kernel_eval(KernelSpec k, double r2) {
  switch (k.type) {
    case KernelSpec::Type::Gaussian:
      return std::exp(-r2 / (2.0 * k.sigma * k.sigma));
    case KernelSpec::Type::NegDistance:
      return -std::sqrt(r2);
    case KernelSpec::Type::Distance:
      return std::sqrt(r2);
  }
  return 0.0;
}

double row_sum(const Tensor& x, std::size_t i, const Tensor& y, KernelSpec kernel,
               bool exclude_diagonal, std::size_t d) {
  double s = 0.0;
  const std::size_t m = y.rows();
  for (std::size_t j = 0; j < m; ++j) {
    if (exclude_diagonal && i == j) continue;
    s += kernel_eval(kernel, sq_dist(x, i, y, j, d));
  }
  return s;
}

}  // namespace

double pairwise_kernel_sum(const Tensor& x, const Tensor& y, KernelSpec kernel,
                           bool exclude_diagonal, Exec exec) {
  if (x.cols() != y.cols()) throw ShapeError("pairwise_kernel_sum: dimension mismatch");
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> rows(n);
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
      rows[i] = row_sum(x, i, y, kernel, exclude_diagonal, d);
  } else {
    for (std::size_t i = 0; i < n; ++i)
      rows[i] = row_sum(x, i, y, kernel, exclude_diagonal, d);
  }
  double total = 0.0;
  for (double r : rows) total += r;  // fixed order
  return total;
}

namespace {

// d/dx_p k(x_p, y_j) for each coordinate, accumulated with `coeff`.
void grad_row(const Tensor& x, std::size_t p, const Tensor& y, KernelSpec kernel,
              double coeff, bool exclude_diag, std::size_t d, double* out) {
  const std::size_t m = y.rows();
  for (std::size_t j = 0; j < m; ++j) {
    if (exclude_diag && p == j) continue;
    double r2 = sq_dist(x, p, y, j, d);
    switch (kernel.type) {
      case KernelSpec::Type::Gaussian: {
        double k = std::exp(-r2 / (2.0 * kernel.sigma * kernel.sigma));
        double f = -k / (kernel.sigma * kernel.sigma);
        for (std::size_t c = 0; c < d; ++c) out[c] += coeff * f * (x(p, c) - y(j, c));
        break;
      }
      case KernelSpec::Type::NegDistance: {
        double r = std::sqrt(r2);
        if (r == 0.0) break;  // kink: subgradient 0
        for (std::size_t c = 0; c < d; ++c) out[c] += coeff * (-(x(p, c) - y(j, c)) / r);
        break;
      }
      case KernelSpec::Type::Distance: {
        double r = std::sqrt(r2);
        if (r == 0.0) break;
        for (std::size_t c = 0; c < d; ++c) out[c] += coeff * ((x(p, c) - y(j, c)) / r);
        break;
      }
    }
  }
}

}  // namespace

void pairwise_kernel_grad_x(const Tensor& x, const Tensor& y, KernelSpec kernel,
                            PairwiseGradTerms terms, Tensor& grad, Exec exec) {
  if (!grad.same_shape(x)) throw ShapeError("pairwise_kernel_grad_x: grad shape mismatch");
  const std::size_t n = x.rows(), d = x.cols();
  auto body = [&](std::size_t p) {
    double* out = grad.data.data() + p * d;
    if (terms.self_coeff != 0.0)
      grad_row(x, p, x, kernel, terms.self_coeff, terms.exclude_self_diagonal, d, out);
    if (terms.cross_coeff != 0.0) grad_row(x, p, y, kernel, terms.cross_coeff, false, d, out);
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(n); ++p) body(p);
  } else {
    for (std::size_t p = 0; p < n; ++p) body(p);
  }
}

double sum_abs_within_1d(const Tensor& x) {
  if (x.cols() != 1) throw ShapeError("sum_abs_within_1d: expects [n,1]");
  std::vector<double> s(x.data);
  std::sort(s.begin(), s.end());
  // sum_{i<j} (s_j - s_i), doubled for ordered pairs
  double total = 0.0, prefix = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    total += static_cast<double>(j) * s[j] - prefix;
    prefix += s[j];
  }
  return 2.0 * total;
}

double sum_abs_cross_1d(const Tensor& x, const Tensor& y) {
  if (x.cols() != 1 || y.cols() != 1) throw ShapeError("sum_abs_cross_1d: expects [n,1]");
  std::vector<double> sx(x.data), sy(y.data);
  std::sort(sx.begin(), sx.end());
  std::sort(sy.begin(), sy.end());
  std::vector<double> prefix(sx.size() + 1, 0.0);
  for (std::size_t i = 0; i < sx.size(); ++i) prefix[i + 1] = prefix[i] + sx[i];
  const double total_x = prefix.back();
  const double n = static_cast<double>(sx.size());
  double total = 0.0;
  for (double v : sy) {
    // count of x <= v
    std::size_t c = std::upper_bound(sx.begin(), sx.end(), v) - sx.begin();
    double below = prefix[c];
    total += static_cast<double>(c) * v - below + (total_x - below) - (n - c) * v;
  }
  return total;
}

Exec default_exec() {
#ifdef _OPENMP
  return Exec::Parallel;
#else
  return Exec::Serial;
#endif
}

}  // namespace pf
