#include "pushforward/tensor.hpp"

#include <cmath>
#include <string>

namespace pf {

std::size_t shape_product(const std::vector<std::size_t>& s) {
  std::size_t p = 1;
  for (std::size_t d : s) p *= d;
  return p;
}

Tensor::Tensor(std::vector<std::size_t> s)
    : shape(std::move(s)), data(shape_product(shape), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (shape_product(shape) != data.size())
    throw ShapeError("Tensor: shape product " + std::to_string(shape_product(shape)) +
                     " does not match data length " + std::to_string(data.size()));
}

Tensor Tensor::full(std::vector<std::size_t> s, double v) {
  Tensor t(std::move(s));
  t.fill(v);
  return t;
}

Tensor Tensor::row(std::vector<double> v) {
  std::size_t m = v.size();
  return Tensor({1, m}, std::move(v));
}

Tensor Tensor::column(std::vector<double> v) {
  std::size_t n = v.size();
  return Tensor({n, 1}, std::move(v));
}

Tensor Tensor::matrix(std::size_t n, std::size_t m, std::vector<double> entries) {
  return Tensor({n, m}, std::move(entries));
}

std::size_t Tensor::rows() const {
  if (shape.empty()) return 0;
  return shape[0];
}

std::size_t Tensor::cols() const {
  if (shape.size() < 2) return shape.empty() ? 0 : 1;
  std::size_t c = 1;
  for (std::size_t k = 1; k < shape.size(); ++k) c *= shape[k];
  return c;
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::fill(double v) {
  for (double& x : data) x = v;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* where) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(where) + ": shape mismatch");
}

}  // namespace pf
