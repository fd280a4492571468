#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "pushforward/errors.hpp"

namespace pf {

// Dense row-major tensor of doubles. Rank is dynamic but in practice
// everything here is a scalar [1,1], a row vector [1,m], or a matrix [n,m].
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s);
  Tensor(std::vector<std::size_t> s, std::vector<double> d);

  static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<std::size_t> s, double v);
  static Tensor scalar(double v) { return Tensor({1, 1}, {v}); }
  static Tensor row(std::vector<double> v);
  static Tensor column(std::vector<double> v);
  // n-by-m from row-major entries
  static Tensor matrix(std::size_t n, std::size_t m, std::vector<double> entries);

  std::size_t size() const { return data.size(); }
  bool is_scalar() const { return data.size() == 1; }
  std::size_t rank() const { return shape.size(); }

  std::size_t rows() const;
  std::size_t cols() const;

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  std::span<const double> row_span(std::size_t i) const {
    return std::span<const double>(data.data() + i * cols(), cols());
  }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool all_finite() const;

  void fill(double v);
};

std::size_t shape_product(const std::vector<std::size_t>& s);

// Throws ShapeError mentioning `where` if the shapes differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* where);

}  // namespace pf
