#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rmgd {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// One mini-batch (or a whole split) of labelled samples.
struct Batch {
  Matrix features;          // n x input_dim
  std::vector<int> labels;  // n entries in [0, num_classes)

  std::size_t size() const noexcept { return labels.size(); }
  friend bool operator==(const Batch&, const Batch&) = default;
};

}  // namespace rmgd
