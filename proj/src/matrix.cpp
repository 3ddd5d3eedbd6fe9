// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmcd/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mmcd/error.hpp"
#include "mmcd/simd.hpp"

namespace mmcd {
namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    fail(ErrorCode::ShapeMismatch, "matrix payload does not match " + std::to_string(rows) + "x" +
                                       std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) fail(ErrorCode::ShapeMismatch, "matmul " + shape(a) + " * " + shape(b));
  Matrix c(a.rows(), b.cols());
  simd::active().gemm_nn(a.data(), b.data(), c.data(), a.rows(), b.cols(), a.cols());
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    fail(ErrorCode::ShapeMismatch, "matmul_tn " + shape(a) + "^T * " + shape(b));
  }
  Matrix c(a.cols(), b.cols());
  simd::active().gemm_tn(a.data(), b.data(), c.data(), a.cols(), b.cols(), a.rows());
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    fail(ErrorCode::ShapeMismatch, "matmul_nt " + shape(a) + " * " + shape(b) + "^T");
  }
  Matrix c(a.rows(), b.rows());
  simd::active().gemm_nt(a.data(), b.data(), c.data(), a.rows(), b.rows(), a.cols());
  return c;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(ErrorCode::ShapeMismatch, "compare " + shape(a) + " vs " + shape(b));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace mmcd
