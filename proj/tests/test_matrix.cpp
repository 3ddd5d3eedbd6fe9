// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "mmcd/error.hpp"
#include "mmcd/matrix.hpp"
#include "test_util.hpp"

namespace {

using namespace mmcd;
using mmcd::testing::random_matrix;

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

double max_diff(const Matrix& m, const Eigen::MatrixXd& e) {
  EXPECT_EQ(m.rows(), std::size_t(e.rows()));
  EXPECT_EQ(m.cols(), std::size_t(e.cols()));
  return (to_eigen(m) - e).cwiseAbs().maxCoeff();
}

TEST(Matrix, ConstructionAndAccess) {
  Matrix m(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(m(1, 0), 4.0);
  EXPECT_EQ(m.row(1)[2], 6.0);
  EXPECT_EQ(m.transposed()(2, 1), 6.0);
  EXPECT_EQ(Matrix::identity(3)(1, 1), 1.0);
  EXPECT_EQ(Matrix::identity(3)(0, 1), 0.0);
  EXPECT_THROW(Matrix(2, 2, {1, 2, 3}), Error);
}

TEST(Matrix, ProductsMatchEigen) {
  std::mt19937_64 rng(11);
  for (std::size_t m : {1u, 3u, 8u, 13u}) {
    for (std::size_t n : {1u, 4u, 17u}) {
      for (std::size_t k : {1u, 5u, 32u}) {
        const Matrix a = random_matrix(m, k, rng), b = random_matrix(k, n, rng);
        EXPECT_LT(max_diff(matmul(a, b), to_eigen(a) * to_eigen(b)), 1e-12);
        const Matrix at = random_matrix(k, m, rng);
        EXPECT_LT(max_diff(matmul_tn(at, b), to_eigen(at).transpose() * to_eigen(b)), 1e-12);
        const Matrix bt = random_matrix(n, k, rng);
        EXPECT_LT(max_diff(matmul_nt(a, bt), to_eigen(a) * to_eigen(bt).transpose()), 1e-12);
      }
    }
  }
}

TEST(Matrix, ShapeMismatch) {
  try {
    matmul(Matrix(2, 3), Matrix(2, 3));
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
  EXPECT_THROW(matmul_tn(Matrix(2, 3), Matrix(3, 3)), Error);
  EXPECT_THROW(matmul_nt(Matrix(2, 3), Matrix(3, 2)), Error);
  EXPECT_THROW(max_abs_diff(Matrix(1, 2), Matrix(2, 1)), Error);
}

TEST(Matrix, MaxAbsDiff) {
  EXPECT_EQ(max_abs_diff(Matrix(2, 2, {1, 2, 3, 4}), Matrix(2, 2, {1, 2.5, 2, 4})), 1.0);
}

}  // namespace
