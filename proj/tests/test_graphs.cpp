// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "mmcd/error.hpp"
#include "mmcd/graphs.hpp"
#include "test_util.hpp"

namespace {

using namespace mmcd;
using mmcd::testing::random_graph;
using mmcd::testing::random_matrix;
using mmcd::testing::random_raster;

Eigen::VectorXd symmetric_eigenvalues(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(e, Eigen::EigenvaluesOnly).eigenvalues();
}

TEST(GraphFromFeatures, KernelExamples) {
  const StructuralGraph g = graph_from_features(Matrix(2, 1, {0.0, 1.0}), 1.0);
  EXPECT_EQ(g.adjacency(0, 0), 1.0);
  EXPECT_NEAR(g.adjacency(0, 1), std::exp(-1.0), 1e-15);
  EXPECT_EQ(g.adjacency(1, 0), g.adjacency(0, 1));

  const StructuralGraph same = graph_from_features(Matrix(3, 2, 0.4), 5.0);
  for (double v : same.adjacency.values()) EXPECT_EQ(v, 1.0);

  std::mt19937_64 rng(1);
  const StructuralGraph wide = random_graph(6, 3, rng, 200.0);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_GT(wide.adjacency(i, j), 0.0);
}

TEST(GraphFromFeatures, SymmetricBoundedAndMonotoneInDistance) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix f = random_matrix(2 + trial % 9, 1 + trial % 4, rng);
    const StructuralGraph g = graph_from_features(f, 0.5 + trial * 0.3);
    const std::size_t n = g.n_vertices();
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(g.adjacency(i, i), 1.0);
      for (std::size_t j = 0; j < n; ++j) {
        EXPECT_EQ(g.adjacency(i, j), g.adjacency(j, i));
        EXPECT_GT(g.adjacency(i, j), 0.0);
        EXPECT_LE(g.adjacency(i, j), 1.0);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
          double dj = 0, dk = 0;
          for (std::size_t c = 0; c < f.cols(); ++c) {
            dj += (f(i, c) - f(j, c)) * (f(i, c) - f(j, c));
            dk += (f(i, c) - f(k, c)) * (f(i, c) - f(k, c));
          }
          if (dj < dk) {
            EXPECT_GE(g.adjacency(i, j), g.adjacency(i, k));
          }
        }
      }
    }
  }
}

TEST(Propagation, Examples) {
  const Matrix p = propagation_matrix(Matrix(2, 2, 1.0));
  for (double v : p.values()) EXPECT_NEAR(v, 0.5, 1e-15);
  const Matrix id = propagation_matrix(Matrix::identity(4));
  EXPECT_EQ(id, Matrix::identity(4));
}

// The eigenvalues of D^-1/2 A D^-1/2 lie in [-1, 1] for any non-negative
// symmetric A with positive degrees. Row sums are not bounded by one: this
// adjacency gives a middle row sum of about 1.149.
TEST(Propagation, SpectrumWithinUnitInterval) {
  const double eps = 1e-3;
  const Matrix a(3, 3, {1, 1, eps, 1, 1, 1, eps, 1, 1});
  const Matrix p = propagation_matrix(a);
  EXPECT_GT(p(1, 0) + p(1, 1) + p(1, 2), 1.1);
  const auto ev = symmetric_eigenvalues(p);
  EXPECT_LE(ev.cwiseAbs().maxCoeff(), 1.0 + 1e-9);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const StructuralGraph g = random_graph(2 + trial % 15, 1 + trial % 3, rng, 0.2 + trial * 0.1);
    const Matrix pg = propagation_matrix(g);
    for (std::size_t i = 0; i < pg.rows(); ++i)
      for (std::size_t j = 0; j < pg.cols(); ++j) EXPECT_EQ(pg(i, j), pg(j, i));
    const auto e = symmetric_eigenvalues(pg);
    EXPECT_GE(e.minCoeff(), -1.0 - 1e-9);
    EXPECT_LE(e.maxCoeff(), 1.0 + 1e-9);
  }
}

TEST(Laplacian, ExamplesAndSpectrum) {
  const StructuralGraph two = graph_from_features(Matrix(2, 1, 0.0), 1.0);
  const Matrix l = laplacian(two);
  EXPECT_NEAR(l(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(l(0, 1), -0.5, 1e-15);
  EXPECT_NEAR(l(1, 0), -0.5, 1e-15);
  EXPECT_NEAR(l(1, 1), 0.5, 1e-15);

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    const StructuralGraph g = random_graph(2 + trial % 12, 2, rng, 0.5 + trial * 0.2);
    const auto e = symmetric_eigenvalues(laplacian(g));
    EXPECT_GE(e.minCoeff(), -1e-9);
    EXPECT_LE(e.maxCoeff(), 2.0 + 1e-9);
    const Matrix lc = combinatorial_laplacian(g);
    for (std::size_t i = 0; i < lc.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < lc.cols(); ++j) s += lc(i, j);
      EXPECT_NEAR(s, 0.0, 1e-12);
    }
  }
}

TEST(StructuralGraph, FeaturesComeFromObjectPixels) {
  std::mt19937_64 rng(5);
  const Raster img = random_raster(10, 10, 2, rng);
  SegmentationConfig sc;
  sc.merge_threshold = 2.0;
  const SegmentationMap seg = fnea_segment(img, sc);
  GraphConfig gc;
  const auto graphs = build_all_graphs(img, seg, gc);
  ASSERT_EQ(graphs.size(), seg.n_objects);
  std::size_t total = 0;
  for (const auto& g : graphs) {
    EXPECT_FALSE(g.subsampled);
    EXPECT_EQ(g.n_vertices(), seg.object_pixels[g.object_id].size());
    total += g.n_vertices();
    for (std::size_t v = 0; v < g.n_vertices(); ++v) {
      const auto p = g.pixel_coords[v];
      EXPECT_EQ(seg.label(p.h, p.w), g.object_id);
      for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(g.vertex_features(v, c), img.at(p.h, p.w, c));
    }
  }
  EXPECT_EQ(total, 100u);
}

TEST(StructuralGraph, SubsamplingIsCappedAndDeterministic) {
  std::mt19937_64 rng(6);
  const Raster img = random_raster(20, 20, 1, rng);
  const SegmentationMap seg = segmentation_from_labels(20, 20, std::vector<std::uint32_t>(400, 0));
  GraphConfig gc;
  gc.max_vertices = 50;
  gc.rng_seed = 17;
  const StructuralGraph a = build_structural_graph(img, seg, 0, gc);
  const StructuralGraph b = build_structural_graph(img, seg, 0, gc);
  EXPECT_TRUE(a.subsampled);
  EXPECT_EQ(a.n_vertices(), 50u);
  EXPECT_EQ(a.vertex_features, b.vertex_features);
  ASSERT_EQ(a.pixel_coords.size(), b.pixel_coords.size());
  for (std::size_t i = 0; i < a.pixel_coords.size(); ++i) {
    EXPECT_EQ(a.pixel_coords[i].h, b.pixel_coords[i].h);
    EXPECT_EQ(a.pixel_coords[i].w, b.pixel_coords[i].w);
  }
  gc.rng_seed = 18;
  EXPECT_NE(build_structural_graph(img, seg, 0, gc).vertex_features, a.vertex_features);
}

TEST(StructuralGraph, Errors) {
  const Raster img(4, 4, 1);
  const SegmentationMap seg = segmentation_from_labels(4, 4, std::vector<std::uint32_t>(16, 0));
  GraphConfig gc;
  try {
    build_structural_graph(img, seg, 1, gc);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadObjectId);
  }
  EXPECT_THROW(build_structural_graph(Raster(3, 4, 1), seg, 0, gc), Error);
  gc.phi1 = 0.0;
  EXPECT_THROW(build_structural_graph(img, seg, 0, gc), Error);
}

}  // namespace
