// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mmcd/matrix.hpp"
#include "mmcd/raster.hpp"
#include "mmcd/segment.hpp"

namespace mmcd {

struct GraphConfig {
  double phi1 = 1.0;              // Gaussian-kernel bandwidth on pixel distances
  std::size_t max_vertices = 256;  // larger objects are uniformly subsampled
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Fully connected graph over the pixels of one object. Vertex features are
// pixel channel vectors; A(m,n) = exp(-phi1 * ||v_m - v_n||_2).
struct StructuralGraph {
  std::uint32_t object_id = 0;
  Matrix vertex_features;  // N x C
  Matrix adjacency;        // N x N, symmetric, unit diagonal
  std::vector<PixelCoord> pixel_coords;
  bool subsampled = false;

  std::size_t n_vertices() const noexcept { return vertex_features.rows(); }
};

// Vertex subset for an object: every pixel when the object fits under the
// cap, otherwise a sorted uniform sample seeded by rng_seed ^ object id.
// Graphs of the same object in both images therefore share their vertices.
std::vector<PixelCoord> select_vertices(const SegmentationMap& seg, std::size_t object,
                                        const GraphConfig& cfg);

StructuralGraph build_structural_graph(const Raster& img, const SegmentationMap& seg,
                                       std::size_t object, const GraphConfig& cfg);

// Graph from explicit vertex features; adjacency from the Gaussian kernel.
StructuralGraph graph_from_features(Matrix features, double phi1);

std::vector<StructuralGraph> build_all_graphs(const Raster& img, const SegmentationMap& seg,
                                              const GraphConfig& cfg);

// D^{-1/2} A D^{-1/2} with D_ii = sum_j A_ij. A already carries the unit
// self-loop, so no identity is added.
Matrix propagation_matrix(const StructuralGraph& g);
Matrix propagation_matrix(const Matrix& adjacency);

// Normalized Laplacian I - D^{-1/2} A D^{-1/2}.
Matrix laplacian(const StructuralGraph& g);
// Combinatorial Laplacian D - A.
Matrix combinatorial_laplacian(const StructuralGraph& g);

}  // namespace mmcd
