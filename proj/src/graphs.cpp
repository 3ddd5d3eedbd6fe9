// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmcd/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "mmcd/error.hpp"
#include "mmcd/simd.hpp"

namespace mmcd {

void GraphConfig::validate() const {
  if (!(phi1 > 0.0)) fail(ErrorCode::InvalidConfig, "graph phi1 must be > 0");
  if (max_vertices < 2) fail(ErrorCode::InvalidConfig, "graph max_vertices must be >= 2");
}

std::vector<PixelCoord> select_vertices(const SegmentationMap& seg, std::size_t object,
                                        const GraphConfig& cfg) {
  if (object >= seg.n_objects) {
    fail(ErrorCode::BadObjectId, "object " + std::to_string(object) + " of " + std::to_string(seg.n_objects));
  }
  const auto& pixels = seg.object_pixels[object];
  if (pixels.size() <= cfg.max_vertices) return pixels;
  std::mt19937_64 rng(cfg.rng_seed ^ static_cast<std::uint64_t>(object));
  std::vector<std::size_t> idx(pixels.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates: the first max_vertices slots form the sample.
  for (std::size_t i = 0; i < cfg.max_vertices; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(cfg.max_vertices);
  std::sort(idx.begin(), idx.end());
  std::vector<PixelCoord> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(pixels[i]);
  return out;
}

StructuralGraph graph_from_features(Matrix features, double phi1) {
  const std::size_t n = features.rows();
  const std::size_t c = features.cols();
  const auto& k = simd::active();
  StructuralGraph g;
  g.adjacency = Matrix(n, n);
  for (std::size_t m = 0; m < n; ++m) {
    g.adjacency(m, m) = 1.0;
    for (std::size_t q = m + 1; q < n; ++q) {
      const double d = std::sqrt(k.squared_distance(features.data() + m * c, features.data() + q * c, c));
      const double a = std::exp(-phi1 * d);
      g.adjacency(m, q) = a;
      g.adjacency(q, m) = a;
    }
  }
  g.vertex_features = std::move(features);
  return g;
}

StructuralGraph build_structural_graph(const Raster& img, const SegmentationMap& seg,
                                       std::size_t object, const GraphConfig& cfg) {
  cfg.validate();
  if (img.height != seg.height || img.width != seg.width) {
    fail(ErrorCode::ShapeMismatch, "raster and segmentation sizes differ");
  }
  auto coords = select_vertices(seg, object, cfg);
  Matrix features(coords.size(), img.channels);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const auto px = img.pixel(coords[i].h, coords[i].w);
    std::copy(px.begin(), px.end(), features.row(i).begin());
  }
  StructuralGraph g = graph_from_features(std::move(features), cfg.phi1);
  g.object_id = static_cast<std::uint32_t>(object);
  g.subsampled = coords.size() < seg.object_pixels[object].size();
  g.pixel_coords = std::move(coords);
  return g;
}

std::vector<StructuralGraph> build_all_graphs(const Raster& img, const SegmentationMap& seg,
                                              const GraphConfig& cfg) {
  std::vector<StructuralGraph> graphs;
  graphs.reserve(seg.n_objects);
  for (std::size_t i = 0; i < seg.n_objects; ++i) graphs.push_back(build_structural_graph(img, seg, i, cfg));
  return graphs;
}

Matrix propagation_matrix(const Matrix& a) {
  const std::size_t n = a.rows();
  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += a(i, j);
    inv_sqrt_deg[i] = 1.0 / std::sqrt(d);
  }
  Matrix p(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = inv_sqrt_deg[i] * a(i, j) * inv_sqrt_deg[j];
      p(i, j) = v;
      p(j, i) = v;
    }
  }
  return p;
}

Matrix propagation_matrix(const StructuralGraph& g) { return propagation_matrix(g.adjacency); }

Matrix laplacian(const StructuralGraph& g) {
  Matrix l = propagation_matrix(g);
  for (double& v : l.values()) v = -v;
  for (std::size_t i = 0; i < l.rows(); ++i) l(i, i) += 1.0;
  return l;
}

Matrix combinatorial_laplacian(const StructuralGraph& g) {
  const std::size_t n = g.n_vertices();
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      d += g.adjacency(i, j);
      l(i, j) = -g.adjacency(i, j);
    }
    l(i, i) += d;
  }
  return l;
}

}  // namespace mmcd
