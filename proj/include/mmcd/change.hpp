// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mmcd/graphs.hpp"
#include "mmcd/matrix.hpp"
#include "mmcd/raster.hpp"
#include "mmcd/segment.hpp"
#include "mmcd/srgcae.hpp"

namespace mmcd {

enum class DifferenceKind : std::uint8_t { Local, Nonlocal, Fused };

struct DifferenceImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> intensity;  // H*W, row-major, finite and >= 0
  DifferenceKind kind = DifferenceKind::Fused;

  double at(std::size_t h, std::size_t w) const { return intensity[h * width + w]; }
};

struct ChangeMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> mask;  // 1 = changed

  bool at(std::size_t h, std::size_t w) const { return mask[h * width + w] != 0; }
  std::size_t count() const;
  bool operator==(const ChangeMap&) const = default;
};

struct NonlocalConfig {
  std::size_t k_similar = 50;
  double phi2 = 1.0;
};

// Square structuring element of odd side length.
// How erosion treats window positions outside the frame. Dilation always
// reads them as unchanged.
enum class MorphBorder : std::uint8_t {
  Ignore,     // erosion skips them, so closing never clears a true pixel
  Unchanged,  // erosion reads them as unchanged, eating changes along the frame
};

struct MorphKernel {
  std::size_t side = 3;  // odd side of the square structuring element
  MorphBorder border = MorphBorder::Ignore;
};

// Paints one value per object onto the pixels of that object.
DifferenceImage paint_objects(const SegmentationMap& seg, std::span<const double> per_object,
                              DifferenceKind kind);

// (1/N) * sum_j ||F_x(j) - F_y(j)||_1
double local_object_distance(const Matrix& features_x, const Matrix& features_y);

DifferenceImage local_difference_image(const SrGcaeModel& edge_model,
                                       std::span<const StructuralGraph> graphs_x,
                                       std::span<const StructuralGraph> graphs_y,
                                       const SegmentationMap& seg);

// Per channel mean absolute value of the vertex representations.
std::vector<double> object_signature(const Matrix& features);

// The k objects (excluding `object`) nearest in Euclidean signature
// distance, ascending, ties broken by lower id.
std::vector<std::size_t> knn_similar_objects(std::span<const std::vector<double>> signatures,
                                             std::size_t object, std::size_t k);

// (1/K) sum_k sum_c | exp(-phi2 |s_i(c) - s_k(c)|) - exp(-phi2 |o_i(c) - o_k(c)|) |
// with s the search-image signatures and o the other image's.
double nonlocal_directed_distance(std::span<const std::vector<double>> search_signatures,
                                  std::span<const std::vector<double>> other_signatures,
                                  std::size_t object, std::span<const std::size_t> neighbors,
                                  double phi2);

// Nonlocal difference from precomputed signatures of both images.
DifferenceImage nonlocal_difference_from_signatures(std::span<const std::vector<double>> signatures_x,
                                                    std::span<const std::vector<double>> signatures_y,
                                                    const SegmentationMap& seg, const NonlocalConfig& cfg);

DifferenceImage nonlocal_difference_image(const SrGcaeModel& vertex_model,
                                          std::span<const StructuralGraph> graphs_x,
                                          std::span<const StructuralGraph> graphs_y,
                                          const SegmentationMap& seg, const NonlocalConfig& cfg);

// Population variance of all intensities.
double intensity_variance(const DifferenceImage& di);

// Variance-weighted pixelwise average of the two difference images.
DifferenceImage adaptive_fuse(const DifferenceImage& local, const DifferenceImage& nonlocal);

struct OtsuResult {
  double threshold = 0.0;  // pixels strictly above are changed
  std::size_t bin = 0;     // last histogram bin of the unchanged class
  ChangeMap map;
};

// Min-max scaling, quantization into `bins` half-open-below bins
// ((b/B, (b+1)/B], value 0 in bin 0), and exact integer maximization of the
// between-class variance. Ties resolve to the lowest bin.
OtsuResult otsu_threshold(const DifferenceImage& di, std::size_t bins = 256);

// Histogram bin index used by otsu_threshold, exposed for tests.
std::vector<std::uint32_t> quantize_intensities(const DifferenceImage& di, std::size_t bins);

// Binary dilation / erosion with a square window. Out-of-frame pixels count
// as unchanged for both operators.
ChangeMap dilate(const ChangeMap& cm, const MorphKernel& k);
ChangeMap erode(const ChangeMap& cm, const MorphKernel& k);
ChangeMap morph_close(const ChangeMap& cm, const MorphKernel& k);
ChangeMap morph_open(const ChangeMap& cm, const MorphKernel& k);
// Closing with kc followed by opening with ko.
ChangeMap morph_refine(const ChangeMap& cm, const MorphKernel& kc, const MorphKernel& ko);

// Single-channel MMR export of a difference image, PGM {0,255} of a map.
Raster to_raster(const DifferenceImage& di);
DifferenceImage difference_from_raster(const Raster& r, DifferenceKind kind = DifferenceKind::Fused);
Raster to_raster(const ChangeMap& cm);
ChangeMap change_map_from_raster(const Raster& r);

}  // namespace mmcd
