// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "mmcd/raster.hpp"

namespace mmcd {

struct SegmentationConfig {
  // Scale parameter: a merge is accepted only when its fusion cost f is
  // strictly below this value.
  double merge_threshold = 8.0;
  double w_channel = 0.9;  // spatial weight is 1 - w_channel
  double w_compactness = 0.5;
  std::size_t min_object_size = 10;
  std::uint64_t rng_seed = 0;

  double w_spatial() const noexcept { return 1.0 - w_channel; }
  void validate() const;
};

struct PixelCoord {
  std::uint32_t h = 0;
  std::uint32_t w = 0;
  bool operator==(const PixelCoord&) const = default;
};

// Dense partition of an H x W grid into 4-connected objects 0..n_objects-1.
struct SegmentationMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t n_objects = 0;
  std::vector<std::uint32_t> labels;                 // H*W, row-major
  std::vector<std::vector<PixelCoord>> object_pixels;  // raster order per object

  std::uint32_t label(std::size_t h, std::size_t w) const { return labels[h * width + w]; }
};

// Builds a SegmentationMap from arbitrary labels: ids are renumbered densely
// in order of first appearance (raster scan). Connectivity is not enforced.
SegmentationMap segmentation_from_labels(std::size_t height, std::size_t width,
                                         const std::vector<std::uint32_t>& labels);

// True when the map is a dense partition with non-empty, 4-connected objects.
bool is_valid_partition(const SegmentationMap& seg);

// One accepted merge from the main region-merging loop.
struct MergeRecord {
  std::uint32_t kept = 0;
  std::uint32_t absorbed = 0;
  double cost = 0.0;
};

// Region merging over the 4-adjacency graph of pixels with the Baatz-Schaepe
// fusion cost f = w_channel*h_channel + w_spatial*h_spatial and local mutual
// best fitting. Objects below min_object_size are folded into their most
// similar neighbour afterwards. When merge_log is given it receives every
// merge of the main loop (not the size cleanup).
SegmentationMap fnea_segment(const Raster& stacked, const SegmentationConfig& cfg,
                             std::vector<MergeRecord>* merge_log = nullptr);

std::vector<double> object_mean(const Raster& img, const SegmentationMap& seg, std::size_t object);

// "MMRSEG1" magic, H and W as u32 LE, then H*W u32 LE labels.
void save_segmentation(const SegmentationMap& seg, const std::filesystem::path& path);
SegmentationMap load_segmentation(const std::filesystem::path& path);

}  // namespace mmcd
