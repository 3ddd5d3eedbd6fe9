// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mmcd/change.hpp"
#include "mmcd/raster.hpp"

namespace mmcd {

// A seeded Voronoi scene rendered twice: an optical-style pre image and a
// SAR-style post image in which a contiguous group of regions has switched
// land-cover class.
struct SyntheticSpec {
  std::size_t height = 256;
  std::size_t width = 256;
  std::size_t n_regions = 300;
  std::size_t n_classes = 5;
  std::size_t optical_channels = 3;
  double change_fraction = 0.1;  // strictly inside (0,1)
  double optical_gamma = 0.7;    // pre = reflectance^gamma + noise
  double noise_level = 0.03;     // std-dev of the additive optical noise
  double sar_contrast = 4.0;     // post mean = exp(sar_contrast * (1 - level))
  double speckle_looks = 4.0;    // gamma speckle with unit mean
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct SyntheticPair {
  Raster pre;
  Raster post;
  ChangeMap truth;
  std::vector<std::uint32_t> regions;       // H*W Voronoi cell ids
  std::vector<std::uint32_t> pre_classes;   // class per region before the change
  std::vector<std::uint32_t> post_classes;  // class per region after the change
};

SyntheticPair generate_synthetic_pair(const SyntheticSpec& spec);

}  // namespace mmcd
