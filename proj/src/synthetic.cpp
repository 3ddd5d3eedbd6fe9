// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmcd/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "mmcd/error.hpp"

namespace mmcd {
namespace {

std::vector<std::uint32_t> voronoi_cells(const SyntheticSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uh(0.0, static_cast<double>(spec.height));
  std::uniform_real_distribution<double> uw(0.0, static_cast<double>(spec.width));
  std::vector<std::pair<double, double>> sites(spec.n_regions);
  for (auto& s : sites) s = {uh(rng), uw(rng)};
  std::vector<std::uint32_t> cells(spec.height * spec.width);
  for (std::size_t h = 0; h < spec.height; ++h) {
    for (std::size_t w = 0; w < spec.width; ++w) {
      const double ph = static_cast<double>(h) + 0.5, pw = static_cast<double>(w) + 0.5;
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t best_id = 0;
      for (std::size_t r = 0; r < sites.size(); ++r) {
        const double dh = ph - sites[r].first, dw = pw - sites[r].second;
        const double d = dh * dh + dw * dw;
        if (d < best) {
          best = d;
          best_id = static_cast<std::uint32_t>(r);
        }
      }
      cells[h * spec.width + w] = best_id;
    }
  }
  return cells;
}

std::vector<std::set<std::uint32_t>> cell_adjacency(const SyntheticSpec& spec,
                                                    const std::vector<std::uint32_t>& cells) {
  std::vector<std::set<std::uint32_t>> adj(spec.n_regions);
  for (std::size_t h = 0; h < spec.height; ++h) {
    for (std::size_t w = 0; w < spec.width; ++w) {
      const auto a = cells[h * spec.width + w];
      if (w + 1 < spec.width) {
        const auto b = cells[h * spec.width + w + 1];
        if (a != b) adj[a].insert(b), adj[b].insert(a);
      }
      if (h + 1 < spec.height) {
        const auto b = cells[(h + 1) * spec.width + w];
        if (a != b) adj[a].insert(b), adj[b].insert(a);
      }
    }
  }
  return adj;
}

// Breadth-first growth from each start cell in turn; a cell is skipped when
// adding it would overshoot the upper tolerance.
std::vector<bool> grow_changed_set(const SyntheticSpec& spec, const std::vector<std::size_t>& area,
                                   const std::vector<std::set<std::uint32_t>>& adj, std::mt19937_64& rng) {
  const double target = spec.change_fraction * static_cast<double>(spec.height * spec.width);
  const double lo = 0.8 * target, hi = 1.2 * target;
  std::vector<std::uint32_t> starts(spec.n_regions);
  std::iota(starts.begin(), starts.end(), 0u);
  std::shuffle(starts.begin(), starts.end(), rng);
  for (const auto start : starts) {
    std::vector<bool> chosen(spec.n_regions, false), seen(spec.n_regions, false);
    std::deque<std::uint32_t> queue{start};
    seen[start] = true;
    double total = 0.0;
    while (!queue.empty() && total < target) {
      const auto r = queue.front();
      queue.pop_front();
      if (total + static_cast<double>(area[r]) > hi) continue;
      chosen[r] = true;
      total += static_cast<double>(area[r]);
      for (const auto n : adj[r]) {
        if (!seen[n]) {
          seen[n] = true;
          queue.push_back(n);
        }
      }
    }
    if (total >= lo && total <= hi) return chosen;
  }
  fail(ErrorCode::ChangeFractionUnreachable,
       "no contiguous region group covers the requested change fraction within 20%");
}

}  // namespace

void SyntheticSpec::validate() const {
  if (height == 0 || width == 0) fail(ErrorCode::InvalidConfig, "synthetic scene needs positive size");
  if (n_regions < 2 || n_regions > height * width) fail(ErrorCode::InvalidConfig, "n_regions must lie in [2, H*W]");
  if (n_classes < 2) fail(ErrorCode::InvalidConfig, "n_classes must be >= 2");
  if (optical_channels == 0) fail(ErrorCode::InvalidConfig, "optical_channels must be >= 1");
  if (!(change_fraction > 0.0 && change_fraction < 1.0)) {
    fail(ErrorCode::InvalidConfig, "change_fraction must lie strictly inside (0,1)");
  }
  if (!(optical_gamma > 0.0)) fail(ErrorCode::InvalidConfig, "optical_gamma must be > 0");
  if (!(noise_level >= 0.0)) fail(ErrorCode::InvalidConfig, "noise_level must be >= 0");
  if (!(sar_contrast > 0.0)) fail(ErrorCode::InvalidConfig, "sar_contrast must be > 0");
  if (!(speckle_looks > 0.0)) fail(ErrorCode::InvalidConfig, "speckle_looks must be > 0");
}

SyntheticPair generate_synthetic_pair(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.rng_seed);
  SyntheticPair out;
  out.regions = voronoi_cells(spec, rng);

  std::vector<std::size_t> area(spec.n_regions, 0);
  for (const auto c : out.regions) ++area[c];

  // Class k sits at level (k + 0.5) / K; optical channels jitter around it.
  const std::size_t k_cls = spec.n_classes;
  std::vector<double> level(k_cls);
  std::vector<double> reflectance(k_cls * spec.optical_channels);
  std::uniform_real_distribution<double> jitter(-0.15, 0.15);
  for (std::size_t k = 0; k < k_cls; ++k) {
    level[k] = (static_cast<double>(k) + 0.5) / static_cast<double>(k_cls);
    for (std::size_t c = 0; c < spec.optical_channels; ++c) {
      reflectance[k * spec.optical_channels + c] = std::clamp(level[k] + jitter(rng), 0.02, 0.98);
    }
  }

  std::uniform_int_distribution<std::uint32_t> pick_class(0, static_cast<std::uint32_t>(k_cls - 1));
  out.pre_classes.resize(spec.n_regions);
  for (auto& c : out.pre_classes) c = pick_class(rng);

  const auto changed = grow_changed_set(spec, area, cell_adjacency(spec, out.regions), rng);
  const std::size_t min_gap = std::max<std::size_t>(1, (k_cls + 2) / 3);
  out.post_classes = out.pre_classes;
  for (std::size_t r = 0; r < spec.n_regions; ++r) {
    if (!changed[r]) continue;
    std::vector<std::uint32_t> options;
    for (std::uint32_t k = 0; k < k_cls; ++k) {
      const auto old = out.pre_classes[r];
      if ((k > old ? k - old : old - k) >= min_gap) options.push_back(k);
    }
    std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
    out.post_classes[r] = options[pick(rng)];
  }

  const std::size_t n_px = spec.height * spec.width;
  out.pre = Raster(spec.height, spec.width, spec.optical_channels, Modality::Optical);
  out.post = Raster(spec.height, spec.width, 1, Modality::Sar);
  out.truth.height = spec.height;
  out.truth.width = spec.width;
  out.truth.mask.assign(n_px, 0);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::gamma_distribution<double> speckle(spec.speckle_looks, 1.0 / spec.speckle_looks);
  for (std::size_t p = 0; p < n_px; ++p) {
    const auto r = out.regions[p];
    const auto kpre = out.pre_classes[r];
    for (std::size_t c = 0; c < spec.optical_channels; ++c) {
      const double v = std::pow(reflectance[kpre * spec.optical_channels + c], spec.optical_gamma);
      out.pre.data[p * spec.optical_channels + c] = std::clamp(v + spec.noise_level * noise(rng), 0.0, 1.0);
    }
    const double mean = std::exp(spec.sar_contrast * (1.0 - level[out.post_classes[r]]));
    out.post.data[p] = mean * speckle(rng);
    out.truth.mask[p] = changed[r] ? 1 : 0;
  }
  return out;
}

}  // namespace mmcd
