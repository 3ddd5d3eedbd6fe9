// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmcd/segment.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <string>

#include "mmcd/error.hpp"

namespace mmcd {
namespace {

struct Neighbor {
  std::uint32_t id;
  std::uint32_t shared;  // boundary edges between the two regions
};

struct Region {
  std::uint32_t n = 1;
  std::uint32_t perimeter = 4;
  std::uint32_t min_h = 0, max_h = 0, min_w = 0, max_w = 0;
  bool alive = true;
  std::vector<Neighbor> neighbors;

  double bbox_perimeter() const {
    return 2.0 * static_cast<double>((max_h - min_h + 1) + (max_w - min_w + 1));
  }
};

class RegionMerger {
 public:
  RegionMerger(const Raster& img, const SegmentationConfig& cfg)
      : cfg_(cfg), channels_(img.channels), width_(img.width) {
    const std::size_t count = img.pixel_count();
    regions_.resize(count);
    parent_.resize(count);
    std::iota(parent_.begin(), parent_.end(), 0u);
    sum_.assign(img.data.begin(), img.data.end());
    sumsq_.resize(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i) sumsq_[i] = img.data[i] * img.data[i];
    for (std::size_t h = 0; h < img.height; ++h) {
      for (std::size_t w = 0; w < img.width; ++w) {
        Region& r = regions_[h * width_ + w];
        r.min_h = r.max_h = static_cast<std::uint32_t>(h);
        r.min_w = r.max_w = static_cast<std::uint32_t>(w);
        const auto id = [&](std::size_t hh, std::size_t ww) {
          return static_cast<std::uint32_t>(hh * width_ + ww);
        };
        if (h > 0) r.neighbors.push_back({id(h - 1, w), 1});
        if (w > 0) r.neighbors.push_back({id(h, w - 1), 1});
        if (w + 1 < img.width) r.neighbors.push_back({id(h, w + 1), 1});
        if (h + 1 < img.height) r.neighbors.push_back({id(h + 1, w), 1});
      }
    }
  }

  void run_main_loop(std::vector<MergeRecord>* log) {
    std::mt19937_64 rng(cfg_.rng_seed);
    std::vector<std::uint32_t> order;
    std::vector<char> touched(regions_.size());
    for (;;) {
      order.clear();
      for (std::uint32_t i = 0; i < regions_.size(); ++i)
        if (regions_[i].alive) order.push_back(i);
      std::shuffle(order.begin(), order.end(), rng);
      std::fill(touched.begin(), touched.end(), 0);
      bool merged_any = false;
      for (std::uint32_t a : order) {
        if (!regions_[a].alive || touched[a]) continue;
        const auto [b, cost_ab] = best_neighbor(a, touched);
        if (b == kNone || !(cost_ab < cfg_.merge_threshold)) continue;
        const auto [c, cost_bc] = best_neighbor(b, touched);
        if (c != a) continue;
        const std::uint32_t kept = merge(a, b);
        const std::uint32_t absorbed = kept == a ? b : a;
        touched[a] = touched[b] = 1;
        merged_any = true;
        if (log != nullptr) log->push_back({kept, absorbed, cost_ab});
      }
      if (!merged_any) break;
    }
  }

  void absorb_small_objects() {
    if (cfg_.min_object_size <= 1) return;
    bool changed = true;
    while (changed) {
      changed = false;
      std::vector<std::uint32_t> small;
      std::size_t alive_count = 0;
      for (std::uint32_t i = 0; i < regions_.size(); ++i) {
        if (!regions_[i].alive) continue;
        ++alive_count;
        if (regions_[i].n < cfg_.min_object_size) small.push_back(i);
      }
      if (alive_count <= 1) return;
      std::sort(small.begin(), small.end(), [&](std::uint32_t x, std::uint32_t y) {
        return regions_[x].n != regions_[y].n ? regions_[x].n < regions_[y].n : x < y;
      });
      for (std::uint32_t a : small) {
        if (!regions_[a].alive || regions_[a].n >= cfg_.min_object_size) continue;
        std::uint32_t best = kNone;
        double best_d = std::numeric_limits<double>::infinity();
        for (const Neighbor& nb : regions_[a].neighbors) {
          const double d = mean_distance(a, nb.id);
          if (d < best_d || (d == best_d && nb.id < best)) {
            best_d = d;
            best = nb.id;
          }
        }
        if (best == kNone) continue;
        merge(a, best);
        changed = true;
      }
    }
  }

  std::vector<std::uint32_t> root_labels() {
    std::vector<std::uint32_t> out(regions_.size());
    for (std::uint32_t i = 0; i < regions_.size(); ++i) out[i] = find(i);
    return out;
  }

 private:
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Population standard deviation from running sums.
  static double sigma(double sum, double sumsq, double n) {
    const double mean = sum / n;
    return std::sqrt(std::max(0.0, sumsq / n - mean * mean));
  }

  double merge_cost(std::uint32_t a, std::uint32_t b, std::uint32_t shared) const {
    const Region& ra = regions_[a];
    const Region& rb = regions_[b];
    const double na = ra.n, nb = rb.n, nm = na + nb;
    const double* sa = &sum_[a * channels_];
    const double* sb = &sum_[b * channels_];
    const double* qa = &sumsq_[a * channels_];
    const double* qb = &sumsq_[b * channels_];
    double h_channel = 0.0;
    for (std::size_t c = 0; c < channels_; ++c) {
      h_channel += nm * sigma(sa[c] + sb[c], qa[c] + qb[c], nm) -
                   (na * sigma(sa[c], qa[c], na) + nb * sigma(sb[c], qb[c], nb));
    }
    const double lm = static_cast<double>(ra.perimeter) + rb.perimeter - 2.0 * shared;
    const double bm =
        2.0 * ((std::max(ra.max_h, rb.max_h) - std::min(ra.min_h, rb.min_h) + 1) +
               (std::max(ra.max_w, rb.max_w) - std::min(ra.min_w, rb.min_w) + 1));
    const double h_compact =
        nm * lm / std::sqrt(nm) - (na * ra.perimeter / std::sqrt(na) + nb * rb.perimeter / std::sqrt(nb));
    const double h_smooth = nm * lm / bm - (na * ra.perimeter / ra.bbox_perimeter() +
                                            nb * rb.perimeter / rb.bbox_perimeter());
    const double h_spatial = cfg_.w_compactness * h_compact + (1.0 - cfg_.w_compactness) * h_smooth;
    return cfg_.w_channel * h_channel + cfg_.w_spatial() * h_spatial;
  }

  std::pair<std::uint32_t, double> best_neighbor(std::uint32_t a, const std::vector<char>& touched) const {
    std::uint32_t best = kNone;
    double best_f = std::numeric_limits<double>::infinity();
    for (const Neighbor& nb : regions_[a].neighbors) {
      if (touched[nb.id]) continue;
      const double f = merge_cost(a, nb.id, nb.shared);
      if (f < best_f || (f == best_f && nb.id < best)) {
        best_f = f;
        best = nb.id;
      }
    }
    return {best, best_f};
  }

  double mean_distance(std::uint32_t a, std::uint32_t b) const {
    double d = 0.0;
    for (std::size_t c = 0; c < channels_; ++c) {
      const double diff = sum_[a * channels_ + c] / regions_[a].n - sum_[b * channels_ + c] / regions_[b].n;
      d += diff * diff;
    }
    return d;
  }

  static void add_shared(std::vector<Neighbor>& list, std::uint32_t id, std::uint32_t shared) {
    for (Neighbor& nb : list) {
      if (nb.id == id) {
        nb.shared += shared;
        return;
      }
    }
    list.push_back({id, shared});
  }

  static std::uint32_t take(std::vector<Neighbor>& list, std::uint32_t id) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i].id == id) {
        const std::uint32_t shared = list[i].shared;
        list.erase(list.begin() + static_cast<std::ptrdiff_t>(i));
        return shared;
      }
    }
    return 0;
  }

  // Returns the id that survives.
  std::uint32_t merge(std::uint32_t a, std::uint32_t b) {
    std::uint32_t keep = a, gone = b;
    if (regions_[b].n > regions_[a].n || (regions_[b].n == regions_[a].n && b < a)) std::swap(keep, gone);
    Region& rk = regions_[keep];
    Region& rg = regions_[gone];
    const std::uint32_t shared = take(rk.neighbors, gone);
    take(rg.neighbors, keep);
    for (std::size_t c = 0; c < channels_; ++c) {
      sum_[keep * channels_ + c] += sum_[gone * channels_ + c];
      sumsq_[keep * channels_ + c] += sumsq_[gone * channels_ + c];
    }
    rk.perimeter = rk.perimeter + rg.perimeter - 2 * shared;
    rk.n += rg.n;
    rk.min_h = std::min(rk.min_h, rg.min_h);
    rk.max_h = std::max(rk.max_h, rg.max_h);
    rk.min_w = std::min(rk.min_w, rg.min_w);
    rk.max_w = std::max(rk.max_w, rg.max_w);
    for (const Neighbor& nb : rg.neighbors) {
      const std::uint32_t s = take(regions_[nb.id].neighbors, gone);
      add_shared(regions_[nb.id].neighbors, keep, s);
      add_shared(rk.neighbors, nb.id, nb.shared);
    }
    rg.neighbors.clear();
    rg.neighbors.shrink_to_fit();
    rg.alive = false;
    parent_[gone] = keep;
    return keep;
  }

  const SegmentationConfig& cfg_;
  std::size_t channels_;
  std::size_t width_;
  std::vector<Region> regions_;
  std::vector<std::uint32_t> parent_;
  std::vector<double> sum_;
  std::vector<double> sumsq_;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

constexpr char kSegMagic[7] = {'M', 'M', 'R', 'S', 'E', 'G', '1'};

}  // namespace

void SegmentationConfig::validate() const {
  if (!(merge_threshold > 0.0)) fail(ErrorCode::InvalidConfig, "merge_threshold must be > 0");
  if (!(w_channel >= 0.0 && w_channel <= 1.0)) fail(ErrorCode::InvalidConfig, "w_channel must lie in [0,1]");
  if (!(w_compactness >= 0.0 && w_compactness <= 1.0)) {
    fail(ErrorCode::InvalidConfig, "w_compactness must lie in [0,1]");
  }
}

SegmentationMap segmentation_from_labels(std::size_t height, std::size_t width,
                                         const std::vector<std::uint32_t>& labels) {
  if (height == 0 || width == 0) fail(ErrorCode::EmptyRaster, "segmentation has a zero dimension");
  if (labels.size() != height * width) fail(ErrorCode::ShapeMismatch, "label count does not match H*W");
  SegmentationMap seg;
  seg.height = height;
  seg.width = width;
  seg.labels.resize(labels.size());
  std::vector<std::uint32_t> remap;
  std::vector<std::uint32_t> lookup;
  for (std::size_t p = 0; p < labels.size(); ++p) {
    const std::uint32_t raw = labels[p];
    if (raw >= lookup.size()) lookup.resize(static_cast<std::size_t>(raw) + 1, UINT32_MAX);
    if (lookup[raw] == UINT32_MAX) {
      lookup[raw] = static_cast<std::uint32_t>(seg.object_pixels.size());
      seg.object_pixels.emplace_back();
    }
    const std::uint32_t id = lookup[raw];
    seg.labels[p] = id;
    seg.object_pixels[id].push_back(
        {static_cast<std::uint32_t>(p / width), static_cast<std::uint32_t>(p % width)});
  }
  seg.n_objects = seg.object_pixels.size();
  return seg;
}

bool is_valid_partition(const SegmentationMap& seg) {
  if (seg.labels.size() != seg.height * seg.width || seg.object_pixels.size() != seg.n_objects) return false;
  std::vector<std::size_t> counts(seg.n_objects, 0);
  for (std::uint32_t l : seg.labels) {
    if (l >= seg.n_objects) return false;
    ++counts[l];
  }
  for (std::size_t i = 0; i < seg.n_objects; ++i) {
    if (counts[i] == 0 || counts[i] != seg.object_pixels[i].size()) return false;
  }
  // BFS per object under 4-adjacency.
  std::vector<char> seen(seg.labels.size(), 0);
  for (std::size_t i = 0; i < seg.n_objects; ++i) {
    const PixelCoord start = seg.object_pixels[i].front();
    if (seg.label(start.h, start.w) != i) return false;
    std::queue<std::size_t> q;
    q.push(start.h * seg.width + start.w);
    seen[q.front()] = 1;
    std::size_t visited = 0;
    while (!q.empty()) {
      const std::size_t p = q.front();
      q.pop();
      ++visited;
      const std::size_t h = p / seg.width, w = p % seg.width;
      const auto visit = [&](std::size_t np) {
        if (!seen[np] && seg.labels[np] == i) {
          seen[np] = 1;
          q.push(np);
        }
      };
      if (h > 0) visit(p - seg.width);
      if (h + 1 < seg.height) visit(p + seg.width);
      if (w > 0) visit(p - 1);
      if (w + 1 < seg.width) visit(p + 1);
    }
    if (visited != counts[i]) return false;
  }
  return true;
}

SegmentationMap fnea_segment(const Raster& stacked, const SegmentationConfig& cfg,
                             std::vector<MergeRecord>* merge_log) {
  if (stacked.height == 0 || stacked.width == 0 || stacked.channels == 0 || stacked.data.empty()) {
    fail(ErrorCode::EmptyRaster, "cannot segment an empty raster");
  }
  validate(stacked);
  cfg.validate();
  RegionMerger merger(stacked, cfg);
  merger.run_main_loop(merge_log);
  merger.absorb_small_objects();
  return segmentation_from_labels(stacked.height, stacked.width, merger.root_labels());
}

std::vector<double> object_mean(const Raster& img, const SegmentationMap& seg, std::size_t object) {
  if (object >= seg.n_objects) {
    fail(ErrorCode::BadObjectId, "object " + std::to_string(object) + " of " + std::to_string(seg.n_objects));
  }
  if (img.height != seg.height || img.width != seg.width) {
    fail(ErrorCode::ShapeMismatch, "raster and segmentation sizes differ");
  }
  std::vector<double> mean(img.channels, 0.0);
  for (const PixelCoord& p : seg.object_pixels[object]) {
    const auto px = img.pixel(p.h, p.w);
    for (std::size_t c = 0; c < img.channels; ++c) mean[c] += px[c];
  }
  const double n = static_cast<double>(seg.object_pixels[object].size());
  for (double& m : mean) m /= n;
  return mean;
}

void save_segmentation(const SegmentationMap& seg, const std::filesystem::path& path) {
  std::vector<std::uint8_t> out(std::begin(kSegMagic), std::end(kSegMagic));
  const auto put = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  put(static_cast<std::uint32_t>(seg.height));
  put(static_cast<std::uint32_t>(seg.width));
  for (std::uint32_t l : seg.labels) put(l);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) fail(ErrorCode::IoFailure, "short write to " + path.string());
}

SegmentationMap load_segmentation(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() < 15 || std::memcmp(bytes.data(), kSegMagic, 7) != 0) {
    fail(ErrorCode::MalformedHeader, "not an MMRSEG1 file: " + path.string());
  }
  const auto get = [&](std::size_t off) {
    return static_cast<std::uint32_t>(bytes[off]) | static_cast<std::uint32_t>(bytes[off + 1]) << 8 |
           static_cast<std::uint32_t>(bytes[off + 2]) << 16 | static_cast<std::uint32_t>(bytes[off + 3]) << 24;
  };
  const std::size_t h = get(7), w = get(11);
  if (bytes.size() - 15 != 4 * h * w) fail(ErrorCode::DimensionMismatch, "label payload size mismatch");
  std::vector<std::uint32_t> labels(h * w);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = get(15 + 4 * i);
  return segmentation_from_labels(h, w, labels);
}

}  // namespace mmcd
