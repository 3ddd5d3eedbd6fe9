// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmcd/change.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mmcd/error.hpp"
#include "mmcd/simd.hpp"

namespace mmcd {
namespace {

void check_aligned(std::span<const StructuralGraph> gx, std::span<const StructuralGraph> gy,
                   const SegmentationMap& seg) {
  if (gx.size() != seg.n_objects || gy.size() != seg.n_objects) {
    fail(ErrorCode::ObjectCountMismatch, "graph lists (" + std::to_string(gx.size()) + ", " +
                                             std::to_string(gy.size()) + ") vs " +
                                             std::to_string(seg.n_objects) + " objects");
  }
  for (std::size_t i = 0; i < seg.n_objects; ++i) {
    if (gx[i].object_id != i || gy[i].object_id != i) {
      fail(ErrorCode::ObjectCountMismatch, "graph lists are not ordered by object id");
    }
  }
}

// Exact comparison of a^2 / da against b^2 / db for nonnegative integers,
// via 192-bit cross products.
struct U192 {
  unsigned __int128 high;  // bits 64..191
  std::uint64_t low;       // bits 0..63
  auto operator<=>(const U192&) const = default;
};

U192 square_times(std::uint64_t a, std::uint64_t d) {
  const unsigned __int128 sq = static_cast<unsigned __int128>(a) * a;
  const auto sq_lo = static_cast<std::uint64_t>(sq);
  const auto sq_hi = static_cast<std::uint64_t>(sq >> 64);
  const unsigned __int128 lo_prod = static_cast<unsigned __int128>(sq_lo) * d;
  const unsigned __int128 hi_prod = static_cast<unsigned __int128>(sq_hi) * d;
  return {hi_prod + (lo_prod >> 64), static_cast<std::uint64_t>(lo_prod)};
}

ChangeMap blank_like(const ChangeMap& cm) {
  ChangeMap out;
  out.height = cm.height;
  out.width = cm.width;
  out.mask.assign(cm.mask.size(), 0);
  return out;
}

void check_kernel(const MorphKernel& k) {
  if (k.side == 0 || k.side % 2 == 0) fail(ErrorCode::InvalidConfig, "structuring element side must be odd");
}

// Separable square-window reduction: `any` = dilation, `all` = erosion.
// Out-of-frame samples read as false, except that erosion under
// MorphBorder::Ignore skips them.
ChangeMap window_reduce(const ChangeMap& cm, const MorphKernel& k, bool any) {
  check_kernel(k);
  if (cm.mask.size() != cm.height * cm.width) fail(ErrorCode::ShapeMismatch, "change map payload size");
  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(k.side / 2);
  const auto h = static_cast<std::ptrdiff_t>(cm.height);
  const auto w = static_cast<std::ptrdiff_t>(cm.width);
  const bool outside = !any && k.border == MorphBorder::Ignore;
  const auto reduce_line = [&](auto get, std::ptrdiff_t len, auto set) {
    for (std::ptrdiff_t i = 0; i < len; ++i) {
      bool acc = !any;
      for (std::ptrdiff_t d = -r; d <= r; ++d) {
        const std::ptrdiff_t j = i + d;
        const bool v = j >= 0 && j < len ? get(j) : outside;
        acc = any ? (acc || v) : (acc && v);
      }
      set(i, acc);
    }
  };
  ChangeMap tmp = blank_like(cm);
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    reduce_line([&](std::ptrdiff_t x) { return cm.mask[y * w + x] != 0; }, w,
                [&](std::ptrdiff_t x, bool v) { tmp.mask[y * w + x] = v; });
  }
  ChangeMap out = blank_like(cm);
  for (std::ptrdiff_t x = 0; x < w; ++x) {
    reduce_line([&](std::ptrdiff_t y) { return tmp.mask[y * w + x] != 0; }, h,
                [&](std::ptrdiff_t y, bool v) { out.mask[y * w + x] = v; });
  }
  return out;
}

}  // namespace

std::size_t ChangeMap::count() const {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](std::uint8_t v) { return v != 0; }));
}

DifferenceImage paint_objects(const SegmentationMap& seg, std::span<const double> per_object,
                              DifferenceKind kind) {
  if (per_object.size() != seg.n_objects) fail(ErrorCode::ObjectCountMismatch, "one value per object expected");
  DifferenceImage di;
  di.height = seg.height;
  di.width = seg.width;
  di.kind = kind;
  di.intensity.resize(seg.labels.size());
  for (std::size_t p = 0; p < seg.labels.size(); ++p) di.intensity[p] = per_object[seg.labels[p]];
  return di;
}

double local_object_distance(const Matrix& fx, const Matrix& fy) {
  if (fx.rows() != fy.rows() || fx.cols() != fy.cols()) {
    fail(ErrorCode::ShapeMismatch, "local distance needs equally shaped feature matrices");
  }
  if (fx.rows() == 0) fail(ErrorCode::ShapeMismatch, "local distance of an empty object");
  const auto& k = simd::active();
  double total = 0.0;
  for (std::size_t j = 0; j < fx.rows(); ++j) total += k.l1_distance(fx.row(j).data(), fy.row(j).data(), fx.cols());
  return total / static_cast<double>(fx.rows());
}

DifferenceImage local_difference_image(const SrGcaeModel& edge_model, std::span<const StructuralGraph> graphs_x,
                                       std::span<const StructuralGraph> graphs_y, const SegmentationMap& seg) {
  if (edge_model.objective != Objective::Edge) fail(ErrorCode::WrongHead, "local difference needs the edge model");
  check_aligned(graphs_x, graphs_y, seg);
  std::vector<double> d(seg.n_objects);
  for (std::size_t i = 0; i < seg.n_objects; ++i) {
    d[i] = local_object_distance(encode(edge_model, graphs_x[i], ImageSide::X),
                                 encode(edge_model, graphs_y[i], ImageSide::Y));
  }
  return paint_objects(seg, d, DifferenceKind::Local);
}

std::vector<double> object_signature(const Matrix& f) {
  if (f.rows() == 0) fail(ErrorCode::ShapeMismatch, "signature of an empty object");
  std::vector<double> sig(f.cols(), 0.0);
  for (std::size_t j = 0; j < f.rows(); ++j)
    for (std::size_t c = 0; c < f.cols(); ++c) sig[c] += std::abs(f(j, c));
  for (double& s : sig) s /= static_cast<double>(f.rows());
  return sig;
}

std::vector<std::size_t> knn_similar_objects(std::span<const std::vector<double>> signatures, std::size_t object,
                                             std::size_t k) {
  const std::size_t n = signatures.size();
  if (object >= n) fail(ErrorCode::BadObjectId, "object " + std::to_string(object) + " of " + std::to_string(n));
  if (k >= n) {
    fail(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " needs more than " + std::to_string(n) + " objects");
  }
  const auto& kern = simd::active();
  const auto& si = signatures[object];
  std::vector<std::pair<double, std::size_t>> cand;
  cand.reserve(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == object) continue;
    if (signatures[j].size() != si.size()) fail(ErrorCode::ShapeMismatch, "signature widths differ");
    cand.emplace_back(kern.squared_distance(si.data(), signatures[j].data(), si.size()), j);
  }
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = cand[i].second;
  return out;
}

double nonlocal_directed_distance(std::span<const std::vector<double>> search, std::span<const std::vector<double>> other,
                                  std::size_t object, std::span<const std::size_t> neighbors, double phi2) {
  if (search.size() != other.size()) fail(ErrorCode::ObjectCountMismatch, "signature lists differ in length");
  if (object >= search.size()) fail(ErrorCode::BadObjectId, "object id out of range");
  if (neighbors.empty()) fail(ErrorCode::BadNeighbor, "empty neighbour list");
  const auto& si = search[object];
  const auto& oi = other[object];
  double total = 0.0;
  for (std::size_t k : neighbors) {
    if (k >= search.size()) fail(ErrorCode::BadNeighbor, "neighbour id " + std::to_string(k) + " out of range");
    const auto& sk = search[k];
    const auto& ok = other[k];
    if (sk.size() != si.size() || ok.size() != oi.size() || si.size() != oi.size()) {
      fail(ErrorCode::ShapeMismatch, "signature widths differ");
    }
    for (std::size_t c = 0; c < si.size(); ++c) {
      total += std::abs(std::exp(-phi2 * std::abs(si[c] - sk[c])) - std::exp(-phi2 * std::abs(oi[c] - ok[c])));
    }
  }
  return total / static_cast<double>(neighbors.size());
}

DifferenceImage nonlocal_difference_from_signatures(std::span<const std::vector<double>> sx,
                                                    std::span<const std::vector<double>> sy,
                                                    const SegmentationMap& seg, const NonlocalConfig& cfg) {
  if (sx.size() != seg.n_objects || sy.size() != seg.n_objects) {
    fail(ErrorCode::ObjectCountMismatch, "signature lists do not match the object count");
  }
  if (!(cfg.phi2 > 0.0)) fail(ErrorCode::InvalidConfig, "phi2 must be > 0");
  if (cfg.k_similar == 0) fail(ErrorCode::InvalidConfig, "k_similar must be >= 1");
  std::vector<double> d(seg.n_objects);
  for (std::size_t i = 0; i < seg.n_objects; ++i) {
    const auto nx = knn_similar_objects(sx, i, cfg.k_similar);
    const auto ny = knn_similar_objects(sy, i, cfg.k_similar);
    d[i] = nonlocal_directed_distance(sx, sy, i, nx, cfg.phi2) + nonlocal_directed_distance(sy, sx, i, ny, cfg.phi2);
  }
  return paint_objects(seg, d, DifferenceKind::Nonlocal);
}

DifferenceImage nonlocal_difference_image(const SrGcaeModel& vertex_model, std::span<const StructuralGraph> graphs_x,
                                          std::span<const StructuralGraph> graphs_y, const SegmentationMap& seg,
                                          const NonlocalConfig& cfg) {
  if (vertex_model.objective != Objective::Vertex) {
    fail(ErrorCode::WrongHead, "nonlocal difference needs the vertex model");
  }
  check_aligned(graphs_x, graphs_y, seg);
  std::vector<std::vector<double>> sx, sy;
  sx.reserve(seg.n_objects);
  sy.reserve(seg.n_objects);
  for (std::size_t i = 0; i < seg.n_objects; ++i) {
    sx.push_back(object_signature(encode(vertex_model, graphs_x[i], ImageSide::X)));
    sy.push_back(object_signature(encode(vertex_model, graphs_y[i], ImageSide::Y)));
  }
  return nonlocal_difference_from_signatures(sx, sy, seg, cfg);
}

double intensity_variance(const DifferenceImage& di) {
  if (di.intensity.empty()) return 0.0;
  const double n = static_cast<double>(di.intensity.size());
  const double mean = std::accumulate(di.intensity.begin(), di.intensity.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : di.intensity) ss += (v - mean) * (v - mean);
  return ss / n;
}

DifferenceImage adaptive_fuse(const DifferenceImage& local, const DifferenceImage& nonlocal) {
  if (local.height != nonlocal.height || local.width != nonlocal.width ||
      local.intensity.size() != nonlocal.intensity.size()) {
    fail(ErrorCode::ShapeMismatch, "difference images differ in shape");
  }
  const double vl = intensity_variance(local);
  const double vn = intensity_variance(nonlocal);
  if (!(vl + vn > 0.0)) fail(ErrorCode::BothVariancesZero, "both difference images are constant");
  DifferenceImage out;
  out.height = local.height;
  out.width = local.width;
  out.kind = DifferenceKind::Fused;
  out.intensity.resize(local.intensity.size());
  const double wl = vl / (vl + vn);
  const double wn = 1.0 - wl;
  for (std::size_t p = 0; p < out.intensity.size(); ++p) {
    const double a = local.intensity[p], b = nonlocal.intensity[p];
    out.intensity[p] = std::clamp(wl * a + wn * b, std::min(a, b), std::max(a, b));
  }
  return out;
}

std::vector<std::uint32_t> quantize_intensities(const DifferenceImage& di, std::size_t bins) {
  if (bins < 2) fail(ErrorCode::InvalidConfig, "Otsu needs at least two bins");
  if (di.intensity.empty()) fail(ErrorCode::ConstantImage, "empty difference image");
  const auto [lo_it, hi_it] = std::minmax_element(di.intensity.begin(), di.intensity.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) fail(ErrorCode::ConstantImage, "difference image is constant");
  const double range = hi - lo;
  const double b = static_cast<double>(bins);
  std::vector<std::uint32_t> q(di.intensity.size());
  for (std::size_t p = 0; p < q.size(); ++p) {
    const double s = (di.intensity[p] - lo) / range;
    const double c = std::ceil(s * b) - 1.0;
    q[p] = static_cast<std::uint32_t>(std::clamp(c, 0.0, b - 1.0));
  }
  return q;
}

OtsuResult otsu_threshold(const DifferenceImage& di, std::size_t bins) {
  const auto q = quantize_intensities(di, bins);
  std::vector<std::uint64_t> hist(bins, 0);
  for (std::uint32_t b : q) ++hist[b];
  std::uint64_t n = q.size();
  std::uint64_t total_sum = 0;
  for (std::size_t b = 0; b < bins; ++b) total_sum += hist[b] * b;

  // Between-class variance is proportional to (s0*n1 - s1*n0)^2 / (n0*n1).
  bool have = false;
  std::size_t best_t = 0;
  std::uint64_t best_num = 0, best_den = 1;
  std::uint64_t n0 = 0, s0 = 0;
  for (std::size_t t = 0; t + 1 < bins; ++t) {
    n0 += hist[t];
    s0 += hist[t] * t;
    const std::uint64_t n1 = n - n0;
    if (n0 == 0 || n1 == 0) continue;
    const std::uint64_t s1 = total_sum - s0;
    // mu1 >= mu0, so s1*n0 >= s0*n1.
    const std::uint64_t num = s1 * n0 - s0 * n1;
    const std::uint64_t den = n0 * n1;
    if (!have || square_times(num, best_den) > square_times(best_num, den)) {
      have = true;
      best_t = t;
      best_num = num;
      best_den = den;
    }
  }
  const auto [lo_it, hi_it] = std::minmax_element(di.intensity.begin(), di.intensity.end());
  OtsuResult r;
  r.bin = best_t;
  r.threshold = *lo_it + (*hi_it - *lo_it) * static_cast<double>(best_t + 1) / static_cast<double>(bins);
  r.map.height = di.height;
  r.map.width = di.width;
  r.map.mask.resize(q.size());
  for (std::size_t p = 0; p < q.size(); ++p) r.map.mask[p] = q[p] > best_t;
  return r;
}

ChangeMap dilate(const ChangeMap& cm, const MorphKernel& k) { return window_reduce(cm, k, true); }
ChangeMap erode(const ChangeMap& cm, const MorphKernel& k) { return window_reduce(cm, k, false); }
ChangeMap morph_close(const ChangeMap& cm, const MorphKernel& k) { return erode(dilate(cm, k), k); }
ChangeMap morph_open(const ChangeMap& cm, const MorphKernel& k) { return dilate(erode(cm, k), k); }

ChangeMap morph_refine(const ChangeMap& cm, const MorphKernel& kc, const MorphKernel& ko) {
  return morph_open(morph_close(cm, kc), ko);
}

Raster to_raster(const DifferenceImage& di) {
  Raster r(di.height, di.width, 1, Modality::Generic);
  r.data = di.intensity;
  return r;
}

DifferenceImage difference_from_raster(const Raster& r, DifferenceKind kind) {
  if (r.channels != 1) fail(ErrorCode::ShapeMismatch, "difference images are single-channel");
  validate(r);
  DifferenceImage di;
  di.height = r.height;
  di.width = r.width;
  di.kind = kind;
  di.intensity = r.data;
  return di;
}

Raster to_raster(const ChangeMap& cm) {
  Raster r(cm.height, cm.width, 1, Modality::Generic);
  for (std::size_t p = 0; p < cm.mask.size(); ++p) r.data[p] = cm.mask[p] ? 255.0 : 0.0;
  return r;
}

ChangeMap change_map_from_raster(const Raster& r) {
  if (r.channels != 1) fail(ErrorCode::ShapeMismatch, "change maps are single-channel");
  ChangeMap cm;
  cm.height = r.height;
  cm.width = r.width;
  cm.mask.resize(r.data.size());
  for (std::size_t p = 0; p < r.data.size(); ++p) cm.mask[p] = r.data[p] > 0.0;
  return cm;
}

}  // namespace mmcd
