// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <random>

#include "mmcd/change.hpp"
#include "mmcd/error.hpp"
#include "test_util.hpp"

namespace {

using namespace mmcd;
using boost::multiprecision::cpp_int;
using mmcd::testing::error_code_of;
using mmcd::testing::random_matrix;
using mmcd::testing::random_raster;

DifferenceImage make_di(std::size_t h, std::size_t w, std::vector<double> v) {
  DifferenceImage d;
  d.height = h;
  d.width = w;
  d.intensity = std::move(v);
  return d;
}

ChangeMap make_map(std::size_t h, std::size_t w, std::vector<std::uint8_t> m) {
  ChangeMap c;
  c.height = h;
  c.width = w;
  c.mask = std::move(m);
  return c;
}

ChangeMap random_mask(std::size_t h, std::size_t w, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution b(p);
  ChangeMap c = make_map(h, w, std::vector<std::uint8_t>(h * w));
  for (auto& v : c.mask) v = b(rng);
  return c;
}

// Segmentation, tied edge and vertex models and graphs of both images.
struct Scene {
  SegmentationMap seg;
  std::vector<StructuralGraph> gx, gy;
};

Scene make_scene(const Raster& x, const Raster& y) {
  SegmentationConfig sc;
  sc.merge_threshold = 2.0;
  sc.min_object_size = 4;
  Raster stacked(x.height, x.width, x.channels + y.channels);
  for (std::size_t h = 0; h < x.height; ++h) {
    for (std::size_t w = 0; w < x.width; ++w) {
      for (std::size_t c = 0; c < x.channels; ++c) stacked.at(h, w, c) = x.at(h, w, c);
      for (std::size_t c = 0; c < y.channels; ++c) stacked.at(h, w, x.channels + c) = y.at(h, w, c);
    }
  }
  Scene s;
  s.seg = fnea_segment(stacked, sc);
  GraphConfig gc;
  s.gx = build_all_graphs(x, s.seg, gc);
  s.gy = build_all_graphs(y, s.seg, gc);
  return s;
}

TEST(LocalDistance, UnitOffsetGivesFeatureWidth) {
  std::mt19937_64 rng(1);
  const Matrix fx = random_matrix(6, kFeatureWidth, rng);
  Matrix fy = fx;
  for (double& v : fy.values()) v += 1.0;
  EXPECT_NEAR(local_object_distance(fx, fy), 32.0, 1e-12);
  EXPECT_EQ(local_object_distance(fx, fx), 0.0);
  EXPECT_EQ(error_code_of([&] { local_object_distance(fx, Matrix(5, kFeatureWidth)); }), ErrorCode::ShapeMismatch);
}

TEST(LocalDifference, IdenticalImagesGiveZeroAndChangeStandsOut) {
  std::mt19937_64 rng(2);
  const Raster x = random_raster(12, 12, 2, rng);
  const SrGcaeModel edge = init_model(2, 2, Objective::Edge, 3, true);
  const Scene same = make_scene(x, x);
  const DifferenceImage zero = local_difference_image(edge, same.gx, same.gy, same.seg);
  for (double v : zero.intensity) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(zero.kind, DifferenceKind::Local);

  Raster y = x;
  const std::size_t target = same.seg.labels[0];
  for (const auto& p : same.seg.object_pixels[target]) {
    for (std::size_t c = 0; c < 2; ++c) y.at(p.h, p.w, c) = 1.0 - y.at(p.h, p.w, c);
  }
  std::vector<StructuralGraph> gy = build_all_graphs(y, same.seg, GraphConfig{});
  const DifferenceImage di = local_difference_image(edge, same.gx, gy, same.seg);
  std::vector<double> sorted = di.intensity;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  EXPECT_GT(di.at(0, 0), sorted[sorted.size() / 2]);
  for (std::size_t o = 0; o < same.seg.n_objects; ++o) {
    const auto& px = same.seg.object_pixels[o];
    for (const auto& p : px) EXPECT_EQ(di.at(p.h, p.w), di.at(px[0].h, px[0].w));
  }

  const SrGcaeModel vertex = init_model(2, 2, Objective::Vertex, 3, true);
  EXPECT_EQ(error_code_of([&] { local_difference_image(vertex, same.gx, same.gy, same.seg); }), ErrorCode::WrongHead);
  EXPECT_EQ(error_code_of([&] {
              local_difference_image(edge, std::span(same.gx).first(1), same.gy, same.seg);
            }),
            ErrorCode::ObjectCountMismatch);
}

TEST(Signature, Examples) {
  EXPECT_EQ(object_signature(Matrix(1, 3, {-1.5, 0.0, 2.0})), (std::vector<double>{1.5, 0.0, 2.0}));
  std::mt19937_64 rng(3);
  const Matrix f = random_matrix(4, 5, rng);
  Matrix twice(8, 5);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t c = 0; c < 5; ++c) twice(i, c) = f(i % 4, c);
  const auto a = object_signature(f), b = object_signature(twice);
  for (std::size_t c = 0; c < 5; ++c) EXPECT_NEAR(a[c], b[c], 1e-15);
}

TEST(Knn, ExamplesAndErrors) {
  const std::vector<std::vector<double>> s{{0}, {1}, {2}, {10}};
  EXPECT_EQ(knn_similar_objects(s, 0, 2), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(knn_similar_objects(s, 3, 3), (std::vector<std::size_t>{2, 1, 0}));
  EXPECT_EQ(knn_similar_objects(s, 1, 2), (std::vector<std::size_t>{0, 2}));  // tie to lower id
  EXPECT_EQ(error_code_of([&] { knn_similar_objects(s, 0, 4); }), ErrorCode::KTooLarge);
  EXPECT_EQ(error_code_of([&] { knn_similar_objects(s, 4, 1); }), ErrorCode::BadObjectId);

  std::mt19937_64 rng(4);
  std::vector<std::vector<double>> r(30);
  std::uniform_real_distribution<double> u(0, 1);
  for (auto& v : r) v = {u(rng), u(rng), u(rng)};
  for (std::size_t i = 0; i < r.size(); ++i) {
    const auto nn = knn_similar_objects(r, i, 7);
    ASSERT_EQ(nn.size(), 7u);
    EXPECT_EQ(std::count(nn.begin(), nn.end(), i), 0);
    const auto dist = [&](std::size_t j) {
      double d = 0;
      for (int c = 0; c < 3; ++c) d += (r[i][c] - r[j][c]) * (r[i][c] - r[j][c]);
      return d;
    };
    for (std::size_t a = 1; a < nn.size(); ++a) EXPECT_LE(dist(nn[a - 1]), dist(nn[a]));
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (j != i && std::find(nn.begin(), nn.end(), j) == nn.end()) {
        EXPECT_GE(dist(j), dist(nn.back()));
      }
    }
  }
}

TEST(NonlocalDistance, ExampleAndErrors) {
  const std::vector<std::vector<double>> sx{{0.0}, {0.0}}, sy{{0.0}, {1.0}};
  const std::vector<std::size_t> nb{1};
  EXPECT_NEAR(nonlocal_directed_distance(sx, sy, 0, nb, 1.0), 1.0 - std::exp(-1.0), 1e-15);
  EXPECT_EQ(nonlocal_directed_distance(sx, sx, 0, nb, 1.0), 0.0);
  const std::vector<std::size_t> bad{2};
  EXPECT_EQ(error_code_of([&] { nonlocal_directed_distance(sx, sy, 0, bad, 1.0); }), ErrorCode::BadNeighbor);
  EXPECT_EQ(error_code_of([&] { nonlocal_directed_distance(sx, sy, 0, {}, 1.0); }), ErrorCode::BadNeighbor);
}

TEST(NonlocalDifference, IdenticalImagesGiveZero) {
  std::mt19937_64 rng(5);
  const Raster x = random_raster(12, 12, 1, rng);
  const Scene s = make_scene(x, x);
  ASSERT_GE(s.seg.n_objects, 3u);
  const SrGcaeModel vertex = init_model(1, 1, Objective::Vertex, 8, true);
  NonlocalConfig nc;
  nc.k_similar = 2;
  const DifferenceImage di = nonlocal_difference_image(vertex, s.gx, s.gy, s.seg, nc);
  for (double v : di.intensity) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(di.kind, DifferenceKind::Nonlocal);
  const SrGcaeModel edge = init_model(1, 1, Objective::Edge, 8, true);
  EXPECT_EQ(error_code_of([&] { nonlocal_difference_image(edge, s.gx, s.gy, s.seg, nc); }), ErrorCode::WrongHead);
  nc.k_similar = s.seg.n_objects;
  EXPECT_EQ(error_code_of([&] { nonlocal_difference_image(vertex, s.gx, s.gy, s.seg, nc); }), ErrorCode::KTooLarge);
}

TEST(Fusion, VarianceAndContract) {
  EXPECT_EQ(intensity_variance(make_di(1, 2, {0.0, 2.0})), 1.0);

  const DifferenceImage a = make_di(1, 4, {0, 2, 4, 6}), b = make_di(1, 4, {6, 4, 2, 0});
  const DifferenceImage mean = adaptive_fuse(a, b);
  for (std::size_t p = 0; p < 4; ++p) EXPECT_EQ(mean.intensity[p], 3.0);

  const DifferenceImage flat = make_di(1, 4, {5, 5, 5, 5});
  EXPECT_EQ(adaptive_fuse(flat, a).intensity, a.intensity);
  EXPECT_EQ(adaptive_fuse(a, flat).intensity, a.intensity);
  EXPECT_EQ(error_code_of([&] { adaptive_fuse(flat, flat); }), ErrorCode::BothVariancesZero);
  EXPECT_EQ(error_code_of([&] { adaptive_fuse(a, make_di(2, 2, {0, 0, 0, 0})); }), ErrorCode::ShapeMismatch);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    DifferenceImage l = make_di(5, 5, std::vector<double>(25)), n = l;
    const double sl = u(rng) * 10.0, sn = u(rng);
    for (std::size_t p = 0; p < 25; ++p) l.intensity[p] = sl * u(rng), n.intensity[p] = sn * u(rng);
    const double vl = intensity_variance(l), vn = intensity_variance(n);
    const DifferenceImage f = adaptive_fuse(l, n);
    for (std::size_t p = 0; p < 25; ++p) {
      EXPECT_GE(f.intensity[p], std::min(l.intensity[p], n.intensity[p]));
      EXPECT_LE(f.intensity[p], std::max(l.intensity[p], n.intensity[p]));
      EXPECT_NEAR(f.intensity[p], (vl * l.intensity[p] + vn * n.intensity[p]) / (vl + vn), 1e-12);
    }
  }
}

// Exhaustive Otsu over the quantized histogram in exact rational arithmetic.
std::size_t otsu_oracle(const std::vector<std::uint32_t>& q, std::size_t bins) {
  std::vector<cpp_int> hist(bins, 0);
  for (auto b : q) hist[b] += 1;
  const cpp_int n = q.size();
  cpp_int total = 0;
  for (std::size_t b = 0; b < bins; ++b) total += hist[b] * b;
  cpp_int best_num = -1, best_den = 1;
  std::size_t best = 0;
  cpp_int n0 = 0, s0 = 0;
  for (std::size_t t = 0; t + 1 < bins; ++t) {
    n0 += hist[t];
    s0 += hist[t] * t;
    const cpp_int n1 = n - n0;
    if (n0 == 0 || n1 == 0) continue;
    // sigma_b^2 = (mu1 - mu0)^2 n0 n1 / n^2 with mu0 = s0/n0, mu1 = (total-s0)/n1.
    const cpp_int diff = (total - s0) * n0 - s0 * n1;
    const cpp_int num = diff * diff;
    const cpp_int den = n0 * n1;
    if (best_num < 0 || num * best_den > best_num * den) best_num = num, best_den = den, best = t;
  }
  return best;
}

TEST(Otsu, ExamplesAndErrors) {
  std::vector<double> v(200, 0.0);
  std::fill(v.begin() + 100, v.end(), 1.0);
  const OtsuResult r = otsu_threshold(make_di(10, 20, v));
  EXPECT_EQ(r.map.count(), 100u);
  for (std::size_t p = 0; p < 200; ++p) EXPECT_EQ(r.map.mask[p], p >= 100);
  EXPECT_GE(r.threshold, 0.0);
  EXPECT_LT(r.threshold, 1.0);
  EXPECT_EQ(error_code_of([] { otsu_threshold(make_di(2, 2, {3, 3, 3, 3})); }), ErrorCode::ConstantImage);
  EXPECT_EQ(error_code_of([] { otsu_threshold(make_di(1, 2, {0, 1}), 1); }), ErrorCode::InvalidConfig);
}

TEST(Otsu, QuantizationBins) {
  const auto q = quantize_intensities(make_di(1, 5, {0.0, 0.25, 0.26, 0.5, 1.0}), 4);
  EXPECT_EQ(q, (std::vector<std::uint32_t>{0, 0, 1, 1, 3}));
}

TEST(Otsu, MatchesExactOracleAndIsScaleInvariant) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t bins = std::vector<std::size_t>{2, 3, 16, 256}[trial % 4];
    DifferenceImage d = make_di(8, 8, std::vector<double>(64));
    const double split = u(rng);
    for (double& x : d.intensity) x = u(rng) < split ? u(rng) * 0.4 : 0.5 + u(rng);
    const OtsuResult r = otsu_threshold(d, bins);
    const auto q = quantize_intensities(d, bins);
    const std::size_t t = otsu_oracle(q, bins);
    EXPECT_EQ(r.bin, t);
    for (std::size_t p = 0; p < 64; ++p) EXPECT_EQ(r.map.mask[p], q[p] > t);

    DifferenceImage scaled = d;
    for (double& x : scaled.intensity) x *= 3.0;
    EXPECT_EQ(otsu_threshold(scaled, bins).map, r.map);
  }
}

// Definition-level window operators.
ChangeMap morph_oracle(const ChangeMap& m, std::size_t side, bool dilation, MorphBorder border) {
  ChangeMap out = m;
  const long r = long(side / 2);
  for (long h = 0; h < long(m.height); ++h) {
    for (long w = 0; w < long(m.width); ++w) {
      bool any = false, all = true;
      for (long dh = -r; dh <= r; ++dh) {
        for (long dw = -r; dw <= r; ++dw) {
          const long y = h + dh, x = w + dw;
          const bool inside = y >= 0 && x >= 0 && y < long(m.height) && x < long(m.width);
          if (!inside) {
            if (border == MorphBorder::Unchanged) all = false;
            continue;
          }
          const bool v = m.at(std::size_t(y), std::size_t(x));
          any = any || v;
          all = all && v;
        }
      }
      out.mask[std::size_t(h) * m.width + std::size_t(w)] = dilation ? any : all;
    }
  }
  return out;
}

TEST(Morphology, MatchesDefinitionOracle) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const ChangeMap m = random_mask(3 + trial % 13, 4 + trial % 9, 0.2 + 0.006 * trial, rng);
    for (MorphBorder border : {MorphBorder::Ignore, MorphBorder::Unchanged}) {
      const MorphKernel k{std::size_t(1 + 2 * (trial % 3)), border};
      EXPECT_EQ(dilate(m, k), morph_oracle(m, k.side, true, border));
      EXPECT_EQ(erode(m, k), morph_oracle(m, k.side, false, border));
      EXPECT_EQ(morph_close(m, k), morph_oracle(morph_oracle(m, k.side, true, border), k.side, false, border));
    }
  }
}

TEST(Morphology, Examples) {
  ChangeMap single = make_map(7, 7, std::vector<std::uint8_t>(49, 0));
  single.mask[3 * 7 + 3] = 1;
  EXPECT_EQ(morph_open(single, {}).count(), 0u);

  ChangeMap block = make_map(20, 20, std::vector<std::uint8_t>(400, 0));
  for (std::size_t h = 5; h < 15; ++h)
    for (std::size_t w = 5; w < 15; ++w) block.mask[h * 20 + w] = 1;
  ChangeMap holed = block;
  holed.mask[9 * 20 + 9] = 0;
  EXPECT_EQ(morph_close(holed, {}), block);
  EXPECT_EQ(morph_open(block, {}), block);

  EXPECT_EQ(error_code_of([&] { dilate(block, MorphKernel{4}); }), ErrorCode::InvalidConfig);
}

TEST(Morphology, IdempotentAndOrdered) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const ChangeMap m = random_mask(16, 16, 0.1 + 0.008 * trial, rng);
    for (MorphBorder border : {MorphBorder::Ignore, MorphBorder::Unchanged}) {
      const MorphKernel k{3, border};
      const ChangeMap c = morph_close(m, k), o = morph_open(m, k);
      EXPECT_EQ(morph_close(c, k), c);
      EXPECT_EQ(morph_open(o, k), o);
      for (std::size_t p = 0; p < m.mask.size(); ++p) EXPECT_LE(o.mask[p], m.mask[p]);
      if (border == MorphBorder::Ignore) {
        for (std::size_t p = 0; p < m.mask.size(); ++p) EXPECT_GE(c.mask[p], m.mask[p]);
      }
    }
  }
}

TEST(Conversions, RasterRoundTrips) {
  const DifferenceImage d = make_di(2, 2, {0.5, 1.5, 0.0, 7.0});
  const DifferenceImage back = difference_from_raster(to_raster(d), DifferenceKind::Local);
  EXPECT_EQ(back.intensity, d.intensity);
  EXPECT_EQ(back.kind, DifferenceKind::Local);
  const ChangeMap m = make_map(2, 3, {1, 0, 0, 1, 1, 0});
  const Raster r = to_raster(m);
  EXPECT_EQ(r.at(0, 0), 255.0);
  EXPECT_EQ(r.at(0, 1), 0.0);
  EXPECT_EQ(change_map_from_raster(r), m);
}

TEST(PaintObjects, OneValuePerObject) {
  const SegmentationMap seg = segmentation_from_labels(2, 2, {0, 0, 1, 1});
  const std::vector<double> v{1.5, 2.5};
  const DifferenceImage d = paint_objects(seg, v, DifferenceKind::Fused);
  EXPECT_EQ(d.intensity, (std::vector<double>{1.5, 1.5, 2.5, 2.5}));
  const std::vector<double> one{1.0};
  EXPECT_EQ(error_code_of([&] { paint_objects(seg, one, DifferenceKind::Fused); }), ErrorCode::ObjectCountMismatch);
}

}  // namespace
