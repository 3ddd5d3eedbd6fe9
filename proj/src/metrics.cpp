// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmcd/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "mmcd/error.hpp"

namespace mmcd {
namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

ConfusionCounts confusion(const ChangeMap& predicted, const ChangeMap& reference) {
  if (predicted.height != reference.height || predicted.width != reference.width ||
      predicted.mask.size() != reference.mask.size()) {
    fail(ErrorCode::ShapeMismatch, "change map and reference differ in shape");
  }
  ConfusionCounts c;
  for (std::size_t p = 0; p < predicted.mask.size(); ++p) {
    const bool pr = predicted.mask[p] != 0;
    const bool gt = reference.mask[p] != 0;
    if (pr && gt) ++c.tp;
    else if (pr) ++c.fp;
    else if (gt) ++c.fn;
    else ++c.tn;
  }
  return c;
}

Accuracy oa_f1_kappa(const ConfusionCounts& c) {
  const double total = static_cast<double>(c.total());
  if (c.total() == 0) fail(ErrorCode::EmptyCounts, "confusion table is empty");
  const double tp = c.tp, fp = c.fp, tn = c.tn, fn = c.fn;
  Accuracy a;
  a.oa = (tp + tn) / total;
  const double f1_den = 2.0 * tp + fp + fn;
  a.f1 = f1_den > 0.0 ? 2.0 * tp / f1_den : 0.0;
  const double pe = ((tp + fp) * (tp + fn) + (tn + fn) * (tn + fp)) / (total * total);
  if (pe >= 1.0) {
    a.kappa = a.oa >= 1.0 ? 1.0 : 0.0;
  } else {
    a.kappa = (a.oa - pe) / (1.0 - pe);
  }
  return a;
}

RocCurve roc_auc(const DifferenceImage& di, const ChangeMap& reference) {
  if (di.intensity.size() != reference.mask.size() || di.height != reference.height ||
      di.width != reference.width) {
    fail(ErrorCode::ShapeMismatch, "difference image and reference differ in shape");
  }
  const std::size_t n = di.intensity.size();
  const std::size_t pos = reference.count();
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) fail(ErrorCode::SingleClassReference, "reference must contain both classes");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return di.intensity[a] > di.intensity[b]; });
  RocCurve roc;
  roc.points.emplace_back(0.0, 0.0);
  std::size_t tp = 0, fp = 0;
  double auc = 0.0;
  double prev_fpr = 0.0, prev_tpr = 0.0;
  for (std::size_t i = 0; i < n;) {
    // Lowering the threshold past one distinct value admits its whole group.
    const double v = di.intensity[order[i]];
    while (i < n && di.intensity[order[i]] == v) {
      if (reference.mask[order[i]]) ++tp;
      else ++fp;
      ++i;
    }
    const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
    const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
    auc += (fpr - prev_fpr) * (tpr + prev_tpr) * 0.5;
    roc.points.emplace_back(fpr, tpr);
    prev_fpr = fpr;
    prev_tpr = tpr;
  }
  roc.auc = auc;
  return roc;
}

std::string metrics_csv_header() { return "dataset,oa,f1,kc,auc,runtime_seconds"; }

std::string metrics_csv_row(const MetricsRow& r) {
  return r.dataset + "," + fmt_double(r.accuracy.oa) + "," + fmt_double(r.accuracy.f1) + "," +
         fmt_double(r.accuracy.kappa) + "," + fmt_double(r.auc) + "," + fmt_double(r.runtime_seconds);
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << metrics_csv_header() << '\n';
  for (const auto& r : rows) out << metrics_csv_row(r) << '\n';
}

void write_roc_csv(const RocCurve& roc, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "fpr,tpr\n";
  for (const auto& [f, t] : roc.points) out << fmt_double(f) << ',' << fmt_double(t) << '\n';
}

}  // namespace mmcd
