// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mmcd/change.hpp"

namespace mmcd {

// Changed is the positive class.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

struct Accuracy {
  double oa = 0.0;
  double f1 = 0.0;
  double kappa = 0.0;
};

struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (fpr, tpr), (0,0) to (1,1)
  double auc = 0.0;
};

ConfusionCounts confusion(const ChangeMap& predicted, const ChangeMap& reference);
Accuracy oa_f1_kappa(const ConfusionCounts& c);
// Sweeps every distinct intensity with "changed iff intensity > t".
RocCurve roc_auc(const DifferenceImage& di, const ChangeMap& reference);

struct MetricsRow {
  std::string dataset;
  Accuracy accuracy;
  double auc = 0.0;
  double runtime_seconds = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);
void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path);
void write_roc_csv(const RocCurve& roc, const std::filesystem::path& path);

}  // namespace mmcd
