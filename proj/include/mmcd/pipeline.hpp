// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mmcd/change.hpp"
#include "mmcd/config.hpp"
#include "mmcd/metrics.hpp"
#include "mmcd/raster.hpp"
#include "mmcd/segment.hpp"
#include "mmcd/srgcae.hpp"

namespace mmcd {

// Stage seeds are derived from the single configured seed.
enum class SeedStream : std::uint64_t { Segment = 1, Graph = 2, EdgeModel = 3, VertexModel = 4 };
std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream);

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct PipelineResult {
  Raster pre;   // normalized
  Raster post;  // normalized
  SegmentationMap segmentation;
  SrGcaeModel edge_model;
  SrGcaeModel vertex_model;
  TrainReport edge_report;
  TrainReport vertex_report;
  std::size_t k_similar = 0;  // after clamping to the object count
  DifferenceImage local;
  DifferenceImage nonlocal;
  DifferenceImage fused;  // of the mean-scaled local and nonlocal images
  double threshold = 0.0;
  ChangeMap raw_map;      // Otsu output
  ChangeMap refined_map;  // after closing then opening
  std::vector<StageTiming> timings;
  double total_seconds = 0.0;
};

// Divides by the mean intensity, so the variance becomes the squared
// coefficient of variation. An all-zero image is returned unchanged.
DifferenceImage scale_to_unit_mean(DifferenceImage di);

// Fused image of two difference images; when both are constant it falls back
// to their pixelwise mean.
DifferenceImage fuse_or_mean(const DifferenceImage& local, const DifferenceImage& nonlocal);

// Otsu change map; a constant difference image yields an all-false map.
ChangeMap threshold_or_empty(const DifferenceImage& di, std::size_t bins, double* threshold = nullptr);

// In-memory run on raw (unnormalized) rasters whose modality tags are final.
PipelineResult run_pipeline(const PipelineConfig& cfg, const Raster& pre, const Raster& post);

struct Evaluation {
  MetricsRow refined;   // refined map, AUC of the fused image
  MetricsRow raw;       // Otsu map before morphology
  MetricsRow local;     // Otsu on the local difference image alone
  MetricsRow nonlocal;  // Otsu on the nonlocal difference image alone
  RocCurve roc;         // of the fused image
};

Evaluation evaluate(const PipelineResult& result, const ChangeMap& reference, const PipelineConfig& cfg);

// Loads the configured inputs, runs, and writes the artifact set into
// cfg.output_dir: di_local.mmr, di_nonlocal.mmr, di_final.mmr, cm_raw.pgm,
// cm_refined.pgm, segmentation.seg, model_edge.gcae, model_vertex.gcae,
// manifest.cfg, timings.csv, and with a reference metrics.csv and roc.csv.
struct PipelineRun {
  PipelineResult result;
  std::optional<Evaluation> evaluation;
};
PipelineRun run_pipeline(const PipelineConfig& cfg);

// Applies the modality overrides of the config to a loaded raster.
Raster apply_modality(Raster r, const std::string& modality);

}  // namespace mmcd
