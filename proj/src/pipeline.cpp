// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmcd/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>

#include "mmcd/error.hpp"
#include "mmcd/graphs.hpp"

namespace mmcd {
namespace {

class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& out) : out_(out), last_(Clock::now()) {}

  void lap(const char* stage) {
    const auto now = Clock::now();
    out_.push_back({stage, std::chrono::duration<double>(now - last_).count()});
    last_ = now;
  }

 private:
  using Clock = std::chrono::steady_clock;
  std::vector<StageTiming>& out_;
  Clock::time_point last_;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::IoFailure, "write failed for " + path.string());
}

MetricsRow row_for(const std::string& dataset, const ChangeMap& map, const ChangeMap& reference, double auc,
                   double seconds) {
  return {dataset, oa_f1_kappa(confusion(map, reference)), auc, seconds};
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream) {
  // splitmix64 finalizer over seed + stream * golden gamma
  std::uint64_t z = seed + static_cast<std::uint64_t>(stream) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

DifferenceImage scale_to_unit_mean(DifferenceImage di) {
  double sum = 0.0;
  for (double v : di.intensity) sum += v;
  if (!(sum > 0.0)) return di;
  const double mean = sum / static_cast<double>(di.intensity.size());
  for (double& v : di.intensity) v /= mean;
  return di;
}

DifferenceImage fuse_or_mean(const DifferenceImage& local, const DifferenceImage& nonlocal) {
  try {
    return adaptive_fuse(local, nonlocal);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BothVariancesZero) throw;
  }
  DifferenceImage out = local;
  out.kind = DifferenceKind::Fused;
  for (std::size_t p = 0; p < out.intensity.size(); ++p) {
    out.intensity[p] = 0.5 * local.intensity[p] + 0.5 * nonlocal.intensity[p];
  }
  return out;
}

ChangeMap threshold_or_empty(const DifferenceImage& di, std::size_t bins, double* threshold) {
  try {
    OtsuResult r = otsu_threshold(di, bins);
    if (threshold) *threshold = r.threshold;
    return std::move(r.map);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ConstantImage) throw;
  }
  if (threshold) *threshold = di.intensity.empty() ? 0.0 : di.intensity.front();
  return ChangeMap{di.height, di.width, std::vector<std::uint8_t>(di.intensity.size(), 0)};
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const Raster& pre, const Raster& post) {
  cfg.validate();
  validate(pre);
  validate(post);
  if (pre.height != post.height || pre.width != post.width) {
    fail(ErrorCode::ShapeMismatch, "pre and post images differ in height or width");
  }
  PipelineResult res;
  const auto t0 = std::chrono::steady_clock::now();
  StageClock clock(res.timings);

  res.pre = normalize(pre);
  res.post = normalize(post);
  clock.lap("normalize");

  SegmentationConfig seg_cfg = cfg.segment;
  seg_cfg.rng_seed = derive_seed(cfg.rng_seed, SeedStream::Segment);
  res.segmentation = fnea_segment(stack_channels(res.pre, res.post), seg_cfg);
  clock.lap("segment");

  GraphConfig graph_cfg = cfg.graph;
  graph_cfg.rng_seed = derive_seed(cfg.rng_seed, SeedStream::Graph);
  const auto graphs_x = build_all_graphs(res.pre, res.segmentation, graph_cfg);
  const auto graphs_y = build_all_graphs(res.post, res.segmentation, graph_cfg);
  clock.lap("graphs");

  const bool tied = pre.modality == post.modality && pre.channels == post.channels;
  {
    auto model = init_model(pre.channels, post.channels, Objective::Edge,
                            derive_seed(cfg.rng_seed, SeedStream::EdgeModel), tied);
    auto trained = train(std::move(model), graphs_x, graphs_y, cfg.epochs, cfg.adam);
    res.edge_model = std::move(trained.model);
    res.edge_report = std::move(trained.report);
  }
  clock.lap("train_edge");
  {
    auto model = init_model(pre.channels, post.channels, Objective::Vertex,
                            derive_seed(cfg.rng_seed, SeedStream::VertexModel), tied);
    auto trained = train(std::move(model), graphs_x, graphs_y, cfg.epochs, cfg.adam);
    res.vertex_model = std::move(trained.model);
    res.vertex_report = std::move(trained.report);
  }
  clock.lap("train_vertex");

  res.local = local_difference_image(res.edge_model, graphs_x, graphs_y, res.segmentation);
  clock.lap("di_local");

  const std::size_t n_obj = res.segmentation.n_objects;
  if (n_obj >= 2) {
    NonlocalConfig nl = cfg.nonlocal;
    nl.k_similar = std::min(nl.k_similar, n_obj - 1);
    res.k_similar = nl.k_similar;
    res.nonlocal = nonlocal_difference_image(res.vertex_model, graphs_x, graphs_y, res.segmentation, nl);
  } else {
    res.nonlocal = paint_objects(res.segmentation, std::vector<double>(n_obj, 0.0), DifferenceKind::Nonlocal);
  }
  clock.lap("di_nonlocal");

  res.fused = fuse_or_mean(scale_to_unit_mean(res.local), scale_to_unit_mean(res.nonlocal));
  clock.lap("fuse");

  res.raw_map = threshold_or_empty(res.fused, cfg.otsu_bins, &res.threshold);
  clock.lap("threshold");

  res.refined_map = morph_refine(res.raw_map, cfg.close_kernel, cfg.open_kernel);
  clock.lap("morphology");

  res.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

Evaluation evaluate(const PipelineResult& result, const ChangeMap& reference, const PipelineConfig& cfg) {
  Evaluation ev;
  ev.roc = roc_auc(result.fused, reference);
  const double auc_local = roc_auc(result.local, reference).auc;
  const double auc_nonlocal = roc_auc(result.nonlocal, reference).auc;
  const double secs = result.total_seconds;
  ev.refined = row_for(cfg.dataset, result.refined_map, reference, ev.roc.auc, secs);
  ev.raw = row_for(cfg.dataset + ":raw", result.raw_map, reference, ev.roc.auc, secs);
  ev.local = row_for(cfg.dataset + ":local", threshold_or_empty(result.local, cfg.otsu_bins), reference,
                     auc_local, secs);
  ev.nonlocal = row_for(cfg.dataset + ":nonlocal", threshold_or_empty(result.nonlocal, cfg.otsu_bins), reference,
                        auc_nonlocal, secs);
  return ev;
}

Raster apply_modality(Raster r, const std::string& modality) {
  if (modality != "auto") r.modality = parse_modality(modality);
  return r;
}

PipelineRun run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  if (cfg.pre_path.empty() || cfg.post_path.empty()) {
    fail(ErrorCode::InvalidConfig, "input.pre and input.post are required");
  }
  const Raster pre = apply_modality(load_raster(cfg.pre_path), cfg.pre_modality);
  const Raster post = apply_modality(load_raster(cfg.post_path), cfg.post_modality);
  std::optional<ChangeMap> reference;
  if (!cfg.reference_path.empty()) {
    reference = change_map_from_raster(load_raster(cfg.reference_path));
    if (reference->height != pre.height || reference->width != pre.width) {
      fail(ErrorCode::ShapeMismatch, "reference map differs in size from the inputs");
    }
  }

  PipelineRun run;
  run.result = run_pipeline(cfg, pre, post);
  const PipelineResult& res = run.result;

  const auto& dir = cfg.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());

  write_text(dir / "manifest.cfg", format_config(cfg));
  save_segmentation(res.segmentation, dir / "segmentation.seg");
  save_model(res.edge_model, dir / "model_edge.gcae");
  save_model(res.vertex_model, dir / "model_vertex.gcae");
  save_raster(to_raster(res.local), dir / "di_local.mmr");
  save_raster(to_raster(res.nonlocal), dir / "di_nonlocal.mmr");
  save_raster(to_raster(res.fused), dir / "di_final.mmr");
  save_raster(to_raster(res.raw_map), dir / "cm_raw.pgm", RasterFormat::Pgm);
  save_raster(to_raster(res.refined_map), dir / "cm_refined.pgm", RasterFormat::Pgm);

  std::string timings = "stage,seconds\n";
  for (const auto& t : res.timings) timings += t.stage + "," + std::to_string(t.seconds) + "\n";
  timings += "total," + std::to_string(res.total_seconds) + "\n";
  write_text(dir / "timings.csv", timings);

  if (reference) {
    run.evaluation = evaluate(res, *reference, cfg);
    const auto& ev = *run.evaluation;
    write_metrics_csv({ev.refined, ev.raw, ev.local, ev.nonlocal}, dir / "metrics.csv");
    write_roc_csv(ev.roc, dir / "roc.csv");
  }
  return run;
}

}  // namespace mmcd
