// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: `run` executes the whole chain, the other
// subcommands run one stage each on the same file formats.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mmcd/change.hpp"
#include "mmcd/config.hpp"
#include "mmcd/error.hpp"
#include "mmcd/graphs.hpp"
#include "mmcd/metrics.hpp"
#include "mmcd/pipeline.hpp"
#include "mmcd/raster.hpp"
#include "mmcd/segment.hpp"
#include "mmcd/simd.hpp"
#include "mmcd/srgcae.hpp"
#include "mmcd/synthetic.hpp"

namespace {

using namespace mmcd;

// Options shared by every subcommand that needs pipeline parameters.
struct ConfigOptions {
  std::string config_file;
  std::vector<std::string> settings;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "key = value config file");
    app->add_option("--set", settings, "override one key, e.g. --set graph.phi1=2")->take_all();
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg = config_file.empty() ? PipelineConfig{} : load_config(config_file);
    for (const auto& s : settings) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) fail(ErrorCode::InvalidConfig, "--set expects key=value, got '" + s + "'");
      apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    return cfg;
  }
};

struct Inputs {
  Raster pre;
  Raster post;
};

Inputs load_pair(const std::string& pre_path, const std::string& post_path, const PipelineConfig& cfg) {
  Inputs in{apply_modality(load_raster(pre_path), cfg.pre_modality),
            apply_modality(load_raster(post_path), cfg.post_modality)};
  if (in.pre.height != in.post.height || in.pre.width != in.post.width) {
    fail(ErrorCode::ShapeMismatch, "pre and post images differ in height or width");
  }
  return in;
}

struct GraphPair {
  std::vector<StructuralGraph> x;
  std::vector<StructuralGraph> y;
};

GraphPair graphs_for(const Inputs& in, const SegmentationMap& seg, const PipelineConfig& cfg) {
  GraphConfig gc = cfg.graph;
  gc.rng_seed = derive_seed(cfg.rng_seed, SeedStream::Graph);
  return {build_all_graphs(normalize(in.pre), seg, gc), build_all_graphs(normalize(in.post), seg, gc)};
}

void print_row(const MetricsRow& row) { std::cout << metrics_csv_row(row) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised multimodal change detection with structural-relationship graph autoencoders"};
  app.require_subcommand(1);
  std::string kernels;
  app.add_option("--kernels", kernels, "force the numeric kernel set (scalar or avx2)");

  // run
  ConfigOptions run_opts;
  std::string run_pre, run_post, run_ref, run_out;
  std::optional<std::uint64_t> run_seed;
  auto* run = app.add_subcommand("run", "full pipeline from two rasters to a refined change map");
  run_opts.attach(run);
  run->add_option("--pre", run_pre, "pre-event raster");
  run->add_option("--post", run_post, "post-event raster");
  run->add_option("--reference", run_ref, "reference change map for evaluation");
  run->add_option("--out", run_out, "output directory");
  run->add_option("--seed", run_seed, "random seed");

  // synth
  SyntheticSpec spec;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "write a synthetic optical/SAR pair with planted change");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--height", spec.height);
  synth->add_option("--width", spec.width);
  synth->add_option("--regions", spec.n_regions);
  synth->add_option("--classes", spec.n_classes);
  synth->add_option("--channels", spec.optical_channels, "optical channel count");
  synth->add_option("--change-fraction", spec.change_fraction);
  synth->add_option("--gamma", spec.optical_gamma);
  synth->add_option("--noise", spec.noise_level);
  synth->add_option("--sar-contrast", spec.sar_contrast);
  synth->add_option("--looks", spec.speckle_looks);
  synth->add_option("--seed", spec.rng_seed);

  // segment
  ConfigOptions seg_opts;
  std::string seg_pre, seg_post, seg_out;
  auto* segment = app.add_subcommand("segment", "co-segment the stacked pair");
  seg_opts.attach(segment);
  segment->add_option("--pre", seg_pre)->required();
  segment->add_option("--post", seg_post)->required();
  segment->add_option("--out", seg_out, "segmentation file")->required();

  // train
  ConfigOptions train_opts;
  std::string tr_pre, tr_post, tr_seg, tr_out, tr_objective = "edge";
  auto* train_cmd = app.add_subcommand("train", "train one SR-GCAE on the object graphs");
  train_opts.attach(train_cmd);
  train_cmd->add_option("--pre", tr_pre)->required();
  train_cmd->add_option("--post", tr_post)->required();
  train_cmd->add_option("--segmentation", tr_seg)->required();
  train_cmd->add_option("--objective", tr_objective, "edge or vertex")->check(CLI::IsMember({"edge", "vertex"}));
  train_cmd->add_option("--out", tr_out, "model file")->required();

  // diff
  ConfigOptions diff_opts;
  std::string df_pre, df_post, df_seg, df_model, df_out;
  auto* diff = app.add_subcommand("diff", "difference image from a trained model (edge: local, vertex: nonlocal)");
  diff_opts.attach(diff);
  diff->add_option("--pre", df_pre)->required();
  diff->add_option("--post", df_post)->required();
  diff->add_option("--segmentation", df_seg)->required();
  diff->add_option("--model", df_model)->required();
  diff->add_option("--out", df_out, "difference image (MMR)")->required();

  // fuse
  std::string fu_local, fu_nonlocal, fu_out;
  auto* fuse = app.add_subcommand("fuse", "variance-weighted fusion of two difference images");
  fuse->add_option("--local", fu_local)->required();
  fuse->add_option("--nonlocal", fu_nonlocal)->required();
  fuse->add_option("--out", fu_out)->required();

  // threshold
  std::string th_di, th_out;
  std::size_t th_bins = 256;
  auto* threshold = app.add_subcommand("threshold", "Otsu threshold a difference image");
  threshold->add_option("--di", th_di)->required();
  threshold->add_option("--bins", th_bins);
  threshold->add_option("--out", th_out, "change map (PGM)")->required();

  // refine
  std::string rf_map, rf_out;
  MorphKernel rf_close, rf_open;
  auto* refine = app.add_subcommand("refine", "closing then opening of a change map");
  refine->add_option("--map", rf_map)->required();
  refine->add_option("--close-size", rf_close.side);
  refine->add_option("--open-size", rf_open.side);
  std::string rf_border = "ignore";
  refine->add_option("--border", rf_border, "erosion at the frame: ignore or unchanged")
      ->check(CLI::IsMember({"ignore", "unchanged"}));
  refine->add_option("--out", rf_out)->required();

  // eval
  std::string ev_map, ev_ref, ev_di, ev_out, ev_roc, ev_dataset = "run";
  auto* eval = app.add_subcommand("eval", "accuracy of a change map against a reference");
  eval->add_option("--map", ev_map)->required();
  eval->add_option("--reference", ev_ref)->required();
  eval->add_option("--di", ev_di, "difference image for ROC/AUC");
  eval->add_option("--dataset", ev_dataset);
  eval->add_option("--out", ev_out, "metrics CSV");
  eval->add_option("--roc", ev_roc, "ROC CSV (needs --di)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (!kernels.empty()) simd::set_active_isa(simd::parse_isa(kernels));

    if (*run) {
      PipelineConfig cfg = run_opts.resolve();
      if (!run_pre.empty()) cfg.pre_path = run_pre;
      if (!run_post.empty()) cfg.post_path = run_post;
      if (!run_ref.empty()) cfg.reference_path = run_ref;
      if (!run_out.empty()) cfg.output_dir = run_out;
      if (run_seed) cfg.rng_seed = *run_seed;
      const PipelineRun out = run_pipeline(cfg);
      std::cout << "objects " << out.result.segmentation.n_objects << ", changed pixels "
                << out.result.refined_map.count() << ", artifacts in " << cfg.output_dir.string() << "\n";
      if (out.evaluation) {
        std::cout << metrics_csv_header() << "\n";
        print_row(out.evaluation->refined);
        print_row(out.evaluation->raw);
        print_row(out.evaluation->local);
        print_row(out.evaluation->nonlocal);
      }
    } else if (*synth) {
      const SyntheticPair pair = generate_synthetic_pair(spec);
      const std::filesystem::path dir = synth_out;
      std::filesystem::create_directories(dir);
      save_raster(pair.pre, dir / "pre.mmr");
      save_raster(pair.post, dir / "post.mmr");
      save_raster(to_raster(pair.truth), dir / "truth.pgm", RasterFormat::Pgm);
      std::cout << "changed pixels " << pair.truth.count() << " of " << pair.truth.mask.size() << "\n";
    } else if (*segment) {
      const PipelineConfig cfg = seg_opts.resolve();
      cfg.validate();
      const Inputs in = load_pair(seg_pre, seg_post, cfg);
      SegmentationConfig sc = cfg.segment;
      sc.rng_seed = derive_seed(cfg.rng_seed, SeedStream::Segment);
      const SegmentationMap seg = fnea_segment(stack_channels(normalize(in.pre), normalize(in.post)), sc);
      save_segmentation(seg, seg_out);
      std::cout << "objects " << seg.n_objects << "\n";
    } else if (*train_cmd) {
      const PipelineConfig cfg = train_opts.resolve();
      cfg.validate();
      const Inputs in = load_pair(tr_pre, tr_post, cfg);
      const SegmentationMap seg = load_segmentation(tr_seg);
      const GraphPair g = graphs_for(in, seg, cfg);
      const bool edge = tr_objective == "edge";
      const bool tied = in.pre.modality == in.post.modality && in.pre.channels == in.post.channels;
      auto model = init_model(in.pre.channels, in.post.channels, edge ? Objective::Edge : Objective::Vertex,
                              derive_seed(cfg.rng_seed, edge ? SeedStream::EdgeModel : SeedStream::VertexModel),
                              tied);
      const TrainResult tr = train(std::move(model), g.x, g.y, cfg.epochs, cfg.adam);
      save_model(tr.model, tr_out);
      for (std::size_t e = 0; e < tr.report.epochs(); ++e) {
        std::cout << "epoch " << e + 1 << " loss " << tr.report.epoch_losses[e] << "\n";
      }
    } else if (*diff) {
      const PipelineConfig cfg = diff_opts.resolve();
      cfg.validate();
      const Inputs in = load_pair(df_pre, df_post, cfg);
      const SegmentationMap seg = load_segmentation(df_seg);
      const SrGcaeModel model = load_model(df_model);
      const GraphPair g = graphs_for(in, seg, cfg);
      DifferenceImage di;
      if (model.objective == Objective::Edge) {
        di = local_difference_image(model, g.x, g.y, seg);
      } else {
        NonlocalConfig nl = cfg.nonlocal;
        if (seg.n_objects >= 2) nl.k_similar = std::min(nl.k_similar, seg.n_objects - 1);
        di = nonlocal_difference_image(model, g.x, g.y, seg, nl);
      }
      save_raster(to_raster(di), df_out);
    } else if (*fuse) {
      const auto l = difference_from_raster(load_raster(fu_local), DifferenceKind::Local);
      const auto n = difference_from_raster(load_raster(fu_nonlocal), DifferenceKind::Nonlocal);
      save_raster(to_raster(adaptive_fuse(l, n)), fu_out);
    } else if (*threshold) {
      const OtsuResult r = otsu_threshold(difference_from_raster(load_raster(th_di)), th_bins);
      save_raster(to_raster(r.map), th_out, RasterFormat::Pgm);
      std::cout << "threshold " << r.threshold << " (bin " << r.bin << "), changed pixels " << r.map.count()
                << "\n";
    } else if (*refine) {
      const ChangeMap cm = change_map_from_raster(load_raster(rf_map));
      rf_close.border = rf_open.border = rf_border == "unchanged" ? MorphBorder::Unchanged : MorphBorder::Ignore;
      save_raster(to_raster(morph_refine(cm, rf_close, rf_open)), rf_out, RasterFormat::Pgm);
    } else if (*eval) {
      const ChangeMap cm = change_map_from_raster(load_raster(ev_map));
      const ChangeMap ref = change_map_from_raster(load_raster(ev_ref));
      MetricsRow row{ev_dataset, oa_f1_kappa(confusion(cm, ref)), 0.0, 0.0};
      if (!ev_di.empty()) {
        const RocCurve roc = roc_auc(difference_from_raster(load_raster(ev_di)), ref);
        row.auc = roc.auc;
        if (!ev_roc.empty()) write_roc_csv(roc, ev_roc);
      } else if (!ev_roc.empty()) {
        fail(ErrorCode::InvalidConfig, "--roc needs --di");
      }
      if (!ev_out.empty()) write_metrics_csv({row}, ev_out);
      std::cout << metrics_csv_header() << "\n";
      print_row(row);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: IoFailure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
