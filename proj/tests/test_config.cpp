// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>

#include "mmcd/config.hpp"
#include "mmcd/error.hpp"
#include "test_util.hpp"

namespace {

using namespace mmcd;
using mmcd::testing::error_code_of;
using mmcd::testing::TempDir;

TEST(Config, DefaultsAreValid) {
  const PipelineConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.nonlocal.k_similar, 50u);
  EXPECT_EQ(cfg.graph.phi1, 1.0);
  EXPECT_EQ(cfg.nonlocal.phi2, 1.0);
  EXPECT_EQ(cfg.adam.learning_rate, 1e-4);
  EXPECT_EQ(cfg.adam.weight_decay, 1e-6);
  EXPECT_EQ(cfg.close_kernel.side, 3u);
  EXPECT_EQ(cfg.open_kernel.side, 3u);
}

TEST(Config, ParseOverridesAndComments) {
  const PipelineConfig cfg = parse_config(
      "# comment line\n"
      "\n"
      "input.pre = a.mmr\n"
      "  input.post=b.pgm   # trailing comment\n"
      "input.post_modality = sar\n"
      "seed = 12345678901234\n"
      "segment.merge_threshold = 2.5\n"
      "graph.max_vertices = 64\n"
      "train.epochs = 3\n"
      "train.learning_rate = 0.001\n"
      "nonlocal.k_similar = 7\n"
      "morph.close_size = 5\n"
      "morph.border = unchanged\n");
  EXPECT_EQ(cfg.pre_path, "a.mmr");
  EXPECT_EQ(cfg.post_path, "b.pgm");
  EXPECT_EQ(cfg.post_modality, "sar");
  EXPECT_EQ(cfg.rng_seed, 12345678901234u);
  EXPECT_EQ(cfg.segment.merge_threshold, 2.5);
  EXPECT_EQ(cfg.graph.max_vertices, 64u);
  EXPECT_EQ(cfg.epochs, 3u);
  EXPECT_EQ(cfg.adam.learning_rate, 0.001);
  EXPECT_EQ(cfg.nonlocal.k_similar, 7u);
  EXPECT_EQ(cfg.close_kernel.side, 5u);
  EXPECT_EQ(cfg.close_kernel.border, MorphBorder::Unchanged);
  EXPECT_EQ(cfg.open_kernel.border, MorphBorder::Unchanged);
}

TEST(Config, FormatRoundTripsExactly) {
  PipelineConfig cfg;
  cfg.pre_path = "dir/pre.mmr";
  cfg.reference_path = "ref.pgm";
  cfg.segment.merge_threshold = 0.1 + 0.2;
  cfg.graph.phi1 = 1.0 / 3.0;
  cfg.adam.weight_decay = 3e-7;
  cfg.rng_seed = ~std::uint64_t{0};
  cfg.dataset = "scene";
  const std::string text = format_config(cfg);
  const PipelineConfig back = parse_config(text);
  EXPECT_EQ(format_config(back), text);
  EXPECT_EQ(back.segment.merge_threshold, cfg.segment.merge_threshold);
  EXPECT_EQ(back.graph.phi1, cfg.graph.phi1);
  EXPECT_EQ(back.rng_seed, cfg.rng_seed);

  TempDir dir("cfg");
  std::ofstream(dir / "c.cfg") << text;
  EXPECT_EQ(format_config(load_config(dir / "c.cfg")), text);
  EXPECT_EQ(error_code_of([&] { load_config(dir / "missing.cfg"); }), ErrorCode::IoFailure);
}

TEST(Config, RejectsBadInput) {
  EXPECT_EQ(error_code_of([] { parse_config("no.such.key = 1\n"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(error_code_of([] { parse_config("seed\n"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(error_code_of([] { parse_config("train.epochs = 3x\n"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(error_code_of([] { parse_config("graph.phi1 = abc\n"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(error_code_of([] { parse_config("morph.border = sideways\n"); }), ErrorCode::InvalidConfig);
  PipelineConfig cfg;
  cfg.close_kernel.side = 4;
  EXPECT_EQ(error_code_of([&] { cfg.validate(); }), ErrorCode::InvalidConfig);
  cfg = {};
  cfg.nonlocal.phi2 = 0.0;
  EXPECT_EQ(error_code_of([&] { cfg.validate(); }), ErrorCode::InvalidConfig);
  cfg = {};
  cfg.otsu_bins = 1;
  EXPECT_EQ(error_code_of([&] { cfg.validate(); }), ErrorCode::InvalidConfig);
}

TEST(Config, ApplySetting) {
  PipelineConfig cfg;
  apply_setting(cfg, "output.dir", "out/x");
  apply_setting(cfg, "threshold.bins", "64");
  EXPECT_EQ(cfg.output_dir, "out/x");
  EXPECT_EQ(cfg.otsu_bins, 64u);
}

}  // namespace
