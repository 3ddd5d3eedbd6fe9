// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "mmcd/change.hpp"
#include "mmcd/graphs.hpp"
#include "mmcd/segment.hpp"
#include "mmcd/srgcae.hpp"

namespace mmcd {

struct PipelineConfig {
  std::filesystem::path pre_path;
  std::filesystem::path post_path;
  std::filesystem::path reference_path;  // empty when no reference is given
  // "auto" keeps the modality stored in the raster file.
  std::string pre_modality = "auto";
  std::string post_modality = "auto";

  SegmentationConfig segment;
  GraphConfig graph;
  NonlocalConfig nonlocal;
  MorphKernel close_kernel;
  MorphKernel open_kernel;
  std::size_t otsu_bins = 256;

  std::size_t epochs = 20;
  AdamConfig adam;

  std::uint64_t rng_seed = 0;
  std::filesystem::path output_dir = "mmcd_out";
  std::string dataset = "run";

  void validate() const;
};

// Sets one dotted key such as "segment.merge_threshold" from its text value.
void apply_setting(PipelineConfig& cfg, std::string_view key, std::string_view value);

// Line-oriented "key = value" text; '#' starts a comment, blank lines are
// ignored. Unknown keys and malformed values raise InvalidConfig.
PipelineConfig parse_config(std::string_view text, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

// Every key in a fixed order with round-trip exact numbers, so the output can
// be parsed back into an identical config.
std::string format_config(const PipelineConfig& cfg);

}  // namespace mmcd
