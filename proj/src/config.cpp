// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmcd/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "mmcd/error.hpp"

namespace mmcd {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  fail(ErrorCode::InvalidConfig, "bad value '" + std::string(value) + "' for " + std::string(key));
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || end != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || end != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

std::string check_modality(std::string_view key, std::string_view v) {
  if (v != "auto") {
    try {
      (void)parse_modality(v);
    } catch (const Error&) {
      bad_value(key, v);
    }
  }
  return std::string(v);
}

struct Field {
  std::string_view key;
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
Field size_field(std::string_view key, T PipelineConfig::*member) {
  return {key, [key, member](PipelineConfig& c, std::string_view v) { c.*member = static_cast<T>(parse_u64(key, v)); },
          [member](const PipelineConfig& c) { return std::to_string(c.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"input.pre", [](PipelineConfig& c, std::string_view v) { c.pre_path = std::string(v); },
       [](const PipelineConfig& c) { return c.pre_path.string(); }},
      {"input.post", [](PipelineConfig& c, std::string_view v) { c.post_path = std::string(v); },
       [](const PipelineConfig& c) { return c.post_path.string(); }},
      {"input.reference", [](PipelineConfig& c, std::string_view v) { c.reference_path = std::string(v); },
       [](const PipelineConfig& c) { return c.reference_path.string(); }},
      {"input.pre_modality",
       [](PipelineConfig& c, std::string_view v) { c.pre_modality = check_modality("input.pre_modality", v); },
       [](const PipelineConfig& c) { return c.pre_modality; }},
      {"input.post_modality",
       [](PipelineConfig& c, std::string_view v) { c.post_modality = check_modality("input.post_modality", v); },
       [](const PipelineConfig& c) { return c.post_modality; }},
      {"output.dir", [](PipelineConfig& c, std::string_view v) { c.output_dir = std::string(v); },
       [](const PipelineConfig& c) { return c.output_dir.string(); }},
      {"output.dataset", [](PipelineConfig& c, std::string_view v) { c.dataset = std::string(v); },
       [](const PipelineConfig& c) { return c.dataset; }},
      size_field("seed", &PipelineConfig::rng_seed),
      {"segment.merge_threshold",
       [](PipelineConfig& c, std::string_view v) { c.segment.merge_threshold = parse_double("segment.merge_threshold", v); },
       [](const PipelineConfig& c) { return format_double(c.segment.merge_threshold); }},
      {"segment.w_channel",
       [](PipelineConfig& c, std::string_view v) { c.segment.w_channel = parse_double("segment.w_channel", v); },
       [](const PipelineConfig& c) { return format_double(c.segment.w_channel); }},
      {"segment.w_compactness",
       [](PipelineConfig& c, std::string_view v) { c.segment.w_compactness = parse_double("segment.w_compactness", v); },
       [](const PipelineConfig& c) { return format_double(c.segment.w_compactness); }},
      {"segment.min_object_size",
       [](PipelineConfig& c, std::string_view v) { c.segment.min_object_size = parse_u64("segment.min_object_size", v); },
       [](const PipelineConfig& c) { return std::to_string(c.segment.min_object_size); }},
      {"graph.phi1", [](PipelineConfig& c, std::string_view v) { c.graph.phi1 = parse_double("graph.phi1", v); },
       [](const PipelineConfig& c) { return format_double(c.graph.phi1); }},
      {"graph.max_vertices",
       [](PipelineConfig& c, std::string_view v) { c.graph.max_vertices = parse_u64("graph.max_vertices", v); },
       [](const PipelineConfig& c) { return std::to_string(c.graph.max_vertices); }},
      size_field("train.epochs", &PipelineConfig::epochs),
      {"train.learning_rate",
       [](PipelineConfig& c, std::string_view v) { c.adam.learning_rate = parse_double("train.learning_rate", v); },
       [](const PipelineConfig& c) { return format_double(c.adam.learning_rate); }},
      {"train.weight_decay",
       [](PipelineConfig& c, std::string_view v) { c.adam.weight_decay = parse_double("train.weight_decay", v); },
       [](const PipelineConfig& c) { return format_double(c.adam.weight_decay); }},
      {"train.beta1", [](PipelineConfig& c, std::string_view v) { c.adam.beta1 = parse_double("train.beta1", v); },
       [](const PipelineConfig& c) { return format_double(c.adam.beta1); }},
      {"train.beta2", [](PipelineConfig& c, std::string_view v) { c.adam.beta2 = parse_double("train.beta2", v); },
       [](const PipelineConfig& c) { return format_double(c.adam.beta2); }},
      {"train.epsilon", [](PipelineConfig& c, std::string_view v) { c.adam.epsilon = parse_double("train.epsilon", v); },
       [](const PipelineConfig& c) { return format_double(c.adam.epsilon); }},
      {"nonlocal.k_similar",
       [](PipelineConfig& c, std::string_view v) { c.nonlocal.k_similar = parse_u64("nonlocal.k_similar", v); },
       [](const PipelineConfig& c) { return std::to_string(c.nonlocal.k_similar); }},
      {"nonlocal.phi2", [](PipelineConfig& c, std::string_view v) { c.nonlocal.phi2 = parse_double("nonlocal.phi2", v); },
       [](const PipelineConfig& c) { return format_double(c.nonlocal.phi2); }},
      size_field("threshold.bins", &PipelineConfig::otsu_bins),
      {"morph.close_size",
       [](PipelineConfig& c, std::string_view v) { c.close_kernel.side = parse_u64("morph.close_size", v); },
       [](const PipelineConfig& c) { return std::to_string(c.close_kernel.side); }},
      {"morph.open_size",
       [](PipelineConfig& c, std::string_view v) { c.open_kernel.side = parse_u64("morph.open_size", v); },
       [](const PipelineConfig& c) { return std::to_string(c.open_kernel.side); }},
      {"morph.border",
       [](PipelineConfig& c, std::string_view v) {
         MorphBorder b = MorphBorder::Ignore;
         if (v == "unchanged") {
           b = MorphBorder::Unchanged;
         } else if (v != "ignore") {
           bad_value("morph.border", v);
         }
         c.close_kernel.border = c.open_kernel.border = b;
       },
       [](const PipelineConfig& c) {
         return std::string(c.close_kernel.border == MorphBorder::Unchanged ? "unchanged" : "ignore");
       }},
  };
  return table;
}

}  // namespace

void PipelineConfig::validate() const {
  segment.validate();
  graph.validate();
  if (epochs == 0) fail(ErrorCode::InvalidConfig, "train.epochs must be >= 1");
  if (!(adam.learning_rate > 0.0)) fail(ErrorCode::InvalidConfig, "train.learning_rate must be > 0");
  if (!(adam.weight_decay >= 0.0)) fail(ErrorCode::InvalidConfig, "train.weight_decay must be >= 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    fail(ErrorCode::InvalidConfig, "Adam betas must lie in [0,1)");
  }
  if (!(adam.epsilon > 0.0)) fail(ErrorCode::InvalidConfig, "train.epsilon must be > 0");
  if (nonlocal.k_similar == 0) fail(ErrorCode::InvalidConfig, "nonlocal.k_similar must be >= 1");
  if (!(nonlocal.phi2 > 0.0)) fail(ErrorCode::InvalidConfig, "nonlocal.phi2 must be > 0");
  if (otsu_bins < 2) fail(ErrorCode::InvalidConfig, "threshold.bins must be >= 2");
  if (close_kernel.side % 2 == 0 || open_kernel.side % 2 == 0) {
    fail(ErrorCode::InvalidConfig, "morphology window sides must be odd");
  }
}

void apply_setting(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  for (const Field& f : fields()) {
    if (f.key == key) {
      f.set(cfg, trim(value));
      return;
    }
  }
  fail(ErrorCode::InvalidConfig, "unknown config key '" + std::string(key) + "'");
}

PipelineConfig parse_config(std::string_view text, PipelineConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    apply_setting(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string format_config(const PipelineConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) {
    out += f.key;
    out += " = ";
    out += f.get(cfg);
    out += '\n';
  }
  return out;
}

}  // namespace mmcd
