// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace mmcd {

enum class Modality : std::uint8_t { Generic = 0, Optical = 1, Sar = 2 };

std::string_view to_string(Modality m);
Modality parse_modality(std::string_view name);

// H x W x C image, row-major with channels interleaved per pixel.
struct Raster {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<double> data;
  Modality modality = Modality::Generic;

  Raster() = default;
  Raster(std::size_t h, std::size_t w, std::size_t c, Modality m = Modality::Generic,
         double fill = 0.0)
      : height(h), width(w), channels(c), data(h * w * c, fill), modality(m) {}

  std::size_t pixel_count() const noexcept { return height * width; }
  std::size_t index(std::size_t h, std::size_t w, std::size_t c = 0) const noexcept {
    return (h * width + w) * channels + c;
  }
  double& at(std::size_t h, std::size_t w, std::size_t c = 0) { return data[index(h, w, c)]; }
  double at(std::size_t h, std::size_t w, std::size_t c = 0) const { return data[index(h, w, c)]; }
  std::span<const double> pixel(std::size_t h, std::size_t w) const {
    return {data.data() + index(h, w), channels};
  }

  bool operator==(const Raster&) const = default;
};

// Throws ShapeMismatch / EmptyRaster / NonFiniteValue when the invariants
// (positive dims, matching payload, finite values) do not hold.
void validate(const Raster& r);

enum class RasterFormat { Mmr, Pgm };

// Sniffs the magic: "P5" selects binary PGM, "MMRASTR1" the MMR container.
Raster load_raster(const std::filesystem::path& path);
void save_raster(const Raster& r, const std::filesystem::path& path,
                 RasterFormat format = RasterFormat::Mmr);

// In-memory codecs used by the file functions.
Raster decode_raster(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_mmr(const Raster& r);
std::vector<std::uint8_t> encode_pgm(const Raster& r);

// Per-channel min-max scaling to [0,1]; a constant channel maps to 0.
Raster normalize_optical(const Raster& r);
// log(1+x) followed by per-channel min-max scaling. Rejects negative input.
Raster normalize_sar(const Raster& r);
// Dispatches on the modality tag (Generic is treated like Optical).
Raster normalize(const Raster& r);

// Channel concatenation, x's channels first. Output modality is Generic.
Raster stack_channels(const Raster& x, const Raster& y);

}  // namespace mmcd
