// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmcd/raster.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "mmcd/error.hpp"

namespace mmcd {
namespace {

constexpr char kMmrMagic[8] = {'M', 'M', 'R', 'A', 'S', 'T', 'R', '1'};
constexpr std::size_t kMmrHeaderBytes = 8 + 3 * 4 + 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

double get_f64(const std::uint8_t* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

Raster decode_mmr(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMmrHeaderBytes) fail(ErrorCode::MalformedHeader, "MMR header truncated");
  const std::uint8_t* p = bytes.data() + 8;
  const std::uint32_t h = get_u32(p);
  const std::uint32_t w = get_u32(p + 4);
  const std::uint32_t c = get_u32(p + 8);
  const std::uint8_t code = p[12];
  if (h == 0 || w == 0 || c == 0) fail(ErrorCode::MalformedHeader, "MMR dimensions must be positive");
  if (code > 2) fail(ErrorCode::MalformedHeader, "MMR modality code " + std::to_string(code));
  const std::size_t payload = bytes.size() - kMmrHeaderBytes;
  const std::size_t expected = static_cast<std::size_t>(h) * w * c;
  if (payload % 8 != 0 || payload / 8 != expected) {
    fail(ErrorCode::DimensionMismatch, "MMR declares " + std::to_string(h) + "x" +
                                           std::to_string(w) + "x" + std::to_string(c) +
                                           " but carries " + std::to_string(payload) + " bytes");
  }
  Raster r(h, w, c, static_cast<Modality>(code));
  const std::uint8_t* q = bytes.data() + kMmrHeaderBytes;
  for (std::size_t i = 0; i < expected; ++i) r.data[i] = get_f64(q + 8 * i);
  validate(r);
  return r;
}

// Netpbm header token reader: whitespace separated, '#' comments to EOL.
class PgmHeader {
 public:
  explicit PgmHeader(std::span<const std::uint8_t> bytes) : bytes_(bytes), pos_(2) {}

  std::uint32_t next_uint() {
    skip_space_and_comments();
    std::uint64_t v = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > std::numeric_limits<std::uint32_t>::max()) {
        fail(ErrorCode::MalformedHeader, "PGM header value overflows");
      }
      ++digits;
    }
    if (digits == 0) fail(ErrorCode::MalformedHeader, "PGM header expects a decimal integer");
    return static_cast<std::uint32_t>(v);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      fail(ErrorCode::MalformedHeader, "PGM maxval must be followed by one whitespace byte");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
};

Raster decode_pgm(std::span<const std::uint8_t> bytes) {
  PgmHeader header(bytes);
  const std::uint32_t w = header.next_uint();
  const std::uint32_t h = header.next_uint();
  const std::uint32_t maxval = header.next_uint();
  if (w == 0 || h == 0) fail(ErrorCode::MalformedHeader, "PGM dimensions must be positive");
  if (maxval == 0) fail(ErrorCode::MalformedHeader, "PGM maxval must be positive");
  if (maxval > 255) fail(ErrorCode::UnsupportedFormat, "16-bit PGM (maxval > 255) not supported");
  const std::size_t offset = header.raster_offset();
  const std::size_t expected = static_cast<std::size_t>(w) * h;
  if (bytes.size() < offset || bytes.size() - offset != expected) {
    fail(ErrorCode::DimensionMismatch, "PGM declares " + std::to_string(w) + "x" +
                                           std::to_string(h) + " but carries " +
                                           std::to_string(bytes.size() - std::min(offset, bytes.size())) +
                                           " raster bytes");
  }
  Raster r(h, w, 1, Modality::Generic);
  for (std::size_t i = 0; i < expected; ++i) {
    const std::uint8_t v = bytes[offset + i];
    if (v > maxval) fail(ErrorCode::MalformedHeader, "PGM sample exceeds maxval");
    r.data[i] = v;
  }
  return r;
}

void check_not_empty(const Raster& r) {
  if (r.height == 0 || r.width == 0 || r.channels == 0) {
    fail(ErrorCode::EmptyRaster, "raster has a zero dimension");
  }
}

Raster minmax_per_channel(Raster out) {
  const std::size_t c_count = out.channels;
  std::vector<double> lo(c_count, std::numeric_limits<double>::infinity());
  std::vector<double> hi(c_count, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const std::size_t c = i % c_count;
    lo[c] = std::min(lo[c], out.data[i]);
    hi[c] = std::max(hi[c], out.data[i]);
  }
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const std::size_t c = i % c_count;
    const double range = hi[c] - lo[c];
    out.data[i] = range > 0.0 ? (out.data[i] - lo[c]) / range : 0.0;
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::Optical: return "optical";
    case Modality::Sar: return "sar";
    case Modality::Generic: break;
  }
  return "generic";
}

Modality parse_modality(std::string_view name) {
  if (name == "optical") return Modality::Optical;
  if (name == "sar") return Modality::Sar;
  if (name == "generic") return Modality::Generic;
  fail(ErrorCode::InvalidConfig, "unknown modality '" + std::string(name) + "'");
}

void validate(const Raster& r) {
  check_not_empty(r);
  if (r.data.size() != r.height * r.width * r.channels) {
    fail(ErrorCode::ShapeMismatch, "raster payload length does not match its dimensions");
  }
  for (double v : r.data) {
    if (!std::isfinite(v)) fail(ErrorCode::NonFiniteValue, "raster contains NaN or Inf");
  }
}

Raster decode_raster(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kMmrMagic, 8) == 0) return decode_mmr(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pgm(bytes);
  fail(ErrorCode::UnsupportedFormat, "neither an MMR nor a binary PGM stream");
}

std::vector<std::uint8_t> encode_mmr(const Raster& r) {
  validate(r);
  std::vector<std::uint8_t> out(8);
  out.reserve(kMmrHeaderBytes + 8 * r.data.size());
  std::memcpy(out.data(), kMmrMagic, 8);
  put_u32(out, static_cast<std::uint32_t>(r.height));
  put_u32(out, static_cast<std::uint32_t>(r.width));
  put_u32(out, static_cast<std::uint32_t>(r.channels));
  out.push_back(static_cast<std::uint8_t>(r.modality));
  for (double v : r.data) put_f64(out, v);
  return out;
}

std::vector<std::uint8_t> encode_pgm(const Raster& r) {
  validate(r);
  if (r.channels != 1) fail(ErrorCode::PgmRequiresIntegerRange, "PGM holds one channel only");
  for (double v : r.data) {
    if (v < 0.0 || v > 255.0 || v != std::floor(v)) {
      fail(ErrorCode::PgmRequiresIntegerRange, "PGM samples must be integers in [0,255]");
    }
  }
  const std::string header =
      "P5\n" + std::to_string(r.width) + " " + std::to_string(r.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (double v : r.data) out.push_back(static_cast<std::uint8_t>(v));
  return out;
}

Raster load_raster(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return decode_raster(bytes);
}

void save_raster(const Raster& r, const std::filesystem::path& path, RasterFormat format) {
  const auto bytes = format == RasterFormat::Pgm ? encode_pgm(r) : encode_mmr(r);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoFailure, "short write to " + path.string());
}

Raster normalize_optical(const Raster& r) {
  validate(r);
  return minmax_per_channel(r);
}

Raster normalize_sar(const Raster& r) {
  validate(r);
  Raster out = r;
  for (double& v : out.data) {
    if (v < 0.0) fail(ErrorCode::NegativeSarValue, "SAR intensities must be nonnegative");
    v = std::log1p(v);
  }
  return minmax_per_channel(std::move(out));
}

Raster normalize(const Raster& r) {
  return r.modality == Modality::Sar ? normalize_sar(r) : normalize_optical(r);
}

Raster stack_channels(const Raster& x, const Raster& y) {
  check_not_empty(x);
  check_not_empty(y);
  if (x.height != y.height || x.width != y.width) {
    fail(ErrorCode::ShapeMismatch, "stacked rasters must share height and width");
  }
  Raster out(x.height, x.width, x.channels + y.channels, Modality::Generic);
  for (std::size_t p = 0; p < x.pixel_count(); ++p) {
    double* dst = out.data.data() + p * out.channels;
    std::copy_n(x.data.data() + p * x.channels, x.channels, dst);
    std::copy_n(y.data.data() + p * y.channels, y.channels, dst + x.channels);
  }
  return out;
}

}  // namespace mmcd
