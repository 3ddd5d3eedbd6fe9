// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mmcd {

enum class ErrorCode {
  MalformedHeader,
  DimensionMismatch,
  UnsupportedFormat,
  NonFiniteValue,
  IoFailure,
  PgmRequiresIntegerRange,
  NegativeSarValue,
  ShapeMismatch,
  EmptyRaster,
  BadObjectId,
  WrongHead,
  EmptyTrainingSet,
  ObjectCountMismatch,
  KTooLarge,
  BadNeighbor,
  BothVariancesZero,
  ConstantImage,
  EmptyCounts,
  SingleClassReference,
  ChangeFractionUnreachable,
  InvalidConfig,
};

std::string_view to_string(ErrorCode code);

// Every failure in the library surfaces as an Error; the CLI prints
// `error: <Code>: <message>` on stderr.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace mmcd
