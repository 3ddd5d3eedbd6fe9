// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmcd/error.hpp"

namespace mmcd {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::PgmRequiresIntegerRange: return "PgmRequiresIntegerRange";
    case ErrorCode::NegativeSarValue: return "NegativeSarValue";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyRaster: return "EmptyRaster";
    case ErrorCode::BadObjectId: return "BadObjectId";
    case ErrorCode::WrongHead: return "WrongHead";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::ObjectCountMismatch: return "ObjectCountMismatch";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::BadNeighbor: return "BadNeighbor";
    case ErrorCode::BothVariancesZero: return "BothVariancesZero";
    case ErrorCode::ConstantImage: return "ConstantImage";
    case ErrorCode::EmptyCounts: return "EmptyCounts";
    case ErrorCode::SingleClassReference: return "SingleClassReference";
    case ErrorCode::ChangeFractionUnreachable: return "ChangeFractionUnreachable";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace mmcd
