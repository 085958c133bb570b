#include "fbf/error.hpp"

namespace fbf {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::ZeroMeasure: return "ZeroMeasure";
    case ErrorCode::SpaceMismatch: return "SpaceMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::TriangleViolation: return "TriangleViolation";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::CannotReachRank: return "CannotReachRank";
    case ErrorCode::TooFewScales: return "TooFewScales";
    case ErrorCode::EmptyBall: return "EmptyBall";
    case ErrorCode::AllZeroHits: return "AllZeroHits";
    case ErrorCode::UnderResolved: return "UnderResolved";
    case ErrorCode::RangeViolation: return "RangeViolation";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::QuadratureFailure:
    case ErrorCode::NotPSD:
    case ErrorCode::RankDeficient:
    case ErrorCode::CannotReachRank:
    case ErrorCode::AllZeroHits:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace fbf
