#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fbf {

enum class ErrorCode {
  LengthMismatch,
  NegativeWeight,
  ZeroMeasure,
  SpaceMismatch,
  DimensionMismatch,
  OutOfRange,
  TriangleViolation,
  QuadratureFailure,
  NotPSD,
  RankDeficient,
  CannotReachRank,
  TooFewScales,
  EmptyBall,
  AllZeroHits,
  UnderResolved,
  RangeViolation,
  GridMismatch,
  InvalidConfig,
  Io,
};

std::string_view to_string(ErrorCode code);

// Numerical failures (as opposed to invalid input) map to CLI exit status 3.
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace fbf
