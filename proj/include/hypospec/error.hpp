#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hypospec {

// Status values mirror hs_status in the C header.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kParse = 2,
  kConfig = 3,
  kHormanderFailure = 4,
  kNumerical = 5,
  kDimension = 6,
  kIo = 7,
  kInternal = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorCode::kParse, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCode::kConfig, what) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(ErrorCode::kDimension, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorCode::kNumerical, what) {}
};

/// Raised when the brackets of the fields fail to span the tangent space at
/// `point` within the configured depth.
class HormanderFailure : public Error {
 public:
  HormanderFailure(std::vector<double> point, const std::string& what)
      : Error(ErrorCode::kHormanderFailure, what), point_(std::move(point)) {}
  const std::vector<double>& point() const noexcept { return point_; }

 private:
  std::vector<double> point_;
};

}  // namespace hypospec
