#pragma once

#include <stdexcept>
#include <string>

namespace thg {

/// Raised when a constructor or operation receives arguments outside its domain.
class InvalidParameter : public std::invalid_argument {
 public:
  explicit InvalidParameter(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised for a time outside the schedule bounds or a reversed step interval.
class TimeRangeError : public std::out_of_range {
 public:
  explicit TimeRangeError(const std::string& what) : std::out_of_range(what) {}
};

class DimensionMismatch : public std::invalid_argument {
 public:
  explicit DimensionMismatch(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace thg
