#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace randlr {

using Index = std::int64_t;

// Unit roundoff of IEEE double precision.
inline constexpr double kUnitRoundoff = 0x1p-53;

// Inner dimensions disagree, input not square where required, rank out of
// range, and similar shape/precondition failures.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// File and format problems (missing file, bad container, malformed input).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Iteration caps exceeded, exactly singular triangular solves, and other
// conditions that signal a kernel-level failure rather than bad input shape.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace randlr
