#pragma once

#include <stdexcept>
#include <string>

namespace fractalnet {

// Caller passed a value outside an operation's domain.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A file could not be opened or read.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed content in an otherwise readable input.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Floating-point computation produced a non-finite or degenerate result.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Not enough data points for a statistic (scales, samples, buckets).
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fractalnet
