#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace skillscale {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A request cannot be satisfied with the available combinatorial capacity
/// (e.g. too many disjoint sparse-bit subsets, too large a basis).
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent or malformed configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Exact enumeration would exceed the 2^20 input budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

/// Tensor or vector dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Too few points to fit or calibrate.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure produced non-finite values or diverged.
class NumericError : public Error {
 public:
  using Error::Error;
};

using WarningSink = std::function<void(std::string_view)>;

/// Non-fatal diagnostics (clamped arguments, ignored parameters). The default
/// sink writes one line to stderr. Not thread-safe to replace while in use.
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

}  // namespace skillscale
