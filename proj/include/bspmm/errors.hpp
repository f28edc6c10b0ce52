// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bspmm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sparse structure violates its invariants (index out of bounds, duplicates).
struct FormatError : Error {
  using Error::Error;
};

struct ShapeError : Error {
  using Error::Error;
};

struct ParameterError : Error {
  using Error::Error;
};

struct PlanError : Error {
  using Error::Error;
};

struct UsageError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

/// MatrixMarket parse failure; carries the 1-based line of the offending input.
struct ParseError : Error {
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A broken internal invariant (a bug, not bad input).
struct InternalError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace bspmm
