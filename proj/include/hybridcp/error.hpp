#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hybridcp {

/// Bad call: wrong sizes, out-of-range parameters, mismatched dims.
class ArgumentError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Input data that cannot be processed (non-finite values, empty observations).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A CP component whose factor column vanished; the caller drops it.
class DegenerateComponentError : public std::runtime_error {
public:
  DegenerateComponentError(std::size_t component, char factor)
    : std::runtime_error(std::string("zero column in factor ") + factor + " for component " +
                         std::to_string(component)),
      component_(component), factor_(factor) {}

  std::size_t component() const noexcept { return component_; }
  char factor() const noexcept { return factor_; }

private:
  std::size_t component_;
  char factor_;
};

/// Linear system too close to singular to solve without damping.
class NumericalRankError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed file contents. `offset` is the byte position where parsing failed.
class ParseError : public DataError {
public:
  ParseError(const std::string& what, std::size_t offset)
    : DataError(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

/// File does not start with the expected magic bytes.
class FormatError : public DataError {
public:
  using DataError::DataError;
};

} // namespace hybridcp
