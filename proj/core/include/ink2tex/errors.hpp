#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ink2tex {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed XML. `offset` is the byte offset where parsing failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset);
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Well-formed input whose content violates a file format. `line` is 1-based, 0 when not
/// line oriented.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what, std::size_t line = 0);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

/// Operand shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition (e.g. backward from a non-scalar).
class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Model container errors. Each one names what went wrong so callers can tell them apart.

class ModelFormatError : public Error {
 public:
  using Error::Error;
};

class VersionMismatchError : public ModelFormatError {
 public:
  VersionMismatchError(std::uint32_t found, std::uint32_t expected);
};

class MissingKeyError : public ModelFormatError {
 public:
  explicit MissingKeyError(const std::string& key);
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class ShapeMismatchError : public ModelFormatError {
 public:
  ShapeMismatchError(const std::string& key, const std::string& found, const std::string& expected);
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class TruncatedError : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};

}  // namespace ink2tex
