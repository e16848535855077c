#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace qrck {

/// Base class of every error raised by the library. Each subclass maps to a
/// distinct process exit code in the command-line driver.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotHermitian : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NonRealResult : public Error {
 public:
  using Error::Error;
};

class NotOrthogonal : public Error {
 public:
  using Error::Error;
};

class AncillaPresent : public Error {
 public:
  using Error::Error;
};

/// A value outside its documented range. `index()` carries the offending
/// sample position when the value came from a sequence.
class RangeViolation : public Error {
 public:
  explicit RangeViolation(const std::string& what,
                          std::optional<std::size_t> index = std::nullopt)
      : Error(what), index_(index) {}
  std::optional<std::size_t> index() const { return index_; }

 private:
  std::optional<std::size_t> index_;
};

class BadMagic : public Error {
 public:
  using Error::Error;
};

class TruncatedFile : public Error {
 public:
  using Error::Error;
};

class CountMismatch : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what + " (line " + std::to_string(line) + ", column " +
              std::to_string(column) + ")"),
        line_(line),
        column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class ValidationError : public Error {
 public:
  ValidationError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace qrck
