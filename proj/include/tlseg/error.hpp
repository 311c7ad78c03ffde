#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tlseg {

// An argument violates an operation's precondition.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data could not be used: unreadable files, bad rasters, bad documents.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file is readable but uses an encoding we do not support.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

// Malformed text input; carries the 1-based position of the problem.
class ParseError : public DataError {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : DataError(message + " (line " + std::to_string(line) + ", column " +
                  std::to_string(column) + ")"),
        message_(message),
        line_(line),
        column_(column) {}

  const std::string& message() const noexcept { return message_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::string message_;
  std::size_t line_;
  std::size_t column_;
};

// A numerical procedure produced a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tlseg
