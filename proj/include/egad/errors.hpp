#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace egad {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class MalformedGraphError : public Error {
 public:
  using Error::Error;
};

class EmptyEventError : public Error {
 public:
  using Error::Error;
};

class WindowUnderflowError : public Error {
 public:
  using Error::Error;
};

class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

class DegenerateSoftmaxError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class InsufficientLinksError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class DuplicateEdgeError : public Error {
 public:
  using Error::Error;
};

/// Text input error that remembers the offending line (1-based, 0 if unknown).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, const std::string& file = {})
      : Error(format(what, line, file)), message_(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& message() const noexcept { return message_; }

 private:
  static std::string format(const std::string& what, std::size_t line, const std::string& file) {
    std::string out = file.empty() ? std::string() : file + ":";
    if (line) out += std::to_string(line) + ":";
    return out.empty() ? what : out + " " + what;
  }
  std::string message_;
  std::size_t line_;
};

}  // namespace egad
