#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crowdflow {

/// A caller supplied a value outside an operation's contract.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed byte input. Carries the offset at which decoding failed.
class DecodeError : public std::runtime_error {
 public:
  DecodeError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        message_(what),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }
  /// what() without the offset suffix.
  const std::string& message() const { return message_; }

 private:
  std::string message_;
  std::size_t offset_;
};

/// A file could not be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration failed validation; names the offending field.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& field, const std::string& why)
      : std::runtime_error(field + ": " + why), field_(field) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace crowdflow
