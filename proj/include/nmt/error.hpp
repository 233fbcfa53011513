#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nmt {

enum class ErrorKind {
  EmptySequence,
  MalformedFasta,
  LabelOutOfRange,
  ParseError,
  ConfigError,
  ShapeError,
  DegenerateRow,
  NumericalError,
  NoNegativesAvailable,
  MissingEmbedding,
  UnknownId,
  FormatError,
  CheckpointNotFound,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Process exit code for an error kind: 2 parse/config, 3 numerical, 4 missing resource.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace nmt
