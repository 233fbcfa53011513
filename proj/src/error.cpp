#include "nmt/error.hpp"

namespace nmt {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::EmptySequence: return "EmptySequence";
    case ErrorKind::MalformedFasta: return "MalformedFasta";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::DegenerateRow: return "DegenerateRow";
    case ErrorKind::NumericalError: return "NumericalError";
    case ErrorKind::NoNegativesAvailable: return "NoNegativesAvailable";
    case ErrorKind::MissingEmbedding: return "MissingEmbedding";
    case ErrorKind::UnknownId: return "UnknownId";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::CheckpointNotFound: return "CheckpointNotFound";
    case ErrorKind::IoError: return "IoError";
  }
  return "Error";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::EmptySequence:
    case ErrorKind::MalformedFasta:
    case ErrorKind::LabelOutOfRange:
    case ErrorKind::ParseError:
    case ErrorKind::ConfigError:
    case ErrorKind::FormatError:
      return 2;
    case ErrorKind::ShapeError:
    case ErrorKind::DegenerateRow:
    case ErrorKind::NumericalError:
      return 3;
    case ErrorKind::NoNegativesAvailable:
    case ErrorKind::MissingEmbedding:
    case ErrorKind::UnknownId:
    case ErrorKind::CheckpointNotFound:
    case ErrorKind::IoError:
      return 4;
  }
  return 1;
}

}  // namespace nmt
