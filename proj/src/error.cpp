#include "famsec/error.hpp"

namespace famsec {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InvalidState: return "InvalidState";
    case ErrorKind::MissingState: return "MissingState";
    case ErrorKind::InvalidTask: return "InvalidTask";
    case ErrorKind::GenerationFailed: return "GenerationFailed";
    case ErrorKind::EmptySamples: return "EmptySamples";
    case ErrorKind::InvalidDist: return "InvalidDist";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::BinMismatch: return "BinMismatch";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorKind::CorruptFile: return "CorruptFile";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::MissingSurrogate: return "MissingSurrogate";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::Conflict: return "Conflict";
  }
  return "Unknown";
}

bool is_validation_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::GenerationFailed:
    case ErrorKind::NotFound:
    case ErrorKind::Conflict:
      return false;
    default:
      return true;
  }
}

}  // namespace famsec
