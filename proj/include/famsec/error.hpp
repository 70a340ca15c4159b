#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace famsec {

enum class ErrorKind {
  InvalidSpec,
  InvalidState,
  MissingState,
  InvalidTask,
  GenerationFailed,
  EmptySamples,
  InvalidDist,
  InvalidConfig,
  BinMismatch,
  SchemaMismatch,
  SchemaVersionMismatch,
  CorruptFile,
  LengthMismatch,
  MissingSurrogate,
  InvalidArgument,
  NotFound,
  Conflict,
};

std::string_view to_string(ErrorKind kind);

/// Validation errors come from bad input; everything else is a runtime failure.
bool is_validation_error(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace famsec
