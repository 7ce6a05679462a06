#pragma once

#include <stdexcept>
#include <string>

namespace hetlb {

enum class ErrorKind {
  InvalidConfig,
  DegenerateGeometry,
  InvalidArgument,
  ContractViolation,
  Convergence,
  SizeGuard,
  InvalidPrediction,
  Integrity,
  Shape,
  ModelMismatch,
  Schema,
  Numeric,
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

}  // namespace hetlb
