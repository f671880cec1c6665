#pragma once

#include <stdexcept>
#include <string>

namespace fockmetro {

enum class ErrorKind {
  InvalidDimension,
  DimensionMismatch,
  ContractViolation,
  ConvergenceFailure,
  UnconvergedTruncation,
  DomainError,
  InvalidState,
  NumericalIntegrity,
  TargetUnreachable,
  SingularSensitivity,
  PreconditionViolated,
  NoCrossing,
  DegenerateInput,
  ConfigError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// mode is "single", "lo" or "pump"
class UnconvergedTruncation : public Error {
 public:
  UnconvergedTruncation(std::string mode, int dim, double tail, double tol);
  const std::string& mode() const noexcept { return mode_; }
  int dim() const noexcept { return dim_; }
  double tail() const noexcept { return tail_; }

 private:
  std::string mode_;
  int dim_;
  double tail_;
};

class TargetUnreachable : public Error {
 public:
  TargetUnreachable(double target, double max_occupation);
  double max_occupation() const noexcept { return max_occupation_; }

 private:
  double max_occupation_;
};

class NoCrossing : public Error {
 public:
  NoCrossing(double s_max, double g_at_s_max);
  double g_at_s_max() const noexcept { return g_; }

 private:
  double g_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace fockmetro
