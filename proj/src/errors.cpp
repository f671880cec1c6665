#include "fockmetro/errors.hpp"

#include <sstream>

namespace fockmetro {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidDimension: return "invalid-dimension";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::ContractViolation: return "contract-violation";
    case ErrorKind::ConvergenceFailure: return "convergence-failure";
    case ErrorKind::UnconvergedTruncation: return "unconverged-truncation";
    case ErrorKind::DomainError: return "domain-error";
    case ErrorKind::InvalidState: return "invalid-state";
    case ErrorKind::NumericalIntegrity: return "numerical-integrity";
    case ErrorKind::TargetUnreachable: return "target-unreachable";
    case ErrorKind::SingularSensitivity: return "singular-sensitivity";
    case ErrorKind::PreconditionViolated: return "precondition-violated";
    case ErrorKind::NoCrossing: return "no-crossing-in-range";
    case ErrorKind::DegenerateInput: return "degenerate-input";
    case ErrorKind::ConfigError: return "config-error";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

namespace {
std::string unconverged_message(const std::string& mode, int dim, double tail, double tol) {
  std::ostringstream os;
  os << mode << " mode tail population " << tail << " exceeds " << tol << " at dim " << dim;
  return os.str();
}
}  // namespace

UnconvergedTruncation::UnconvergedTruncation(std::string mode, int dim, double tail, double tol)
    : Error(ErrorKind::UnconvergedTruncation, unconverged_message(mode, dim, tail, tol)),
      mode_(std::move(mode)),
      dim_(dim),
      tail_(tail) {}

TargetUnreachable::TargetUnreachable(double target, double max_occupation)
    : Error(ErrorKind::TargetUnreachable,
            "occupation " + std::to_string(target) + " above reachable maximum " +
                std::to_string(max_occupation)),
      max_occupation_(max_occupation) {}

NoCrossing::NoCrossing(double s_max, double g_at_s_max)
    : Error(ErrorKind::NoCrossing, "no sign change up to s=" + std::to_string(s_max) +
                                       ", g(s_max)=" + std::to_string(g_at_s_max)),
      g_(g_at_s_max) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace fockmetro
