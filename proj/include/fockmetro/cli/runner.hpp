#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "fockmetro/cli/cache.hpp"
#include "fockmetro/cli/config.hpp"
#include "fockmetro/fock.hpp"

namespace fockmetro::cli {

enum ExitCode { kExitOk = 0, kExitPartial = 2, kExitConfig = 3 };

struct RunOptions {
  std::optional<std::string> out_dir;  // overrides config.output
  std::optional<int> workers;          // overrides config.workers
  bool allow_long = false;
  std::optional<std::string> cache_dir;  // overrides the environment default
  std::ostream* log = nullptr;           // defaults to std::cerr
};

// seconds; coarse model calibrated on a single core
double estimate_runtime_seconds(const SweepConfig& config);
inline constexpr double kLongRunSeconds = 900.0;

int run(const SweepConfig& config, const RunOptions& options);

// A state built for one sweep point, with its bookkeeping.
struct PreparedState {
  std::optional<PureState> pure;
  std::optional<MixedState> mixed;
  int dim_lo = 0;
  int dim_p = 0;  // 0: single mode
  double parameter = 0.0;  // alpha, r, gamma, kappa or Fock level
  double occupation = 0.0;
  double pump_occupation = 0.0;
  double tail_lo = 0.0;
  double tail_p = 0.0;

  bool is_pure() const { return pure.has_value(); }
  int dim() const { return pure ? pure->dim() : mixed->dim(); }
  MixedState as_mixed() const;
};

// nbar target, or the family's explicit parameter when nbar is empty
PreparedState prepare_state(const FamilySpec& family, std::optional<double> nbar, const Truncation& trunc,
                            const Cache& cache);

std::string serialize_state(const PreparedState& s);
PreparedState deserialize_state(const std::string& payload);

}  // namespace fockmetro::cli
