#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fockmetro/fock.hpp"
#include "fockmetro/metrology.hpp"

namespace fockmetro {

enum class ChannelKind { PureDephasing, ZeroTempDamping };

struct ChannelSpec {
  ChannelKind kind = ChannelKind::PureDephasing;
  double s = 0.0;
};

const char* to_string(ChannelKind kind);
ChannelKind channel_from_string(const std::string& name);

struct CriticalStrengthResult {
  double s_c = 0.0;
  double occupation = 0.0;
  StateLabel state_label;
  std::pair<double, double> bracket{0.0, 0.0};
  bool found = false;
  int evaluations = 0;
};

struct DampingOutput {
  MixedState state;
  // population of the input's top window, bounding the unrepresented terms of the sum
  double error_budget = 0.0;
};

MixedState apply_dephasing(const MixedState& rho, double s);
DampingOutput apply_damping_with_budget(const MixedState& rho, double s);
MixedState apply_damping(const MixedState& rho, double s);
MixedState apply_channel(const MixedState& rho, const ChannelSpec& spec);

std::vector<OperatorMatrix> kraus_damping(int dim, double s);
MixedState apply_kraus(const MixedState& rho, const std::vector<OperatorMatrix>& kraus);

struct CriticalOptions {
  double s_min = 1e-4;
  double s_max = 10.0;
  double scan_factor = 2.0;
  double tol = 1e-4;
  QfiMixedOptions qfi;
};

// g(s) = F(Phi_s(ng)) - F(Phi_s(ref)); first crossing of zero
CriticalStrengthResult critical_strength(const MixedState& ng, const MixedState& ref, ChannelKind kind,
                                         const CriticalOptions& opt = {});

double channel_qfi(const MixedState& rho, const ChannelSpec& spec, const QfiMixedOptions& opt = {});

// columns E_k W of the Kraus-applied factor; trailing columns whose summed
// weight stays below drop_tol are omitted and their weight returned
struct KrausFactor {
  CMat factor;
  double dropped = 0.0;
};
KrausFactor damping_factor(const CMat& w, double s, double drop_tol = 1e-16);

// Leading Fock block of a pure state used as the working space of channel
// computations: the smallest dim from `start` (doubling, capped by the state
// dim and max_dim) whose renormalized noiseless QFI is within rel_tol of the
// full state's.
struct ChannelBlock {
  MixedState state;
  int dim = 0;
  double dropped = 0.0;   // population outside the block
  double qfi_rel_err = 0.0;
};
struct ChannelBlockOptions {
  int start = 256;
  int max_dim = 2048;
  double rel_tol = 1e-5;
};
ChannelBlock channel_block(const PureState& psi, const ChannelBlockOptions& opt = {});

struct ScPointOutcome {
  CriticalStrengthResult result;
  std::string error;  // empty on success
};

using StatePairFactory = std::function<std::pair<MixedState, MixedState>(double nbar)>;

std::vector<ScPointOutcome> sc_sweep(const StatePairFactory& factory, ChannelKind kind,
                                     const std::vector<double>& grid, const CriticalOptions& opt = {});

}  // namespace fockmetro
