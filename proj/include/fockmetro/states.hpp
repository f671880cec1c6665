#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "fockmetro/fock.hpp"

namespace fockmetro {

struct MthPhaseSpec {
  int m = 3;
  double gamma = 0.0;
  void validate() const;
};

struct MultisqueezedSpec {
  int m = 3;
  double kappa = 0.0;
  double alpha = 0.0;
  void validate() const;
};

enum class GaussianKind { Coherent, SqueezedVacuum };

struct GaussianSpec {
  GaussianKind kind = GaussianKind::Coherent;
  double amplitude = 0.0;
};

struct NaiveMultisqueezedSpec {
  int m = 3;
  double xi = 0.0;
};

// dims tried: start, 2 start, 4 start, ... up to max_dim
struct DimLadder {
  int start = 32;
  int max_dim = 1 << 19;
  double tail_tol = 1e-17;
  int tail_window = 2;

  static DimLadder for_occupation(double nbar_expected);
  std::vector<int> dims(int align = 1) const;
};

PureState coherent_state(double alpha, const TruncationPolicy& policy);
PureState squeezed_vacuum(double r, const TruncationPolicy& policy);
PureState gaussian_state(const GaussianSpec& spec, const TruncationPolicy& policy);
double squeezing_for_occupation(double nbar);

enum class MthPhaseMethod { Auto, Exponential, Projection };

PureState mth_phase_state(const MthPhaseSpec& spec, const TruncationPolicy& policy,
                          MthPhaseMethod method = MthPhaseMethod::Auto);
double gamma_for_occupation(int m, double nbar);
double mth_phase_occupation_closed(int m, double gamma);

// c_n = <n| e^{i g x^m} |0> for n < count, by trapezoid projection in position space
CVec mth_phase_projection(int m, double gamma, int count);

// first converged dim of the ladder; rethrows the last failure when the cap is hit
PureState build_on_ladder(const DimLadder& ladder,
                          const std::function<PureState(const TruncationPolicy&)>& builder);
PureState coherent_for_occupation(double nbar, const DimLadder& ladder);
PureState squeezed_for_occupation(double nbar, const DimLadder& ladder);
PureState mth_phase_for_occupation(int m, double nbar, const DimLadder& ladder);

struct NaiveMultisqueezedResult {
  PureState state;
  double occupation;
  bool diagnostic = true;
};

NaiveMultisqueezedResult multisqueezed_naive(const NaiveMultisqueezedSpec& spec,
                                             const TruncationPolicy& policy);

int pump_dim_default(double alpha);

// Exact exponential of the truncated two-mode generator, split into
// blocks of conserved n_lo + m n_p. Block eigensystems do not depend on
// kappa, so repeated evaluation along a kappa scan is cheap.
class MultisqueezedGenerator {
 public:
  MultisqueezedGenerator(int m, double alpha, const TruncationPolicy& policy_lo,
                         const TruncationPolicy& policy_p);

  int m() const { return m_; }
  double alpha() const { return alpha_; }
  const TruncationPolicy& policy_lo() const { return policy_lo_; }
  const TruncationPolicy& policy_p() const { return policy_p_; }

  // real amplitude matrix psi(n_lo, n_p)
  RMat amplitudes(double kappa) const;
  double occupation_lo(double kappa) const;
  TwoModeState two_mode(double kappa) const;

 private:
  struct Block {
    int j = 0;          // initial pump level
    double weight = 0;  // pump amplitude <j|alpha>
    RVec values;
    RMat vectors;
  };
  RVec block_coefficients(const Block& b, double kappa) const;

  int m_;
  double alpha_;
  TruncationPolicy policy_lo_, policy_p_;
  std::vector<Block> blocks_;
};

TruncationPolicy multisqueezed_lo_policy(int m, int dim, double tail_tol = 1e-17);
TruncationPolicy multisqueezed_pump_policy(double alpha, int dim = 0, double tail_tol = 1e-17);

// two-mode state, both marginal tails verified
TwoModeState multisqueezed_two_mode(const MultisqueezedSpec& spec, const TruncationPolicy& policy_lo,
                                    const TruncationPolicy& policy_p);
MixedState multisqueezed_pumped(const MultisqueezedSpec& spec, const TruncationPolicy& policy_lo,
                                const TruncationPolicy& policy_p);

struct KappaSolveOptions {
  double rel_tol = 1e-6;
  double kappa_start = 1e-6;
  double growth = 1.5;
};

double kappa_for_occupation(const MultisqueezedGenerator& gen, double nbar_target,
                            const KappaSolveOptions& opt = {});
double kappa_for_occupation(int m, double alpha, double nbar_target, const TruncationPolicy& policy_lo,
                            const TruncationPolicy& policy_p, const KappaSolveOptions& opt = {});

struct MultisqueezedPoint {
  double kappa = 0.0;
  double occupation = 0.0;
  double pump_occupation = 0.0;
  int dim_lo = 0;
  int dim_p = 0;
  double tail_lo = 0.0;
  double tail_p = 0.0;
  MixedState state;
};

// ladder over LO dims at the given target occupation, kappa re-solved per dim
MultisqueezedPoint multisqueezed_for_occupation(int m, double alpha, double nbar, const DimLadder& ladder,
                                                int pump_dim = 0);

}  // namespace fockmetro
