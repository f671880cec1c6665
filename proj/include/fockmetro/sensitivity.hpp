#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "fockmetro/fock.hpp"

namespace fockmetro {

struct ObservablePool {
  int order = 0;
  int dim = 0;
  std::vector<OperatorMatrix> members;
  std::vector<std::pair<int, int>> labels;  // (power of x, power of p)
};

struct OptimalObservable {
  RVec coefficients;
  int pool_order = 0;
  int pool_dim = 0;
  double theta = 0.0;
};

struct SensitivityResult {
  double sensitivity = 0.0;
  double occupation = 0.0;
  double qfi_same_state = 0.0;
  double qfi_squeezed_ref = 0.0;
  double ratio_R = 0.0;
  double ratio_R1 = 0.0;
  double ratio_R2 = 0.0;
  double theta = 0.0;
  bool no_phase_information = false;
};

// Members are exact on states of dim <= pool.dim - order: each word raises
// the Fock index by at most `order`.
ObservablePool build_pool(int k, int dim);
ObservablePool build_pool_for_state(int k, int state_dim);
int pool_size(int k);

// state embedded into dim `target` with zero padding; result is a factor W, rho = W W^dagger
CMat padded_factor(const MixedState& rho, int target);
CMat padded_factor(const PureState& psi, int target);

RVec q_vector(const ObservablePool& pool, const MixedState& rho, const std::optional<OperatorMatrix>& h = std::nullopt);
RMat covariance_matrix(const ObservablePool& pool, const MixedState& rho);

struct OptimalOptions {
  double pinv_tol = 1e-10;
  double theta = 0.0;
  // relative agreement demanded between q^T G^+ q and the direct evaluation on M
  double recheck_tol = 1e-6;
  bool compute_qfi = true;
};

std::pair<OptimalObservable, SensitivityResult> optimal_sensitivity(
    const ObservablePool& pool, const MixedState& rho, const std::optional<OperatorMatrix>& h = std::nullopt,
    const OptimalOptions& opt = {});
std::pair<OptimalObservable, SensitivityResult> optimal_sensitivity(
    const ObservablePool& pool, const PureState& psi, const std::optional<OperatorMatrix>& h = std::nullopt,
    const OptimalOptions& opt = {});

struct FixedOptions {
  bool maximize_theta = false;
  double theta = 0.0;
  int scan_points = 720;
  double theta_tol = 1e-8;
  // central finite-difference derivative for validation; 0 disables
  double fd_step = 0.0;
};

// A must be exact on the support of rho and A^2 on its span; callers build A at
// dim >= rho.dim() + 2 * degree.
SensitivityResult sensitivity_fixed(const OperatorMatrix& a, const MixedState& rho, const FixedOptions& opt = {});
SensitivityResult sensitivity_fixed(const OperatorMatrix& a, const PureState& psi, const FixedOptions& opt = {});

struct FixedObservables {
  OperatorMatrix b3p;
  OperatorMatrix b4p;
  OperatorMatrix bms;
};

FixedObservables fixed_observables(int dim, int m = 3);

// e^{-i theta n} rho e^{i theta n}
MixedState rotate(const MixedState& rho, double theta);

}  // namespace fockmetro
