#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <complex>
#include <optional>
#include <utility>
#include <vector>

namespace fockmetro {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<cplx>;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kNormTol = 1e-12;

struct TruncationPolicy {
  int dim = 2;
  double tail_tol = 1e-17;
  int tail_window = 2;
  std::optional<int> align_multiple;

  void validate() const;
  TruncationPolicy with_dim(int d) const;
};

class OperatorMatrix {
 public:
  OperatorMatrix() = default;
  explicit OperatorMatrix(SpMat entries);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const SpMat& sparse() const { return entries_; }
  CMat dense() const { return CMat(entries_); }
  bool hermitian() const { return hermitian_; }
  // max |i - j| over stored entries
  int bandwidth() const;

  OperatorMatrix adjoint() const;
  CVec apply(const CVec& v) const { return entries_ * v; }
  CMat apply(const CMat& v) const { return entries_ * v; }
  cplx operator()(int row, int col) const { return entries_.coeff(row, col); }

  friend OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b);
  friend OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b);
  friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b);
  friend OperatorMatrix operator*(cplx s, const OperatorMatrix& a);

 private:
  SpMat entries_;
  bool hermitian_ = false;
};

double hermitian_residue(const SpMat& a);

class PureState {
 public:
  // amplitudes must already be normalized
  PureState(CVec amplitudes, TruncationPolicy policy);
  static PureState normalized(CVec amplitudes, TruncationPolicy policy);

  int dim() const { return static_cast<int>(amplitudes_.size()); }
  const CVec& amplitudes() const { return amplitudes_; }
  const TruncationPolicy& policy() const { return policy_; }
  double tail() const { return tail_; }
  bool converged() const { return tail_ <= policy_.tail_tol; }

 private:
  CVec amplitudes_;
  TruncationPolicy policy_;
  double tail_ = 0.0;
};

// rho, optionally with a factor W such that rho = W W^dagger
class MixedState {
 public:
  MixedState() = default;
  MixedState(CMat rho, TruncationPolicy policy);
  static MixedState from_factor(CMat factor, TruncationPolicy policy);
  static MixedState from_pure(const PureState& psi);

  int dim() const { return static_cast<int>(rho_.rows()); }
  const CMat& rho() const { return rho_; }
  const std::optional<CMat>& factor() const { return factor_; }
  const TruncationPolicy& policy() const { return policy_; }
  double tail() const { return tail_; }
  bool converged() const { return tail_ <= policy_.tail_tol; }
  // W with rho = W W^dagger; eigendecomposes when no factor is stored
  CMat factorize() const;

 private:
  void check_and_measure();

  CMat rho_;
  std::optional<CMat> factor_;
  TruncationPolicy policy_;
  double tail_ = 0.0;
};

class TwoModeState {
 public:
  // index n_lo * dim_p + n_p
  TwoModeState(CVec amplitudes, TruncationPolicy policy_lo, TruncationPolicy policy_p);

  int dim_lo() const { return policy_lo_.dim; }
  int dim_p() const { return policy_p_.dim; }
  const CVec& amplitudes() const { return amplitudes_; }
  const TruncationPolicy& policy_lo() const { return policy_lo_; }
  const TruncationPolicy& policy_p() const { return policy_p_; }
  RVec marginal_lo() const;
  RVec marginal_p() const;
  double tail_lo() const { return tail_lo_; }
  double tail_p() const { return tail_p_; }
  bool converged() const {
    return tail_lo_ <= policy_lo_.tail_tol && tail_p_ <= policy_p_.tail_tol;
  }
  // amplitudes viewed as a dim_lo x dim_p matrix
  CMat as_matrix() const;

 private:
  CVec amplitudes_;
  TruncationPolicy policy_lo_, policy_p_;
  double tail_lo_ = 0.0, tail_p_ = 0.0;
};

OperatorMatrix annihilation_op(int dim);
OperatorMatrix creation_op(int dim);
OperatorMatrix number_op(int dim);
OperatorMatrix identity_op(int dim);
std::pair<OperatorMatrix, OperatorMatrix> quadratures(int dim);
OperatorMatrix symmetrized_word(int i, int j, int dim);
OperatorMatrix tensor(const OperatorMatrix& a, const OperatorMatrix& b);
MixedState partial_trace_pump(const TwoModeState& state);

cplx expectation(const OperatorMatrix& op, const PureState& state);
cplx expectation(const OperatorMatrix& op, const MixedState& state);
double variance(const OperatorMatrix& op, const PureState& state);
double variance(const OperatorMatrix& op, const MixedState& state);

double tail_population(const RVec& populations, int window);
double tail_population(const PureState& state);
double tail_population(const MixedState& state);

enum class ExpMethod { Auto, Dense, Krylov };

struct ExpOptions {
  ExpMethod method = ExpMethod::Auto;
  int dense_threshold = 2000;
  double krylov_tol = 1e-12;
  int krylov_subspace = 40;
  long max_iterations = 2'000'000;
};

// e^{i phase H} v
CVec expm_apply(const OperatorMatrix& h, double phase, const CVec& v, const ExpOptions& opt = {});
PureState hermitian_exp_apply(const OperatorMatrix& h, double phase, const PureState& state,
                              const ExpOptions& opt = {});
TwoModeState hermitian_exp_apply(const OperatorMatrix& h, double phase, const TwoModeState& state,
                                 const ExpOptions& opt = {});

// Lanczos exponential action; exposed for cross-method checks
CVec krylov_expv(const SpMat& h, double phase, const CVec& v, double tol, int subspace,
                 long max_iterations);

// 0.5 * sum |eig(a - b)|
double trace_distance(const CMat& a, const CMat& b);

}  // namespace fockmetro
