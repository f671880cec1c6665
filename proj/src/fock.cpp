#include "fockmetro/fock.hpp"

#include <algorithm>
#include <cmath>

#include "fockmetro/errors.hpp"
#include "fockmetro/linalg.hpp"

namespace fockmetro {

void TruncationPolicy::validate() const {
  if (dim < 2) fail(ErrorKind::InvalidDimension, "dim must be >= 2, got " + std::to_string(dim));
  if (!(tail_tol > 0.0)) fail(ErrorKind::DomainError, "tail_tol must be positive");
  if (tail_window < 1 || tail_window >= dim)
    fail(ErrorKind::DomainError, "tail_window must lie in [1, dim)");
  if (align_multiple) {
    if (*align_multiple < 1) fail(ErrorKind::DomainError, "align_multiple must be positive");
    if (dim % *align_multiple != 0)
      fail(ErrorKind::InvalidDimension, "dim " + std::to_string(dim) + " not a multiple of " +
                                            std::to_string(*align_multiple));
  }
}

TruncationPolicy TruncationPolicy::with_dim(int d) const {
  TruncationPolicy p = *this;
  p.dim = d;
  return p;
}

double hermitian_residue(const SpMat& a) {
  SpMat diff = a - SpMat(a.adjoint());
  double res = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SpMat::InnerIterator it(diff, k); it; ++it) res = std::max(res, std::abs(it.value()));
  return res;
}

namespace {

double max_abs(const SpMat& a) {
  double m = 0.0;
  for (int k = 0; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

void require_dim(int dim) {
  if (dim < 2) fail(ErrorKind::InvalidDimension, "dim must be >= 2, got " + std::to_string(dim));
}

void require_same(int a, int b, const char* what) {
  if (a != b)
    fail(ErrorKind::DimensionMismatch,
         std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
}

}  // namespace

OperatorMatrix::OperatorMatrix(SpMat entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) fail(ErrorKind::DimensionMismatch, "operator not square");
  entries_.makeCompressed();
  const double scale = max_abs(entries_);
  hermitian_ = hermitian_residue(entries_) <= kHermitianTol * std::max(scale, 1e-300);
}

int OperatorMatrix::bandwidth() const {
  int bw = 0;
  for (int k = 0; k < entries_.outerSize(); ++k)
    for (SpMat::InnerIterator it(entries_, k); it; ++it)
      bw = std::max(bw, static_cast<int>(std::abs(it.row() - it.col())));
  return bw;
}

OperatorMatrix OperatorMatrix::adjoint() const { return OperatorMatrix(SpMat(entries_.adjoint())); }

OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same(a.dim(), b.dim(), "operator sum");
  return OperatorMatrix(SpMat(a.entries_ + b.entries_));
}

OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same(a.dim(), b.dim(), "operator difference");
  return OperatorMatrix(SpMat(a.entries_ - b.entries_));
}

OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same(a.dim(), b.dim(), "operator product");
  return OperatorMatrix(SpMat(a.entries_ * b.entries_));
}

OperatorMatrix operator*(cplx s, const OperatorMatrix& a) { return OperatorMatrix(SpMat(s * a.entries_)); }

// ---------------------------------------------------------------- states

PureState::PureState(CVec amplitudes, TruncationPolicy policy)
    : amplitudes_(std::move(amplitudes)), policy_(policy) {
  policy_.dim = static_cast<int>(amplitudes_.size());
  policy_.validate();
  const double norm = amplitudes_.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > kNormTol)
    fail(ErrorKind::InvalidState, "pure state norm " + std::to_string(norm));
  tail_ = tail_population(RVec(amplitudes_.cwiseAbs2()), policy_.tail_window);
}

PureState PureState::normalized(CVec amplitudes, TruncationPolicy policy) {
  const double norm = amplitudes.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) fail(ErrorKind::InvalidState, "zero or non-finite vector");
  amplitudes /= norm;
  return PureState(std::move(amplitudes), policy);
}

MixedState::MixedState(CMat rho, TruncationPolicy policy) : rho_(std::move(rho)), policy_(policy) {
  check_and_measure();
}

MixedState MixedState::from_factor(CMat factor, TruncationPolicy policy) {
  MixedState s;
  if (linalg::is_real(factor)) {
    const RMat f = factor.real();
    s.rho_ = (f * f.transpose()).cast<cplx>();
  } else {
    s.rho_ = factor * factor.adjoint();
  }
  s.factor_ = std::move(factor);
  s.policy_ = policy;
  s.check_and_measure();
  return s;
}

MixedState MixedState::from_pure(const PureState& psi) {
  CMat w = psi.amplitudes();
  return from_factor(std::move(w), psi.policy());
}

void MixedState::check_and_measure() {
  if (rho_.rows() != rho_.cols()) fail(ErrorKind::DimensionMismatch, "rho not square");
  policy_.dim = static_cast<int>(rho_.rows());
  policy_.validate();
  const double herm = (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
  if (!std::isfinite(herm) || herm > kHermitianTol)
    fail(ErrorKind::InvalidState, "rho not Hermitian, residue " + std::to_string(herm));
  const double tr = rho_.trace().real();
  if (std::abs(tr - 1.0) > kNormTol) fail(ErrorKind::InvalidState, "rho trace " + std::to_string(tr));
  RVec diag = rho_.diagonal().real();
  tail_ = tail_population(diag, policy_.tail_window);
}

CMat MixedState::factorize() const {
  if (factor_) return *factor_;
  auto eig = linalg::eigh(rho_);
  const double pmax = std::max(eig.values.maxCoeff(), 0.0);
  std::vector<int> keep;
  for (int k = 0; k < eig.values.size(); ++k)
    if (eig.values(k) > 1e-15 * pmax) keep.push_back(k);
  CMat w(dim(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    w.col(static_cast<Eigen::Index>(c)) = eig.vectors.col(keep[c]) * std::sqrt(eig.values(keep[c]));
  return w;
}

TwoModeState::TwoModeState(CVec amplitudes, TruncationPolicy policy_lo, TruncationPolicy policy_p)
    : amplitudes_(std::move(amplitudes)), policy_lo_(policy_lo), policy_p_(policy_p) {
  policy_lo_.validate();
  policy_p_.validate();
  if (amplitudes_.size() != static_cast<Eigen::Index>(policy_lo_.dim) * policy_p_.dim)
    fail(ErrorKind::DimensionMismatch, "two-mode amplitude length");
  const double norm = amplitudes_.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > kNormTol)
    fail(ErrorKind::InvalidState, "two-mode norm " + std::to_string(norm));
  tail_lo_ = tail_population(marginal_lo(), policy_lo_.tail_window);
  tail_p_ = tail_population(marginal_p(), policy_p_.tail_window);
}

CMat TwoModeState::as_matrix() const {
  // row-major storage index n_lo * dim_p + n_p
  return Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      amplitudes_.data(), dim_lo(), dim_p());
}

RVec TwoModeState::marginal_lo() const { return as_matrix().cwiseAbs2().rowwise().sum(); }
RVec TwoModeState::marginal_p() const { return as_matrix().cwiseAbs2().colwise().sum().transpose(); }

// ---------------------------------------------------------------- factories

OperatorMatrix annihilation_op(int dim) {
  require_dim(dim);
  std::vector<Eigen::Triplet<cplx>> t;
  for (int n = 1; n < dim; ++n) t.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
  SpMat a(dim, dim);
  a.setFromTriplets(t.begin(), t.end());
  return OperatorMatrix(std::move(a));
}

OperatorMatrix creation_op(int dim) { return annihilation_op(dim).adjoint(); }

OperatorMatrix number_op(int dim) {
  require_dim(dim);
  std::vector<Eigen::Triplet<cplx>> t;
  for (int n = 1; n < dim; ++n) t.emplace_back(n, n, static_cast<double>(n));
  SpMat a(dim, dim);
  a.setFromTriplets(t.begin(), t.end());
  return OperatorMatrix(std::move(a));
}

OperatorMatrix identity_op(int dim) {
  require_dim(dim);
  SpMat a(dim, dim);
  a.setIdentity();
  return OperatorMatrix(std::move(a));
}

std::pair<OperatorMatrix, OperatorMatrix> quadratures(int dim) {
  const SpMat a = annihilation_op(dim).sparse();
  const SpMat ad = SpMat(a.adjoint());
  const double r = 1.0 / std::sqrt(2.0);
  SpMat x = r * (a + ad);
  SpMat p = cplx(0.0, r) * (ad - a);
  return {OperatorMatrix(std::move(x)), OperatorMatrix(std::move(p))};
}

OperatorMatrix symmetrized_word(int i, int j, int dim) {
  if (i < 0 || j < 0 || i + j < 1) fail(ErrorKind::DomainError, "symmetrized_word needs i+j >= 1");
  auto [xo, po] = quadratures(dim);
  const SpMat& x = xo.sparse();
  const SpMat& p = po.sparse();
  // table[a][b] = sum over all orderings of a x's and b p's
  std::vector<std::vector<SpMat>> table(i + 1, std::vector<SpMat>(j + 1));
  for (int a = 0; a <= i; ++a) {
    for (int b = 0; b <= j; ++b) {
      if (a == 0 && b == 0) {
        table[0][0] = identity_op(dim).sparse();
        continue;
      }
      SpMat acc(dim, dim);
      if (a > 0) acc += SpMat(x * table[a - 1][b]);
      if (b > 0) acc += SpMat(p * table[a][b - 1]);
      acc.prune(cplx(0.0));
      table[a][b] = std::move(acc);
    }
  }
  double count = 1.0;
  for (int k = 1; k <= j; ++k) count = count * (i + k) / k;
  SpMat s = table[i][j] / count;
  SpMat herm = 0.5 * (s + SpMat(s.adjoint()));
  herm.prune(cplx(0.0));
  return OperatorMatrix(std::move(herm));
}

OperatorMatrix tensor(const OperatorMatrix& a, const OperatorMatrix& b) {
  const int da = a.dim(), db = b.dim();
  std::vector<Eigen::Triplet<cplx>> t;
  t.reserve(static_cast<std::size_t>(a.sparse().nonZeros()) * b.sparse().nonZeros());
  for (int ka = 0; ka < a.sparse().outerSize(); ++ka)
    for (SpMat::InnerIterator ia(a.sparse(), ka); ia; ++ia)
      for (int kb = 0; kb < b.sparse().outerSize(); ++kb)
        for (SpMat::InnerIterator ib(b.sparse(), kb); ib; ++ib)
          t.emplace_back(static_cast<int>(ia.row() * db + ib.row()),
                         static_cast<int>(ia.col() * db + ib.col()), ia.value() * ib.value());
  SpMat m(da * db, da * db);
  m.setFromTriplets(t.begin(), t.end());
  return OperatorMatrix(std::move(m));
}

MixedState partial_trace_pump(const TwoModeState& state) {
  CMat psi = state.as_matrix();
  const double tr = psi.squaredNorm();
  if (std::abs(tr - 1.0) > kNormTol) fail(ErrorKind::InvalidState, "two-mode state not normalized");
  return MixedState::from_factor(std::move(psi), state.policy_lo());
}

// ---------------------------------------------------------------- expectations

cplx expectation(const OperatorMatrix& op, const PureState& state) {
  require_same(op.dim(), state.dim(), "expectation");
  return state.amplitudes().dot(op.apply(state.amplitudes()));
}

cplx expectation(const OperatorMatrix& op, const MixedState& state) {
  require_same(op.dim(), state.dim(), "expectation");
  const CMat& rho = state.rho();
  cplx acc = 0.0;
  for (int k = 0; k < op.sparse().outerSize(); ++k)
    for (SpMat::InnerIterator it(op.sparse(), k); it; ++it) acc += it.value() * rho(it.col(), it.row());
  return acc;
}

namespace {
double clip_variance(double v) {
  if (v < -1e-12) fail(ErrorKind::NumericalIntegrity, "negative variance " + std::to_string(v));
  return std::max(v, 0.0);
}
}  // namespace

double variance(const OperatorMatrix& op, const PureState& state) {
  require_same(op.dim(), state.dim(), "variance");
  const CVec y = op.apply(state.amplitudes());
  const cplx mean = state.amplitudes().dot(y);
  const double second =
      op.hermitian() ? y.squaredNorm() : state.amplitudes().dot(op.apply(y)).real();
  return clip_variance(second - std::norm(mean));
}

double variance(const OperatorMatrix& op, const MixedState& state) {
  require_same(op.dim(), state.dim(), "variance");
  const cplx mean = expectation(op, state);
  const cplx second = expectation(op * op, state);
  return clip_variance(second.real() - std::norm(mean));
}

double tail_population(const RVec& populations, int window) {
  const auto n = populations.size();
  const auto w = std::min<Eigen::Index>(window, n);
  return populations.tail(w).sum();
}

double tail_population(const PureState& state) { return state.tail(); }
double tail_population(const MixedState& state) { return state.tail(); }

// ---------------------------------------------------------------- exponentials

CVec expm_apply(const OperatorMatrix& h, double phase, const CVec& v, const ExpOptions& opt) {
  require_same(h.dim(), static_cast<int>(v.size()), "exponential action");
  if (!h.hermitian()) fail(ErrorKind::ContractViolation, "generator is not Hermitian");
  if (phase == 0.0) return v;
  const bool dense = opt.method == ExpMethod::Dense ||
                     (opt.method == ExpMethod::Auto && h.dim() <= opt.dense_threshold);
  if (!dense)
    return krylov_expv(h.sparse(), phase, v, opt.krylov_tol, opt.krylov_subspace, opt.max_iterations);
  const CMat hd = h.dense();
  if (linalg::is_real(hd)) {
    auto eig = linalg::eigh(RMat(hd.real()));
    const CVec coeff = eig.vectors.transpose().cast<cplx>() * v;
    CVec rot(coeff.size());
    for (Eigen::Index k = 0; k < coeff.size(); ++k)
      rot(k) = std::polar(1.0, phase * eig.values(k)) * coeff(k);
    return eig.vectors.cast<cplx>() * rot;
  }
  auto eig = linalg::eigh(hd);
  const CVec coeff = eig.vectors.adjoint() * v;
  CVec rot(coeff.size());
  for (Eigen::Index k = 0; k < coeff.size(); ++k)
    rot(k) = std::polar(1.0, phase * eig.values(k)) * coeff(k);
  return eig.vectors * rot;
}

PureState hermitian_exp_apply(const OperatorMatrix& h, double phase, const PureState& state,
                              const ExpOptions& opt) {
  CVec out = expm_apply(h, phase, state.amplitudes(), opt);
  const double norm = out.norm();
  if (std::abs(norm - 1.0) > 1e-10)
    fail(ErrorKind::NumericalIntegrity, "exponential action changed the norm to " + std::to_string(norm));
  return PureState::normalized(std::move(out), state.policy());
}

TwoModeState hermitian_exp_apply(const OperatorMatrix& h, double phase, const TwoModeState& state,
                                 const ExpOptions& opt) {
  CVec out = expm_apply(h, phase, state.amplitudes(), opt);
  const double norm = out.norm();
  if (std::abs(norm - 1.0) > 1e-10)
    fail(ErrorKind::NumericalIntegrity, "exponential action changed the norm to " + std::to_string(norm));
  out /= norm;
  return TwoModeState(std::move(out), state.policy_lo(), state.policy_p());
}

double trace_distance(const CMat& a, const CMat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) fail(ErrorKind::DimensionMismatch, "trace distance");
  const RVec w = linalg::eigvalsh(a - b);
  return 0.5 * w.cwiseAbs().sum();
}

}  // namespace fockmetro
