#include "fockmetro/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "fockmetro/errors.hpp"
#include "fockmetro/linalg.hpp"
#include "fockmetro/metrology.hpp"

namespace fockmetro {

int pool_size(int k) { return k * (k + 3) / 2; }

ObservablePool build_pool(int k, int dim) {
  if (k < 1) fail(ErrorKind::DomainError, "pool order must be >= 1");
  ObservablePool pool;
  pool.order = k;
  pool.dim = dim;
  for (int degree = 1; degree <= k; ++degree)
    for (int i = degree; i >= 0; --i) {
      pool.labels.emplace_back(i, degree - i);
      pool.members.push_back(symmetrized_word(i, degree - i, dim));
    }
  return pool;
}

ObservablePool build_pool_for_state(int k, int state_dim) { return build_pool(k, state_dim + k); }

CMat padded_factor(const MixedState& rho, int target) {
  if (target < rho.dim()) fail(ErrorKind::DimensionMismatch, "padding target smaller than state");
  const CMat w = rho.factorize();
  CMat out = CMat::Zero(target, w.cols());
  out.topRows(w.rows()) = w;
  return out;
}

CMat padded_factor(const PureState& psi, int target) {
  if (target < psi.dim()) fail(ErrorKind::DimensionMismatch, "padding target smaller than state");
  CMat out = CMat::Zero(target, 1);
  out.col(0).head(psi.dim()) = psi.amplitudes();
  return out;
}

namespace {

void require_state(const ObservablePool& pool, int dim, bool converged, double tail, double tol) {
  if (!converged) throw UnconvergedTruncation("single", dim, tail, tol);
  if (dim + pool.order > pool.dim)
    fail(ErrorKind::DimensionMismatch, "pool dim " + std::to_string(pool.dim) + " cannot represent order " +
                                           std::to_string(pool.order) + " moments on dim " +
                                           std::to_string(dim));
}

cplx frob(const CMat& a, const CMat& b) {
  // sum conj(a) b
  return (a.array().conjugate() * b.array()).sum();
}

CMat apply_generator(const std::optional<OperatorMatrix>& h, const CMat& w) {
  if (h) {
    if (h->dim() != w.rows()) fail(ErrorKind::DimensionMismatch, "generator dim");
    return h->apply(w);
  }
  CMat out = w;
  for (Eigen::Index n = 0; n < out.rows(); ++n) out.row(n) *= static_cast<double>(n);
  return out;
}

struct Moments {
  std::vector<CMat> y;
  RVec mean;
  CMat hw;
};

Moments moments(const ObservablePool& pool, const CMat& w, const std::optional<OperatorMatrix>& h) {
  Moments mo;
  mo.mean.resize(static_cast<Eigen::Index>(pool.members.size()));
  for (std::size_t n = 0; n < pool.members.size(); ++n) {
    mo.y.push_back(pool.members[n].apply(w));
    mo.mean(static_cast<Eigen::Index>(n)) = frob(w, mo.y.back()).real();
  }
  mo.hw = apply_generator(h, w);
  return mo;
}

RVec q_from(const Moments& mo) {
  RVec q(static_cast<Eigen::Index>(mo.y.size()));
  for (std::size_t n = 0; n < mo.y.size(); ++n) {
    const cplx ah = frob(mo.y[n], mo.hw);   // <A H>
    const cplx ha = frob(mo.hw, mo.y[n]);   // <H A>
    const cplx v = cplx(0.0, -1.0) * (ah - ha);
    const double scale = std::max(1.0, std::abs(v));
    if (std::abs(v.imag()) > 1e-8 * scale)
      fail(ErrorKind::NumericalIntegrity, "q entry imaginary residue " + std::to_string(v.imag()));
    q(static_cast<Eigen::Index>(n)) = v.real();
  }
  return q;
}

RMat g_from(const Moments& mo) {
  const auto n = static_cast<Eigen::Index>(mo.y.size());
  RMat g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = frob(mo.y[i], mo.y[j]).real() - mo.mean(i) * mo.mean(j);
      g(i, j) = v;
      g(j, i) = v;
    }
  double scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) scale = std::max(scale, std::abs(g(i, i)));
  if (n > 0 && scale > 0.0) {
    const RVec ev = linalg::eigh(g).values;
    if (ev.minCoeff() < -1e-8 * scale)
      fail(ErrorKind::NumericalIntegrity, "covariance matrix indefinite: " + std::to_string(ev.minCoeff()));
  }
  return g;
}

}  // namespace

MixedState rotate(const MixedState& rho, double theta) {
  if (rho.factor()) {
    CMat w = *rho.factor();
    for (Eigen::Index n = 0; n < w.rows(); ++n) w.row(n) *= std::polar(1.0, -theta * static_cast<double>(n));
    return MixedState::from_factor(std::move(w), rho.policy());
  }
  CMat r = rho.rho();
  for (Eigen::Index a = 0; a < r.rows(); ++a)
    for (Eigen::Index b = 0; b < r.cols(); ++b) r(a, b) *= std::polar(1.0, -theta * static_cast<double>(a - b));
  return MixedState(std::move(r), rho.policy());
}

RVec q_vector(const ObservablePool& pool, const MixedState& rho, const std::optional<OperatorMatrix>& h) {
  require_state(pool, rho.dim(), rho.converged(), rho.tail(), rho.policy().tail_tol);
  return q_from(moments(pool, padded_factor(rho, pool.dim), h));
}

RMat covariance_matrix(const ObservablePool& pool, const MixedState& rho) {
  require_state(pool, rho.dim(), rho.converged(), rho.tail(), rho.policy().tail_tol);
  return g_from(moments(pool, padded_factor(rho, pool.dim), std::nullopt));
}

namespace {

CMat rotated(CMat w, double theta) {
  if (theta != 0.0)
    for (Eigen::Index n = 0; n < w.rows(); ++n) w.row(n) *= std::polar(1.0, -theta * static_cast<double>(n));
  return w;
}

CMat padded(const CMat& w, int target) {
  CMat out = CMat::Zero(target, w.cols());
  out.topRows(w.rows()) = w;
  return out;
}

std::pair<OptimalObservable, SensitivityResult> optimal_core(const ObservablePool& pool, const CMat& w0,
                                                             double occ, double qfi,
                                                             const std::optional<OperatorMatrix>& h,
                                                             const OptimalOptions& opt) {
  const CMat w = padded(rotated(w0, opt.theta), pool.dim);
  const Moments mo = moments(pool, w, h);
  const RVec q = q_from(mo);
  const RMat g = g_from(mo);
  const Eigen::Index n = q.size();

  OptimalObservable obs;
  obs.pool_order = pool.order;
  obs.pool_dim = pool.dim;
  obs.theta = opt.theta;
  obs.coefficients = RVec::Zero(n);

  SensitivityResult res;
  res.occupation = occ;
  res.theta = opt.theta;
  res.qfi_squeezed_ref = qfi_squeezed_closed(res.occupation);
  res.qfi_same_state = qfi;

  // diagonal equilibration before the pseudo-inverse
  RVec d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = g(i, i) > 0.0 ? 1.0 / std::sqrt(g(i, i)) : 0.0;
  const RMat gs = d.asDiagonal() * g * d.asDiagonal();
  const RVec qs = d.cwiseProduct(q);
  if (qs.norm() <= 1e-12 * std::max(1.0, std::sqrt(static_cast<double>(n)))) {
    res.no_phase_information = true;
    return {obs, res};
  }
  const auto eig = linalg::eigh(gs);
  const double lmax = eig.values.maxCoeff();
  RVec cs = RVec::Zero(n);
  double s = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (eig.values(k) <= opt.pinv_tol * lmax) continue;
    const double proj = eig.vectors.col(k).dot(qs);
    s += proj * proj / eig.values(k);
    cs += eig.vectors.col(k) * (proj / eig.values(k));
  }
  RVec c = d.cwiseProduct(cs);
  const double cn = c.norm();
  if (cn > 0.0) c /= cn;
  obs.coefficients = c;

  // direct evaluation on M = sum c_n A_n
  SpMat msum(pool.dim, pool.dim);
  for (Eigen::Index i = 0; i < n; ++i) msum += c(i) * pool.members[static_cast<std::size_t>(i)].sparse();
  const CMat ym = msum * w;
  const double mean = frob(w, ym).real();
  const double var = ym.squaredNorm() - mean * mean;
  const cplx z = frob(ym, mo.hw);
  const double num = 2.0 * z.imag();
  const double direct = var > 0.0 ? num * num / var : 0.0;
  if (std::abs(direct - s) > opt.recheck_tol * std::max(s, 1e-300) && s > 1e-14)
    fail(ErrorKind::NumericalIntegrity,
         "optimal sensitivity recheck mismatch " + std::to_string(direct) + " vs " + std::to_string(s));

  res.sensitivity = s;
  res.ratio_R = res.qfi_same_state > 0.0 ? s / res.qfi_same_state : 0.0;
  res.ratio_R2 = res.ratio_R;
  res.ratio_R1 = res.qfi_squeezed_ref > 0.0 ? s / res.qfi_squeezed_ref : 0.0;
  return {obs, res};
}

}  // namespace

std::pair<OptimalObservable, SensitivityResult> optimal_sensitivity(const ObservablePool& pool,
                                                                    const MixedState& rho,
                                                                    const std::optional<OperatorMatrix>& h,
                                                                    const OptimalOptions& opt) {
  require_state(pool, rho.dim(), rho.converged(), rho.tail(), rho.policy().tail_tol);
  const double qfi = opt.compute_qfi ? qfi_mixed(rho).qfi : 0.0;
  return optimal_core(pool, rho.factorize(), occupation(rho), qfi, h, opt);
}

std::pair<OptimalObservable, SensitivityResult> optimal_sensitivity(const ObservablePool& pool,
                                                                    const PureState& psi,
                                                                    const std::optional<OperatorMatrix>& h,
                                                                    const OptimalOptions& opt) {
  require_state(pool, psi.dim(), psi.converged(), psi.tail(), psi.policy().tail_tol);
  const double qfi = opt.compute_qfi ? qfi_pure(psi).qfi : 0.0;
  return optimal_core(pool, CMat(psi.amplitudes()), occupation(psi), qfi, h, opt);
}

namespace {

// expectation of an operator on rho_theta as a trigonometric polynomial in theta
struct TrigSeries {
  std::map<int, cplx> coeff;  // Delta -> t_Delta

  cplx value(double theta) const {
    cplx acc = 0.0;
    for (const auto& [delta, t] : coeff) acc += std::polar(1.0, -theta * delta) * t;
    return acc;
  }
  cplx weighted(double theta) const {
    cplx acc = 0.0;
    for (const auto& [delta, t] : coeff) acc += static_cast<double>(delta) * std::polar(1.0, -theta * delta) * t;
    return acc;
  }
};

// rho = W W^dagger, rho(c, b) = sum_r W(c, r) conj(W(b, r))
TrigSeries series(const SpMat& a, const CMat& w) {
  TrigSeries s;
  const Eigen::Index d = w.rows();
  for (int k = 0; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it) {
      const Eigen::Index b = it.row(), c = it.col();
      if (b >= d || c >= d) continue;
      const cplx rcb = w.row(b).dot(w.row(c));
      s.coeff[static_cast<int>(c - b)] += rcb * it.value();
    }
  return s;
}

SensitivityResult fixed_core(const OperatorMatrix& a, const CMat& w, double occ, double qfi,
                             const FixedOptions& opt) {
  if (!a.hermitian()) fail(ErrorKind::ContractViolation, "fixed observable must be Hermitian");
  if (a.dim() < w.rows()) fail(ErrorKind::DimensionMismatch, "observable dim below state dim");
  const SpMat a2 = a.sparse() * a.sparse();
  const TrigSeries t1 = series(a.sparse(), w);
  const TrigSeries t2 = series(a2, w);

  auto eval = [&](double theta) {
    const double mean = t1.value(theta).real();
    const double second = t2.value(theta).real();
    const double var = second - mean * mean;
    const double num = (cplx(0.0, -1.0) * t1.weighted(theta)).real();
    const double small = 1e-13 * std::max(std::abs(second), 1e-300);
    if (var <= small) {
      if (std::abs(num) <= 1e-9 * std::sqrt(std::max(std::abs(second), 1e-300))) return 0.0;
      fail(ErrorKind::SingularSensitivity, "zero variance with nonzero slope");
    }
    return num * num / var;
  };

  double theta = opt.theta;
  double best = eval(theta);
  if (opt.maximize_theta) {
    const double two_pi = 2.0 * std::numbers::pi;
    const double hstep = two_pi / opt.scan_points;
    int bi = 0;
    best = -1.0;
    for (int i = 0; i < opt.scan_points; ++i) {
      const double v = eval(i * hstep);
      if (v > best) {
        best = v;
        bi = i;
      }
    }
    double lo = (bi - 1) * hstep, hi = (bi + 1) * hstep;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = eval(x1), f2 = eval(x2);
    while (hi - lo > opt.theta_tol) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + gr * (hi - lo);
        f2 = eval(x2);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - gr * (hi - lo);
        f1 = eval(x1);
      }
    }
    const double tm = 0.5 * (lo + hi);
    const double fm = eval(tm);
    theta = bi * hstep;
    if (fm > best) {
      best = fm;
      theta = std::fmod(tm + two_pi, two_pi);
    }
  }
  if (opt.fd_step > 0.0) {
    const double dlt = opt.fd_step;
    const double fd = (t1.value(theta + dlt).real() - t1.value(theta - dlt).real()) / (2.0 * dlt);
    const double an = (cplx(0.0, -1.0) * t1.weighted(theta)).real();
    if (std::abs(fd - an) > 1e-6 * std::max(1.0, std::abs(an)))
      fail(ErrorKind::NumericalIntegrity, "finite-difference slope disagrees with commutator form");
  }

  SensitivityResult res;
  res.sensitivity = best;
  res.theta = theta;
  res.occupation = occ;
  res.qfi_same_state = qfi;
  res.qfi_squeezed_ref = qfi_squeezed_closed(res.occupation);
  res.ratio_R = res.qfi_same_state > 0.0 ? best / res.qfi_same_state : 0.0;
  res.ratio_R2 = res.ratio_R;
  res.ratio_R1 = res.qfi_squeezed_ref > 0.0 ? best / res.qfi_squeezed_ref : 0.0;
  return res;
}

}  // namespace

SensitivityResult sensitivity_fixed(const OperatorMatrix& a, const MixedState& rho, const FixedOptions& opt) {
  if (!rho.converged()) throw UnconvergedTruncation("single", rho.dim(), rho.tail(), rho.policy().tail_tol);
  return fixed_core(a, rho.factorize(), occupation(rho), qfi_mixed(rho).qfi, opt);
}

SensitivityResult sensitivity_fixed(const OperatorMatrix& a, const PureState& psi, const FixedOptions& opt) {
  if (!psi.converged()) throw UnconvergedTruncation("single", psi.dim(), psi.tail(), psi.policy().tail_tol);
  return fixed_core(a, CMat(psi.amplitudes()), occupation(psi), qfi_pure(psi).qfi, opt);
}

FixedObservables fixed_observables(int dim, int m) {
  auto [x, p] = quadratures(dim);
  const OperatorMatrix mterm = x * p * x + x * p * p;
  OperatorMatrix b3p = mterm + mterm.adjoint();
  OperatorMatrix b4p = symmetrized_word(4, 0, dim);
  OperatorMatrix a = annihilation_op(dim);
  OperatorMatrix am = a;
  for (int k = 1; k < m; ++k) am = am * a;
  OperatorMatrix bms = am + am.adjoint();
  return {std::move(b3p), std::move(b4p), std::move(bms)};
}

}  // namespace fockmetro
