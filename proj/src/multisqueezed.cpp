#include <algorithm>
#include <cmath>

#include "fockmetro/errors.hpp"
#include "fockmetro/linalg.hpp"
#include "fockmetro/states.hpp"

namespace fockmetro {

int pump_dim_default(double alpha) {
  return static_cast<int>(std::ceil(alpha * alpha + 10.0 * alpha + 20.0));
}

TruncationPolicy multisqueezed_lo_policy(int m, int dim, double tail_tol) {
  TruncationPolicy p;
  p.dim = dim;
  p.tail_tol = tail_tol;
  p.tail_window = m;
  p.align_multiple = m;
  return p;
}

TruncationPolicy multisqueezed_pump_policy(double alpha, int dim, double tail_tol) {
  TruncationPolicy p;
  p.dim = dim > 0 ? dim : pump_dim_default(alpha);
  p.tail_tol = tail_tol;
  p.tail_window = 2;
  return p;
}

MultisqueezedGenerator::MultisqueezedGenerator(int m, double alpha, const TruncationPolicy& policy_lo,
                                               const TruncationPolicy& policy_p)
    : m_(m), alpha_(alpha), policy_lo_(policy_lo), policy_p_(policy_p) {
  MultisqueezedSpec{m, 0.0, alpha}.validate();
  policy_lo_.validate();
  policy_p_.validate();
  if (!policy_lo_.align_multiple || *policy_lo_.align_multiple != m)
    fail(ErrorKind::ContractViolation, "local-oscillator policy must align to the order m");

  const int np = policy_p_.dim;
  const int lmax = (policy_lo_.dim - 1) / m;
  // normalized pump amplitudes
  RVec w(np);
  if (alpha == 0.0) {
    w.setZero();
    w(0) = 1.0;
  } else {
    const double la = std::log(alpha);
    for (int j = 0; j < np; ++j) w(j) = std::exp(-0.5 * alpha * alpha + j * la - 0.5 * std::lgamma(j + 1.0));
    w /= w.norm();
  }
  for (int j = 0; j < np; ++j) {
    if (w(j) < 1e-25) continue;
    Block b;
    b.j = j;
    b.weight = w(j);
    const int size = std::min(j, lmax) + 1;
    RVec diag = RVec::Zero(size);
    RVec off(std::max(size - 1, 0));
    for (int l = 0; l + 1 < size; ++l) {
      double t = static_cast<double>(j - l);
      for (int q = 1; q <= m; ++q) t *= static_cast<double>(m * l + q);
      off(l) = std::sqrt(t);
    }
    if (size == 1) {
      b.values = RVec::Zero(1);
      b.vectors = RMat::Identity(1, 1);
    } else {
      auto eig = linalg::eigh_tridiagonal(diag, off);
      b.values = std::move(eig.values);
      b.vectors = std::move(eig.vectors);
    }
    blocks_.push_back(std::move(b));
  }
}

RVec MultisqueezedGenerator::block_coefficients(const Block& b, double kappa) const {
  const Eigen::Index size = b.values.size();
  // e^{kappa A} e_0 = D V e^{i kappa w} V^T e_0 with D = diag(i^l), real by construction
  RVec cr(size), ci(size);
  for (Eigen::Index k = 0; k < size; ++k) {
    const double v0 = b.vectors(0, k);
    cr(k) = v0 * std::cos(kappa * b.values(k));
    ci(k) = v0 * std::sin(kappa * b.values(k));
  }
  const RVec re = b.vectors * cr;
  const RVec im = b.vectors * ci;
  RVec out(size);
  for (Eigen::Index l = 0; l < size; ++l) {
    switch (l % 4) {
      case 0: out(l) = re(l); break;
      case 1: out(l) = -im(l); break;
      case 2: out(l) = -re(l); break;
      default: out(l) = im(l); break;
    }
  }
  return out;
}

RMat MultisqueezedGenerator::amplitudes(double kappa) const {
  RMat psi = RMat::Zero(policy_lo_.dim, policy_p_.dim);
  for (const Block& b : blocks_) {
    const RVec c = block_coefficients(b, kappa);
    for (Eigen::Index l = 0; l < c.size(); ++l) psi(m_ * l, b.j - l) = b.weight * c(l);
  }
  return psi;
}

double MultisqueezedGenerator::occupation_lo(double kappa) const {
  double occ = 0.0;
  for (const Block& b : blocks_) {
    const RVec c = block_coefficients(b, kappa);
    double s = 0.0;
    for (Eigen::Index l = 1; l < c.size(); ++l) s += static_cast<double>(l) * c(l) * c(l);
    occ += m_ * b.weight * b.weight * s;
  }
  return occ;
}

TwoModeState MultisqueezedGenerator::two_mode(double kappa) const {
  const RMat psi = amplitudes(kappa);
  CVec amp(psi.size());
  const int np = policy_p_.dim;
  for (int i = 0; i < psi.rows(); ++i)
    for (int j = 0; j < np; ++j) amp(static_cast<Eigen::Index>(i) * np + j) = psi(i, j);
  amp /= amp.norm();
  return TwoModeState(std::move(amp), policy_lo_, policy_p_);
}

namespace {

void require_two_mode_converged(const TwoModeState& s) {
  if (s.tail_p() > s.policy_p().tail_tol)
    throw UnconvergedTruncation("pump", s.dim_p(), s.tail_p(), s.policy_p().tail_tol);
  if (s.tail_lo() > s.policy_lo().tail_tol)
    throw UnconvergedTruncation("lo", s.dim_lo(), s.tail_lo(), s.policy_lo().tail_tol);
}

}  // namespace

TwoModeState multisqueezed_two_mode(const MultisqueezedSpec& spec, const TruncationPolicy& policy_lo,
                                    const TruncationPolicy& policy_p) {
  spec.validate();
  MultisqueezedGenerator gen(spec.m, spec.alpha, policy_lo, policy_p);
  TwoModeState s = gen.two_mode(spec.kappa);
  require_two_mode_converged(s);
  return s;
}

MixedState multisqueezed_pumped(const MultisqueezedSpec& spec, const TruncationPolicy& policy_lo,
                                const TruncationPolicy& policy_p) {
  return partial_trace_pump(multisqueezed_two_mode(spec, policy_lo, policy_p));
}

double kappa_for_occupation(const MultisqueezedGenerator& gen, double target, const KappaSolveOptions& opt) {
  if (!(target >= 0.0)) fail(ErrorKind::DomainError, "target occupation must be >= 0");
  if (target == 0.0) return 0.0;
  double lo = opt.kappa_start;
  double occ_lo = gen.occupation_lo(lo);
  while (occ_lo >= target) {
    lo *= 0.01;
    occ_lo = gen.occupation_lo(lo);
    if (lo < 1e-300) fail(ErrorKind::ConvergenceFailure, "kappa scan cannot undershoot the target");
  }
  double hi = lo, occ_hi = occ_lo, best = occ_lo;
  for (;;) {
    const double k = hi * opt.growth;
    const double o = gen.occupation_lo(k);
    if (o >= target) {
      lo = hi;
      occ_lo = occ_hi;
      hi = k;
      occ_hi = o;
      break;
    }
    if (o < occ_hi) throw TargetUnreachable(target, std::max(best, occ_hi));
    best = std::max(best, o);
    hi = k;
    occ_hi = o;
    if (!std::isfinite(k) || k > 1e6) throw TargetUnreachable(target, best);
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double o = gen.occupation_lo(mid);
    if (std::abs(o - target) <= opt.rel_tol * target) return mid;
    if (o < target) lo = mid;
    else hi = mid;
    if (hi - lo <= 1e-16 * hi) return mid;
  }
  fail(ErrorKind::ConvergenceFailure, "kappa bisection did not converge");
}

double kappa_for_occupation(int m, double alpha, double target, const TruncationPolicy& policy_lo,
                            const TruncationPolicy& policy_p, const KappaSolveOptions& opt) {
  MultisqueezedGenerator gen(m, alpha, policy_lo, policy_p);
  return kappa_for_occupation(gen, target, opt);
}

MultisqueezedPoint multisqueezed_for_occupation(int m, double alpha, double nbar, const DimLadder& ladder,
                                                int pump_dim) {
  // <n_lo> = m (alpha^2 - <n_p>) < m alpha^2
  if (nbar >= m * alpha * alpha) throw TargetUnreachable(nbar, m * alpha * alpha);
  int np = pump_dim > 0 ? pump_dim : pump_dim_default(alpha);
  std::optional<UnconvergedTruncation> last;
  for (int d : ladder.dims(m)) {
    for (int attempt = 0; attempt < 4; ++attempt) {
      TruncationPolicy plo = multisqueezed_lo_policy(m, d, ladder.tail_tol);
      TruncationPolicy pp = multisqueezed_pump_policy(alpha, np, ladder.tail_tol);
      MultisqueezedGenerator gen(m, alpha, plo, pp);
      const double kappa = kappa_for_occupation(gen, nbar);
      TwoModeState two = gen.two_mode(kappa);
      try {
        require_two_mode_converged(two);
      } catch (const UnconvergedTruncation& e) {
        last = e;
        if (e.mode() == "pump") {
          np = static_cast<int>(std::ceil(1.5 * np));
          continue;
        }
        break;
      }
      const RVec mp = two.marginal_p();
      double pump_occ = 0.0;
      for (Eigen::Index j = 0; j < mp.size(); ++j) pump_occ += static_cast<double>(j) * mp(j);
      MultisqueezedPoint out;
      out.kappa = kappa;
      out.dim_lo = d;
      out.dim_p = np;
      out.tail_lo = two.tail_lo();
      out.tail_p = two.tail_p();
      out.pump_occupation = pump_occ;
      out.state = partial_trace_pump(two);
      const RVec diag = out.state.rho().diagonal().real();
      double occ = 0.0;
      for (Eigen::Index n = 0; n < diag.size(); ++n) occ += static_cast<double>(n) * diag(n);
      out.occupation = occ;
      return out;
    }
    // LO dims beyond m * dim_p add no reachable levels
    if (d >= m * np) break;
  }
  if (last) throw *last;
  fail(ErrorKind::InvalidDimension, "empty dimension ladder");
}

}  // namespace fockmetro
