#include "fockmetro/states.hpp"

#include <cmath>

#include "fockmetro/errors.hpp"

namespace fockmetro {

void MthPhaseSpec::validate() const {
  if (m < 3) fail(ErrorKind::DomainError, "mth-phase order must be >= 3");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) fail(ErrorKind::DomainError, "gamma must be >= 0");
}

void MultisqueezedSpec::validate() const {
  if (m < 3) fail(ErrorKind::DomainError, "multisqueezed order must be >= 3");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) fail(ErrorKind::DomainError, "kappa must be >= 0");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail(ErrorKind::DomainError, "alpha must be >= 0");
}

DimLadder DimLadder::for_occupation(double nbar_expected) {
  DimLadder l;
  l.start = std::max(32, static_cast<int>(std::ceil(20.0 * nbar_expected)));
  return l;
}

std::vector<int> DimLadder::dims(int align) const {
  std::vector<int> out;
  auto aligned = [align](long d) { return static_cast<int>((d + align - 1) / align * align); };
  long d = std::max(start, 2);
  while (true) {
    const int a = aligned(d);
    if (a > max_dim) break;
    out.push_back(a);
    d *= 2;
  }
  if (out.empty() || out.back() < max_dim) {
    const int cap = max_dim / align * align;
    if (cap >= 2 && (out.empty() || cap > out.back())) out.push_back(cap);
  }
  return out;
}

namespace {

void require_converged(const PureState& s, const char* mode = "single") {
  if (!s.converged()) throw UnconvergedTruncation(mode, s.dim(), s.tail(), s.policy().tail_tol);
}

}  // namespace

PureState coherent_state(double alpha, const TruncationPolicy& policy) {
  policy.validate();
  if (!(alpha >= 0.0)) fail(ErrorKind::DomainError, "alpha must be >= 0");
  CVec c = CVec::Zero(policy.dim);
  if (alpha == 0.0) {
    c(0) = 1.0;
  } else {
    const double la = std::log(alpha);
    for (int n = 0; n < policy.dim; ++n)
      c(n) = std::exp(-0.5 * alpha * alpha + n * la - 0.5 * std::lgamma(n + 1.0));
  }
  PureState s = PureState::normalized(std::move(c), policy);
  require_converged(s);
  return s;
}

PureState squeezed_vacuum(double r, const TruncationPolicy& policy) {
  policy.validate();
  if (!(r >= 0.0)) fail(ErrorKind::DomainError, "squeezing must be >= 0");
  CVec c = CVec::Zero(policy.dim);
  if (r == 0.0) {
    c(0) = 1.0;
  } else {
    const double lt = std::log(std::tanh(r));
    const double lc = 0.5 * std::log(std::cosh(r));
    for (int k = 0; 2 * k < policy.dim; ++k) {
      const double mag = std::exp(k * lt + 0.5 * std::lgamma(2.0 * k + 1.0) - k * std::log(2.0) -
                                  std::lgamma(k + 1.0) - lc);
      c(2 * k) = (k % 2 == 0) ? mag : -mag;
    }
  }
  PureState s = PureState::normalized(std::move(c), policy);
  require_converged(s);
  return s;
}

PureState gaussian_state(const GaussianSpec& spec, const TruncationPolicy& policy) {
  return spec.kind == GaussianKind::Coherent ? coherent_state(spec.amplitude, policy)
                                             : squeezed_vacuum(spec.amplitude, policy);
}

double squeezing_for_occupation(double nbar) {
  if (!(nbar >= 0.0)) fail(ErrorKind::DomainError, "occupation must be >= 0");
  return std::asinh(std::sqrt(nbar));
}

PureState build_on_ladder(const DimLadder& ladder,
                          const std::function<PureState(const TruncationPolicy&)>& builder) {
  std::optional<UnconvergedTruncation> last;
  for (int d : ladder.dims()) {
    TruncationPolicy p;
    p.dim = d;
    p.tail_tol = ladder.tail_tol;
    p.tail_window = std::min(ladder.tail_window, d - 1);
    try {
      return builder(p);
    } catch (const UnconvergedTruncation& e) {
      last = e;
    }
  }
  if (last) throw *last;
  fail(ErrorKind::InvalidDimension, "empty dimension ladder");
}

PureState coherent_for_occupation(double nbar, const DimLadder& ladder) {
  const double alpha = std::sqrt(nbar);
  return build_on_ladder(ladder, [alpha](const TruncationPolicy& p) { return coherent_state(alpha, p); });
}

PureState squeezed_for_occupation(double nbar, const DimLadder& ladder) {
  const double r = squeezing_for_occupation(nbar);
  return build_on_ladder(ladder, [r](const TruncationPolicy& p) { return squeezed_vacuum(r, p); });
}

PureState mth_phase_for_occupation(int m, double nbar, const DimLadder& ladder) {
  MthPhaseSpec spec{m, gamma_for_occupation(m, nbar)};
  return build_on_ladder(ladder, [spec](const TruncationPolicy& p) { return mth_phase_state(spec, p); });
}

NaiveMultisqueezedResult multisqueezed_naive(const NaiveMultisqueezedSpec& spec,
                                             const TruncationPolicy& policy) {
  policy.validate();
  if (spec.m < 2) fail(ErrorKind::DomainError, "naive multisqueezed order must be >= 2");
  const int d = policy.dim;
  CVec vac = CVec::Zero(d);
  vac(0) = 1.0;
  PureState v(vac, policy);
  if (spec.xi == 0.0) return {v, 0.0, true};
  OperatorMatrix a = annihilation_op(d);
  OperatorMatrix am = a;
  for (int k = 1; k < spec.m; ++k) am = am * a;
  // H = -i (a^m - a^dagger^m), so e^{i xi H} = e^{xi (a^m - a^dagger^m)}
  OperatorMatrix h = cplx(0.0, -1.0) * (am - am.adjoint());
  PureState out = hermitian_exp_apply(h, spec.xi, v);
  const double occ = expectation(number_op(d), out).real();
  return {out, occ, true};
}

}  // namespace fockmetro
