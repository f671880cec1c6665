#include "fockmetro/channels.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fockmetro/errors.hpp"

namespace fockmetro {

const char* to_string(ChannelKind kind) {
  return kind == ChannelKind::PureDephasing ? "dephasing" : "damping";
}

ChannelKind channel_from_string(const std::string& name) {
  if (name == "dephasing" || name == "pure_dephasing") return ChannelKind::PureDephasing;
  if (name == "damping" || name == "zero_temp_damping") return ChannelKind::ZeroTempDamping;
  fail(ErrorKind::ConfigError, "unknown channel '" + name + "'");
}

namespace {

void require_strength(double s) {
  if (!(s >= 0.0) || !std::isfinite(s)) fail(ErrorKind::DomainError, "noise strength must be >= 0");
}

// b(n, k)^2 = C(n + k, k) x^k e^{-s n}
double log_b(int n, int k, double s, double logx) {
  const double lc = std::lgamma(n + k + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n + 1.0);
  return 0.5 * (lc + (k > 0 ? k * logx : 0.0) - s * n);
}

MixedState finish(CMat rho, const TruncationPolicy& policy) {
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return MixedState(std::move(rho), policy);
}

}  // namespace

MixedState apply_dephasing(const MixedState& rho, double s) {
  require_strength(s);
  if (s == 0.0) return rho;
  CMat out = rho.rho();
  const Eigen::Index n = out.rows();
  RVec decay(n);
  for (Eigen::Index d = 0; d < n; ++d) decay(d) = std::exp(-0.5 * s * static_cast<double>(d * d));
  for (Eigen::Index b = 0; b < n; ++b)
    for (Eigen::Index a = 0; a < n; ++a) out(a, b) *= decay(std::abs(a - b));
  return MixedState(std::move(out), rho.policy());
}

DampingOutput apply_damping_with_budget(const MixedState& rho, double s) {
  require_strength(s);
  if (s == 0.0) return {rho, 0.0};
  const int n = rho.dim();
  const CMat& in = rho.rho();
  CMat out = CMat::Zero(n, n);
  const double x = -std::expm1(-s);
  const double logx = std::log(x);
  RVec b(n);
  for (int k = 0; k < n; ++k) {
    const int len = n - k;
    double bmax = 0.0;
    for (int i = 0; i < len; ++i) {
      b(i) = std::exp(log_b(i, k, s, logx));
      bmax = std::max(bmax, b(i));
    }
    if (bmax == 0.0) continue;
    for (int c = 0; c < len; ++c) {
      const double bc = b(c);
      if (bc == 0.0) continue;
      for (int r = 0; r < len; ++r) out(r, c) += (b(r) * bc) * in(r + k, c + k);
    }
  }
  DampingOutput o{finish(std::move(out), rho.policy()), rho.tail()};
  return o;
}

MixedState apply_damping(const MixedState& rho, double s) { return apply_damping_with_budget(rho, s).state; }

MixedState apply_channel(const MixedState& rho, const ChannelSpec& spec) {
  return spec.kind == ChannelKind::PureDephasing ? apply_dephasing(rho, spec.s) : apply_damping(rho, spec.s);
}

std::vector<OperatorMatrix> kraus_damping(int dim, double s) {
  require_strength(s);
  if (dim < 2) fail(ErrorKind::InvalidDimension, "dim must be >= 2");
  std::vector<OperatorMatrix> out;
  const double x = -std::expm1(-s);
  const double logx = x > 0.0 ? std::log(x) : 0.0;
  for (int k = 0; k < dim; ++k) {
    std::vector<Eigen::Triplet<cplx>> t;
    double norm = 0.0;
    for (int m = k; m < dim; ++m) {
      // <m-k| E_k |m> = sqrt(C(m, k) x^k e^{-s (m-k)})
      double v;
      if (k == 0) v = std::exp(-0.5 * s * m);
      else if (x == 0.0) v = 0.0;
      else v = std::exp(log_b(m - k, k, s, logx));
      norm = std::max(norm, v);
      if (v != 0.0) t.emplace_back(m - k, m, v);
    }
    if (norm < 1e-16) break;
    SpMat e(dim, dim);
    e.setFromTriplets(t.begin(), t.end());
    out.emplace_back(std::move(e));
  }
  return out;
}

MixedState apply_kraus(const MixedState& rho, const std::vector<OperatorMatrix>& kraus) {
  const int n = rho.dim();
  CMat out = CMat::Zero(n, n);
  for (const auto& e : kraus) {
    if (e.dim() != n) fail(ErrorKind::DimensionMismatch, "kraus operator dim");
    const CMat left = e.sparse() * rho.rho();
    out += (e.sparse() * left.adjoint()).adjoint();
  }
  return finish(std::move(out), rho.policy());
}

namespace {

// Diagonal unitaries commute with n, so phases can be removed from a pure
// input before the channel whenever the channel output stays equivalent.
MixedState phase_normalized(const MixedState& rho, ChannelKind kind) {
  if (!rho.factor() || rho.factor()->cols() != 1) return rho;
  CVec psi = rho.factor()->col(0);
  if (kind == ChannelKind::PureDephasing) {
    for (Eigen::Index n = 0; n < psi.size(); ++n) psi(n) = std::abs(psi(n));
  } else {
    // linear phase i^n (odd-order phase states) keeps damping real
    CVec t = psi;
    double resid = 0.0, scale = 0.0;
    for (Eigen::Index n = 0; n < t.size(); ++n) {
      static const cplx rot[4] = {1.0, cplx(0, -1), -1.0, cplx(0, 1)};
      t(n) *= rot[n % 4];
      resid = std::max(resid, std::abs(t(n).imag()));
      scale = std::max(scale, std::abs(t(n)));
    }
    if (resid > 1e-12 * scale) return rho;
    psi = t.real().cast<cplx>();
  }
  CMat w = psi;
  return MixedState::from_factor(std::move(w), rho.policy());
}

}  // namespace

KrausFactor damping_factor(const CMat& w, double s, double drop_tol) {
  require_strength(s);
  if (s == 0.0) return {w, 0.0};
  const int n = static_cast<int>(w.rows());
  const Eigen::Index r = w.cols();
  const double x = -std::expm1(-s);
  const double logx = std::log(x);
  const RVec rowsq = w.rowwise().squaredNorm();
  RVec weight = RVec::Zero(n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j + k < n; ++j)
      if (rowsq(j + k) != 0.0) weight(k) += std::exp(2.0 * log_b(j, k, s, logx)) * rowsq(j + k);
  int kmax = n;
  double tail = 0.0;
  while (kmax > 1 && tail + weight(kmax - 1) <= drop_tol) tail += weight(--kmax);

  KrausFactor out;
  out.dropped = tail;
  out.factor = CMat::Zero(n, kmax * r);
  RVec b(n);
  for (int k = 0; k < kmax; ++k) {
    const int len = n - k;
    for (int j = 0; j < len; ++j) b(j) = std::exp(log_b(j, k, s, logx));
    out.factor.block(0, k * r, len, r) = b.head(len).asDiagonal() * w.block(k, 0, len, r);
  }
  return out;
}

double channel_qfi(const MixedState& rho, const ChannelSpec& spec, const QfiMixedOptions& opt) {
  const MixedState in = phase_normalized(rho, spec.kind);
  if (spec.s == 0.0) return qfi_mixed(in, std::nullopt, {}, opt).qfi;
  if (spec.kind == ChannelKind::ZeroTempDamping && in.factor() && 4 * in.factor()->cols() <= in.dim()) {
    KrausFactor kf = damping_factor(*in.factor(), spec.s);
    // renormalize away the dropped Kraus weight
    if (kf.dropped > 0.0) kf.factor /= std::sqrt(1.0 - kf.dropped);
    return qfi_mixed(MixedState::from_factor(std::move(kf.factor), in.policy()), std::nullopt, {}, opt).qfi;
  }
  return qfi_mixed(apply_channel(in, spec), std::nullopt, {}, opt).qfi;
}

ChannelBlock channel_block(const PureState& psi, const ChannelBlockOptions& opt) {
  if (opt.start < 2 || opt.max_dim < 2) fail(ErrorKind::InvalidDimension, "channel block dims must be >= 2");
  const RVec p = psi.amplitudes().cwiseAbs2();
  const int dim = psi.dim();
  auto moments = [&](int len) {
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (int n = 0; n < len; ++n) {
      m0 += p(n);
      m1 += n * p(n);
      m2 += static_cast<double>(n) * n * p(n);
    }
    return std::array<double, 3>{m0, m1 / m0, m2 / m0};
  };
  const auto full = moments(dim);
  const double f_full = 4.0 * (full[2] - full[1] * full[1]);
  const int cap = std::min(dim, opt.max_dim);
  for (int len = std::min(opt.start, cap);; len = std::min(2 * len, cap)) {
    const auto mb = moments(len);
    const double f = 4.0 * (mb[2] - mb[1] * mb[1]);
    const double rel = f_full > 0.0 ? std::abs(f - f_full) / f_full : 0.0;
    if (rel <= opt.rel_tol) {
      ChannelBlock out;
      out.dim = len;
      out.dropped = std::max(0.0, 1.0 - mb[0]);
      out.qfi_rel_err = rel;
      TruncationPolicy pol = psi.policy();
      pol.align_multiple.reset();
      pol.tail_window = std::min(pol.tail_window, len - 1);
      out.state = MixedState::from_pure(PureState::normalized(psi.amplitudes().head(len), pol.with_dim(len)));
      return out;
    }
    if (len == cap) throw UnconvergedTruncation("channel", len, rel, opt.rel_tol);
  }
}

CriticalStrengthResult critical_strength(const MixedState& ng, const MixedState& ref, ChannelKind kind,
                                         const CriticalOptions& opt) {
  CriticalStrengthResult res;
  res.occupation = occupation(ng);
  const MixedState a = phase_normalized(ng, kind);
  const MixedState b = phase_normalized(ref, kind);
  auto g = [&](double s) {
    ++res.evaluations;
    const ChannelSpec spec{kind, s};
    return channel_qfi(a, spec, opt.qfi) - channel_qfi(b, spec, opt.qfi);
  };
  const double g0 = g(0.0);
  if (!(g0 > 0.0))
    fail(ErrorKind::PreconditionViolated, "no noiseless advantage: g(0) = " + std::to_string(g0));

  double lo = 0.0, glo = g0, hi = -1.0, ghi = 0.0;
  for (double s = opt.s_min;; s *= opt.scan_factor) {
    const double sv = std::min(s, opt.s_max);
    const double gv = g(sv);
    if (gv <= 0.0) {
      hi = sv;
      ghi = gv;
      break;
    }
    lo = sv;
    glo = gv;
    if (sv >= opt.s_max) throw NoCrossing(opt.s_max, gv);
  }

  // safeguarded false position (Illinois) on the bracket
  int side = 0;
  double last_width = hi - lo;
  int stalled = 0;
  while (hi - lo > opt.tol) {
    double c = hi - ghi * (hi - lo) / (ghi - glo);
    if (!(c > lo && c < hi) || stalled >= 2) {
      c = 0.5 * (lo + hi);
      stalled = 0;
    }
    const double nudge = 0.45 * opt.tol;
    c = std::clamp(c, lo + nudge, hi - nudge);
    const double gc = g(c);
    if (gc > 0.0) {
      lo = c;
      glo = gc;
      if (side == +1) ghi *= 0.5;
      side = +1;
    } else {
      hi = c;
      ghi = gc;
      if (side == -1) glo *= 0.5;
      side = -1;
    }
    const double w = hi - lo;
    stalled = (w > 0.5 * last_width) ? stalled + 1 : 0;
    last_width = w;
  }
  res.bracket = {lo, hi};
  res.s_c = 0.5 * (lo + hi);
  res.found = true;
  return res;
}

std::vector<ScPointOutcome> sc_sweep(const StatePairFactory& factory, ChannelKind kind,
                                     const std::vector<double>& grid, const CriticalOptions& opt) {
  std::vector<ScPointOutcome> out;
  for (double nbar : grid) {
    ScPointOutcome p;
    p.result.occupation = nbar;
    try {
      auto [ng, ref] = factory(nbar);
      p.result = critical_strength(ng, ref, kind, opt);
    } catch (const std::exception& e) {
      p.error = e.what();
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace fockmetro
