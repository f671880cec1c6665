#include "fockmetro/metrology.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fockmetro/errors.hpp"
#include "fockmetro/linalg.hpp"

namespace fockmetro {

std::string StateLabel::describe() const {
  std::ostringstream os;
  switch (kind) {
    case StateKind::Coherent: os << "coherent"; break;
    case StateKind::Squeezed: os << "squeezed"; break;
    case StateKind::MthPhase: os << "mth_phase(" << m << ")"; break;
    case StateKind::Multisqueezed: os << "multisqueezed(" << m << "," << alpha << ")"; break;
    case StateKind::ChannelDegraded: os << "channel-degraded(" << detail << ")"; break;
    case StateKind::Other: os << (detail.empty() ? "state" : detail); break;
  }
  return os.str();
}

BigInt double_factorial(int k) {
  if (k < -1) fail(ErrorKind::DomainError, "double factorial needs k >= -1");
  BigInt out = 1;
  for (int q = k; q > 1; q -= 2) out *= q;
  return out;
}

double occupation(const PureState& state) {
  const RVec p = state.amplitudes().cwiseAbs2();
  double acc = 0.0;
  for (Eigen::Index n = 1; n < p.size(); ++n) acc += static_cast<double>(n) * p(n);
  return acc;
}

double occupation(const MixedState& state) {
  const RVec p = state.rho().diagonal().real();
  double acc = 0.0;
  for (Eigen::Index n = 1; n < p.size(); ++n) acc += static_cast<double>(n) * p(n);
  return acc;
}

QfiResult qfi_pure(const PureState& state, const std::optional<OperatorMatrix>& generator, StateLabel label) {
  if (!state.converged())
    throw UnconvergedTruncation("single", state.dim(), state.tail(), state.policy().tail_tol);
  QfiResult r;
  r.occupation = occupation(state);
  r.state_label = std::move(label);
  if (!generator) {
    const RVec p = state.amplitudes().cwiseAbs2();
    double m1 = 0.0, m2 = 0.0;
    for (Eigen::Index n = 1; n < p.size(); ++n) {
      const double dn = static_cast<double>(n);
      m1 += dn * p(n);
      m2 += dn * dn * p(n);
    }
    r.qfi = std::max(0.0, 4.0 * (m2 - m1 * m1));
  } else {
    r.qfi = 4.0 * variance(*generator, state);
  }
  return r;
}

double qfi_from_spectrum(const RVec& p, const CMat& h_eig, double eig_floor) {
  const Eigen::Index n = p.size();
  const double pmax = std::max(p.maxCoeff(), 0.0);
  const double cut = eig_floor * pmax;
  RVec q(n);
  for (Eigen::Index k = 0; k < n; ++k) q(k) = p(k) > cut ? p(k) : 0.0;
  double f = 0.0;
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = 0; l < n; ++l) {
      const double s = q(k) + q(l);
      if (s <= 0.0) continue;
      const double d = q(k) - q(l);
      f += d * d / s * std::norm(h_eig(k, l));
    }
  return 2.0 * f;
}

namespace {

// support vectors (columns, orthonormal) with eigenvalues, from either route
struct Support {
  CMat vectors;
  RVec values;
};

Support support_from_factor(const CMat& w, double eig_floor) {
  const CMat gram = w.adjoint() * w;
  RVec vals;
  CMat vecs;
  if (linalg::is_real(gram)) {
    auto e = linalg::eigh(RMat(gram.real()));
    vals = e.values;
    vecs = e.vectors.cast<cplx>();
  } else {
    auto e = linalg::eigh(gram);
    vals = e.values;
    vecs = e.vectors;
  }
  const double pmax = std::max(vals.maxCoeff(), 0.0);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < vals.size(); ++k)
    if (vals(k) > eig_floor * pmax) keep.push_back(k);
  Support s;
  s.values.resize(static_cast<Eigen::Index>(keep.size()));
  CMat u(gram.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    s.values(ci) = vals(keep[c]);
    u.col(ci) = vecs.col(keep[c]) / std::sqrt(vals(keep[c]));
  }
  s.vectors = w * u;
  return s;
}

Support support_from_rho(const CMat& rho, double eig_floor) {
  RVec vals;
  CMat vecs;
  if (linalg::is_real(rho)) {
    auto e = linalg::eigh(RMat(rho.real()));
    vals = e.values;
    vecs = e.vectors.cast<cplx>();
  } else {
    auto e = linalg::eigh(rho);
    vals = e.values;
    vecs = std::move(e.vectors);
  }
  const double pmax = std::max(vals.maxCoeff(), 0.0);
  if (vals.minCoeff() < -1e-10)
    fail(ErrorKind::InvalidState, "density matrix eigenvalue " + std::to_string(vals.minCoeff()));
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < vals.size(); ++k)
    if (vals(k) > eig_floor * pmax) keep.push_back(k);
  Support s;
  s.values.resize(static_cast<Eigen::Index>(keep.size()));
  s.vectors.resize(rho.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    s.values(ci) = vals(keep[c]);
    s.vectors.col(ci) = vecs.col(keep[c]);
  }
  return s;
}

}  // namespace

QfiResult qfi_mixed(const MixedState& rho, const std::optional<OperatorMatrix>& generator, StateLabel label,
                    const QfiMixedOptions& opt) {
  if (generator && generator->dim() != rho.dim()) fail(ErrorKind::DimensionMismatch, "qfi generator");
  const bool use_factor =
      rho.factor() && static_cast<double>(rho.factor()->cols()) < opt.factor_fraction * rho.dim();
  const Support s =
      use_factor ? support_from_factor(*rho.factor(), opt.eig_floor) : support_from_rho(rho.rho(), opt.eig_floor);

  CMat hv;
  if (generator) {
    hv = generator->apply(s.vectors);
  } else {
    hv = s.vectors;
    for (Eigen::Index n = 0; n < hv.rows(); ++n) hv.row(n) *= static_cast<double>(n);
  }
  const CMat h = s.vectors.adjoint() * hv;
  const Eigen::Index r = s.values.size();
  double inner = 0.0, outer = 0.0;
  for (Eigen::Index k = 0; k < r; ++k) {
    double row = 0.0;
    for (Eigen::Index l = 0; l < r; ++l) {
      const double a2 = std::norm(h(k, l));
      row += a2;
      const double d = s.values(k) - s.values(l);
      inner += d * d / (s.values(k) + s.values(l)) * a2;
    }
    // coupling from support vector k into the orthogonal complement
    const double h2 = hv.col(k).squaredNorm();
    outer += s.values(k) * std::max(0.0, h2 - row);
  }
  QfiResult out;
  out.qfi = std::max(0.0, 2.0 * inner + 4.0 * outer);
  out.occupation = occupation(rho);
  out.state_label = std::move(label);
  out.converged = rho.converged();
  return out;
}

double qfi_coherent_closed(double nbar) { return 4.0 * nbar; }
double qfi_squeezed_closed(double nbar) { return 8.0 * (nbar * nbar + nbar); }

namespace {

struct Coefficients {
  BigRational c1, c2;
};

Coefficients mth_coefficients(int m) {
  if (m < 2) fail(ErrorKind::DomainError, "order must be >= 2");
  const BigInt num = double_factorial(4 * m - 5);
  const BigInt den = double_factorial(2 * m - 3);
  const BigRational ratio(num, den * den);
  Coefficients c;
  c.c2 = 4 * (ratio - 1);
  c.c1 = BigRational(4 * m * m - 8, 2 * m - 3);
  return c;
}

}  // namespace

double qfi_mth_phase_closed(int m, double nbar) {
  if (!(nbar >= 0.0)) fail(ErrorKind::DomainError, "occupation must be >= 0");
  const Coefficients c = mth_coefficients(m);
  return c.c2.convert_to<double>() * nbar * nbar + c.c1.convert_to<double>() * nbar;
}

double beta_mth_phase_closed(int m, double nbar) {
  if (!(nbar > 0.0)) fail(ErrorKind::DomainError, "occupation must be > 0");
  const Coefficients c = mth_coefficients(m);
  const double c1 = c.c1.convert_to<double>(), c2 = c.c2.convert_to<double>();
  return 2.0 - c1 / (c2 * nbar + c1);
}

BigRational crossover_occupation_exact(int m) {
  const Coefficients c = mth_coefficients(m);
  return c.c1 / c.c2;
}

double crossover_occupation(int m) { return crossover_occupation_exact(m).convert_to<double>(); }

ScalingCurve ScalingCurve::from_samples(const std::vector<double>& nbar, const std::vector<double>& qfi) {
  if (nbar.size() != qfi.size()) fail(ErrorKind::DimensionMismatch, "curve sample sizes");
  ScalingCurve c;
  for (std::size_t i = 0; i < nbar.size(); ++i) {
    if (!(nbar[i] > 0.0) || !(qfi[i] > 0.0)) fail(ErrorKind::DomainError, "curve samples must be positive");
    c.points.emplace_back(std::log10(nbar[i]), std::log10(qfi[i]));
  }
  return c;
}

ScalingCurve beta_numeric(ScalingCurve curve) {
  const auto& p = curve.points;
  const std::size_t n = p.size();
  if (n < 3) fail(ErrorKind::DomainError, "beta needs at least 3 points");
  for (std::size_t i = 1; i < n; ++i)
    if (!(p[i].first > p[i - 1].first)) fail(ErrorKind::DomainError, "occupations not strictly increasing");
  curve.beta.assign(n, 0.0);
  curve.beta[0] = (p[1].second - p[0].second) / (p[1].first - p[0].first);
  curve.beta[n - 1] = (p[n - 1].second - p[n - 2].second) / (p[n - 1].first - p[n - 2].first);
  for (std::size_t i = 1; i + 1 < n; ++i)
    curve.beta[i] = (p[i + 1].second - p[i - 1].second) / (p[i + 1].first - p[i - 1].first);
  return curve;
}

double max_beta(const ScalingCurve& curve) {
  if (curve.beta.empty()) fail(ErrorKind::DomainError, "curve has no beta values");
  return *std::max_element(curve.beta.begin(), curve.beta.end());
}

FitResult fit_max_beta(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 3) fail(ErrorKind::DomainError, "fit needs at least 3 samples");
  FitResult r;
  for (const auto& [alpha, mb] : samples) {
    if (!(alpha > 0.0) || !(mb > 0.0)) fail(ErrorKind::DomainError, "fit samples must be positive");
    r.samples.emplace_back(std::log10(alpha), std::log10(mb));
  }
  const double n = static_cast<double>(r.samples.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : r.samples) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : r.samples) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (!(sxx > 1e-24)) fail(ErrorKind::DegenerateInput, "fit abscissae are degenerate");
  r.a = sxy / sxx;
  r.b = my - r.a * mx;
  double ssr = 0.0;
  for (const auto& [x, y] : r.samples) {
    const double e = y - (r.a * x + r.b);
    ssr += e * e;
  }
  const double s2 = ssr / (n - 2.0);
  r.stderr_a = std::sqrt(std::max(0.0, s2 / sxx));
  r.stderr_b = std::sqrt(std::max(0.0, s2 * (1.0 / n + mx * mx / sxx)));
  return r;
}

std::vector<double> log_grid(double start, double stop, int per_decade) {
  if (!(start > 0.0) || !(stop >= start) || per_decade < 1)
    fail(ErrorKind::DomainError, "grid needs 0 < start <= stop and points per decade >= 1");
  std::vector<double> out;
  const double l0 = std::log10(start), l1 = std::log10(stop);
  for (int i = 0;; ++i) {
    const double l = l0 + static_cast<double>(i) / per_decade;
    if (l > l1 + 1e-9) break;
    out.push_back(std::pow(10.0, l));
  }
  return out;
}

}  // namespace fockmetro
