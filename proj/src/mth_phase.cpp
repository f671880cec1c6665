#include <cmath>
#include <numbers>

#include "fockmetro/errors.hpp"
#include "fockmetro/linalg.hpp"
#include "fockmetro/metrology.hpp"
#include "fockmetro/states.hpp"

namespace fockmetro {

double mth_phase_occupation_closed(int m, double gamma) {
  const double df = static_cast<double>(double_factorial(2 * m - 3));
  return m * m * gamma * gamma * df / std::pow(2.0, m);
}

double gamma_for_occupation(int m, double nbar) {
  if (!(nbar >= 0.0)) fail(ErrorKind::DomainError, "occupation must be >= 0");
  if (m < 2) fail(ErrorKind::DomainError, "order must be >= 2");
  const double df = static_cast<double>(double_factorial(2 * m - 3));
  return std::sqrt(nbar * std::pow(2.0, m) / (m * m * df));
}

namespace {

// e^{i g x_N^m}|0> through the eigensystem of the truncated position operator
CVec exponential_route(int m, double gamma, int dim) {
  RVec d = RVec::Zero(dim);
  RVec e(dim - 1);
  for (int n = 0; n + 1 < dim; ++n) e(n) = std::sqrt((n + 1) / 2.0);
  const auto eig = linalg::eigh_tridiagonal(d, e);
  CVec coeff(dim);
  for (int k = 0; k < dim; ++k)
    coeff(k) = std::polar(1.0, gamma * std::pow(eig.values(k), m)) * eig.vectors(0, k);
  return eig.vectors.cast<cplx>() * coeff;
}

}  // namespace

CVec mth_phase_projection(int m, double gamma, int count) {
  if (count < 1) fail(ErrorKind::InvalidDimension, "projection count must be positive");
  const double length = 9.5;
  const double band = std::sqrt(2.0 * count + 1.0) + m * gamma * std::pow(length, m - 1);
  const double h0 = 2.0 * std::numbers::pi / (1.3 * band + 20.0);
  const int points = static_cast<int>(std::ceil(length / h0)) + 1;
  const double h = length / (points - 1);

  RVec x(points), phi_prev(points), phi(points);
  // g_even / g_odd absorb trapezoid weight, vacuum wavefunction and phase, folded onto x >= 0
  CVec g_even(points), g_odd(points);
  const double norm0 = std::pow(std::numbers::pi, -0.25);
  for (int k = 0; k < points; ++k) {
    x(k) = k * h;
    const double w = (k == 0 || k == points - 1) ? 0.5 * h : h;
    const double phi0 = norm0 * std::exp(-0.5 * x(k) * x(k));
    const double theta = gamma * std::pow(x(k), m);
    const cplx ph = std::polar(1.0, theta);
    if (m % 2 == 0) {
      g_even(k) = 2.0 * w * phi0 * ph;
      g_odd(k) = 0.0;
    } else {
      g_even(k) = 2.0 * w * phi0 * std::cos(theta);
      g_odd(k) = cplx(0.0, 2.0 * w * phi0 * std::sin(theta));
    }
    phi(k) = phi0;
  }
  const RVec er = g_even.real(), ei = g_even.imag(), orr = g_odd.real(), oi = g_odd.imag();
  CVec c = CVec::Zero(count);
  phi_prev.setZero();
  for (int n = 0; n < count; ++n) {
    if (n % 2 == 0) c(n) = cplx(phi.dot(er), phi.dot(ei));
    else if (m % 2 != 0) c(n) = cplx(phi.dot(orr), phi.dot(oi));
    const double a = std::sqrt(2.0 / (n + 1.0));
    const double b = std::sqrt(n / (n + 1.0));
    phi_prev = a * x.cwiseProduct(phi) - b * phi_prev;
    phi_prev.swap(phi);
  }
  return c;
}

PureState mth_phase_state(const MthPhaseSpec& spec, const TruncationPolicy& policy, MthPhaseMethod method) {
  spec.validate();
  policy.validate();
  const int dim = policy.dim;
  if (method == MthPhaseMethod::Auto)
    method = dim <= 2000 ? MthPhaseMethod::Exponential : MthPhaseMethod::Projection;
  CVec c;
  if (spec.gamma == 0.0) {
    c = CVec::Zero(dim);
    c(0) = 1.0;
  } else if (method == MthPhaseMethod::Exponential) {
    c = exponential_route(spec.m, spec.gamma, dim);
    if (std::abs(c.norm() - 1.0) > 1e-10)
      fail(ErrorKind::NumericalIntegrity, "exponential route lost normalization");
  } else {
    c = mth_phase_projection(spec.m, spec.gamma, dim);
  }
  PureState s = PureState::normalized(std::move(c), policy);
  if (!s.converged()) throw UnconvergedTruncation("single", dim, s.tail(), policy.tail_tol);
  return s;
}

}  // namespace fockmetro
