#pragma once

// Reference computations for tests, written independently of the library internals.

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline CMat annihilation(int d) {
  CMat a = CMat::Zero(d, d);
  for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(double(n));
  return a;
}

inline CMat number(int d) {
  CMat n = CMat::Zero(d, d);
  for (int k = 0; k < d; ++k) n(k, k) = k;
  return n;
}

inline CMat position(int d) {
  const CMat a = annihilation(d);
  return (a + a.adjoint()) / std::sqrt(2.0);
}

inline CMat momentum(int d) {
  const CMat a = annihilation(d);
  return cplx(0, 1) * (a.adjoint() - a) / std::sqrt(2.0);
}

// weight function e^{-x^2}
struct Quadrature {
  RVec x, w;
};

// nodes by Golub-Welsch; weights from the Christoffel formula, which keeps
// their relative accuracy far out in the tails
inline Quadrature gauss_hermite(int n) {
  RMat j = RMat::Zero(n, n);
  for (int k = 1; k < n; ++k) j(k, k - 1) = j(k - 1, k) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<RMat> es(j);
  Quadrature q{es.eigenvalues(), RVec(n)};
  for (int i = 0; i < n; ++i) {
    const double x = q.x(i);
    double h0 = 1.0, h1 = std::sqrt(2.0) * x;
    for (int k = 1; k < n - 1; ++k) {
      const double next = std::sqrt(2.0 / (k + 1)) * x * h1 - std::sqrt(double(k) / (k + 1)) * h0;
      h0 = h1;
      h1 = next;
    }
    q.w(i) = std::sqrt(M_PI) / (n * h1 * h1);
  }
  return q;
}

// <n| e^{i g x^m} |0> via Hermite-function quadrature
inline CVec mth_phase_amplitudes(int m, double g, int count, int nodes = 300) {
  const Quadrature q = gauss_hermite(nodes);
  CVec c = CVec::Zero(count);
  for (int i = 0; i < nodes; ++i) {
    const double x = q.x(i);
    const cplx phase = std::exp(cplx(0, g * std::pow(x, m)));
    // orthonormal Hermite polynomials under e^{-x^2}/sqrt(pi)
    double h0 = 1.0, h1 = std::sqrt(2.0) * x;
    for (int n = 0; n < count; ++n) {
      const double h = n == 0 ? h0 : h1;
      c(n) += q.w(i) / std::sqrt(M_PI) * h * phase;
      if (n >= 1) {
        const double next = std::sqrt(2.0 / (n + 1)) * x * h1 - std::sqrt(double(n) / (n + 1)) * h0;
        h0 = h1;
        h1 = next;
      }
    }
  }
  return c;
}

inline double log_factorial(int n) { return std::lgamma(n + 1.0); }

inline CVec coherent(double alpha, int d) {
  CVec v(d);
  for (int n = 0; n < d; ++n)
    v(n) = std::exp(-alpha * alpha / 2 + n * std::log(std::abs(alpha) + 1e-300) - 0.5 * log_factorial(n)) *
           (alpha < 0 && n % 2 ? -1.0 : 1.0);
  if (alpha == 0.0) {
    v.setZero();
    v(0) = 1;
  }
  return v;
}

// S(r)|0>, S = exp((a^2 - a^dag^2) r / 2)
inline CVec squeezed(double r, int d) {
  CVec v = CVec::Zero(d);
  const double t = std::tanh(r);
  for (int k = 0; 2 * k < d; ++k)
    v(2 * k) = (k % 2 ? -1.0 : 1.0) / std::sqrt(std::cosh(r)) *
               std::exp(0.5 * log_factorial(2 * k) - log_factorial(k) + k * std::log(t / 2 + 1e-300));
  return v;
}

inline CMat expm_hermitian(const CMat& h, double phase) {
  Eigen::SelfAdjointEigenSolver<CMat> es(h);
  const CVec e = (cplx(0, phase) * es.eigenvalues().cast<cplx>()).array().exp();
  return es.eigenvectors() * e.asDiagonal() * es.eigenvectors().adjoint();
}

// F = Tr(rho L^2) with (L rho + rho L)/2 = -i[n, rho], by Kronecker least squares
inline double qfi_sld(const CMat& rho, const CMat& h) {
  const int d = static_cast<int>(rho.rows());
  const CMat drho = cplx(0, -1) * (h * rho - rho * h);
  const CMat id = CMat::Identity(d, d);
  CMat k = CMat::Zero(d * d, d * d);
  // vec(L rho) = (rho^T (x) I) vec L ; vec(rho L) = (I (x) rho) vec L
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      k.block(i * d, j * d, d, d) += 0.5 * rho(j, i) * id;
      if (i == j) k.block(i * d, j * d, d, d) += 0.5 * rho;
    }
  const CVec b = Eigen::Map<const CVec>(drho.data(), d * d);
  const CVec l = k.completeOrthogonalDecomposition().solve(b);
  const CMat lm = Eigen::Map<const CMat>(l.data(), d, d);
  return (rho * lm * lm).trace().real();
}

inline CVec random_state(std::mt19937_64& rng, int d, int support) {
  std::normal_distribution<double> g;
  CVec v = CVec::Zero(d);
  for (int n = 0; n < support; ++n) v(n) = cplx(g(rng), g(rng));
  return v / v.norm();
}

inline CMat random_mixed(std::mt19937_64& rng, int d, int support, int rank) {
  std::normal_distribution<double> g;
  CMat w = CMat::Zero(d, rank);
  for (int c = 0; c < rank; ++c)
    for (int n = 0; n < support; ++n) w(n, c) = cplx(g(rng), g(rng));
  CMat rho = w * w.adjoint();
  return rho / rho.trace().real();
}

inline double trace_norm_distance(const CMat& a, const CMat& b) {
  Eigen::SelfAdjointEigenSolver<CMat> es(a - b);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace oracle
