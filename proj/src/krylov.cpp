#include <cmath>

#include "fockmetro/errors.hpp"
#include "fockmetro/fock.hpp"
#include "fockmetro/linalg.hpp"

namespace fockmetro {

CVec krylov_expv(const SpMat& h, double phase, const CVec& v, double tol, int subspace,
                 long max_iterations) {
  const Eigen::Index n = v.size();
  if (h.rows() != n) fail(ErrorKind::DimensionMismatch, "krylov operator/vector size");
  const double beta0 = v.norm();
  if (beta0 == 0.0 || phase == 0.0) return v;

  const double total = std::abs(phase);
  const double sign = phase > 0 ? 1.0 : -1.0;
  CVec w = v / beta0;
  double done = 0.0;
  double tau = total;
  long iterations = 0;
  const int m_max = static_cast<int>(std::min<Eigen::Index>(subspace, n));

  while (done < total) {
    CMat basis(n, m_max + 1);
    RVec alpha(m_max), beta(m_max);
    basis.col(0) = w;
    int m = 0;
    bool breakdown = false;
    for (int j = 0; j < m_max; ++j) {
      CVec u = h * basis.col(j);
      alpha(j) = basis.col(j).dot(u).real();
      // full reorthogonalization, twice
      for (int pass = 0; pass < 2; ++pass)
        for (int k = 0; k <= j; ++k) u -= basis.col(k) * basis.col(k).dot(u);
      const double b = u.norm();
      beta(j) = b;
      m = j + 1;
      if (++iterations > max_iterations)
        fail(ErrorKind::ConvergenceFailure, "krylov iteration budget exhausted");
      if (b <= 1e-14 * (std::abs(alpha(j)) + 1.0)) {
        breakdown = true;
        break;
      }
      basis.col(j + 1) = u / b;
    }
    RVec off = m > 1 ? RVec(beta.head(m - 1)) : RVec();
    auto ev = linalg::eigh_tridiagonal(alpha.head(m), off);
    const RVec first = ev.vectors.row(0).transpose();

    for (;;) {
      const double step = std::min(tau, total - done);
      CVec coeff(m);
      for (int k = 0; k < m; ++k) coeff(k) = std::polar(1.0, sign * step * ev.values(k)) * first(k);
      CVec y = ev.vectors.cast<cplx>() * coeff;
      const double err = breakdown ? 0.0 : beta(m - 1) * std::abs(y(m - 1));
      if (err <= tol * step / total || breakdown) {
        w = basis.leftCols(m) * y;
        done += step;
        if (breakdown) tau = total;
        else tau = std::min(2.0 * step, total);
        break;
      }
      tau = 0.5 * step;
      if (tau < 1e-14 * total) fail(ErrorKind::ConvergenceFailure, "krylov step underflow");
    }
  }
  return beta0 * w;
}

}  // namespace fockmetro
