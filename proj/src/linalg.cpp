#include "fockmetro/linalg.hpp"

#include <lapacke.h>

#include "fockmetro/errors.hpp"

extern "C" void openblas_set_num_threads(int);

namespace fockmetro::linalg {

void set_blas_threads(int n) { openblas_set_num_threads(n); }

RealEigen eigh(const Eigen::MatrixXd& a) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  RealEigen out{Eigen::VectorXd(n), a};
  if (n == 0) return out;
  lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, out.vectors.data(), n,
                                   out.values.data());
  if (info != 0) fail(ErrorKind::NumericalIntegrity, "dsyevd info " + std::to_string(info));
  return out;
}

ComplexEigen eigh(const Eigen::MatrixXcd& a) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  ComplexEigen out{Eigen::VectorXd(n), a};
  if (n == 0) return out;
  lapack_int info =
      LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                     reinterpret_cast<lapack_complex_double*>(out.vectors.data()), n,
                     out.values.data());
  if (info != 0) fail(ErrorKind::NumericalIntegrity, "zheevd info " + std::to_string(info));
  return out;
}

Eigen::VectorXd eigvalsh(const Eigen::MatrixXcd& a) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  Eigen::MatrixXcd work = a;
  Eigen::VectorXd w(n);
  if (n == 0) return w;
  lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'L', n,
                                   reinterpret_cast<lapack_complex_double*>(work.data()), n,
                                   w.data());
  if (info != 0) fail(ErrorKind::NumericalIntegrity, "zheevd info " + std::to_string(info));
  return w;
}

RealEigen eigh_tridiagonal(const Eigen::VectorXd& d, const Eigen::VectorXd& e) {
  const lapack_int n = static_cast<lapack_int>(d.size());
  RealEigen out{d, Eigen::MatrixXd(n, n)};
  if (n == 0) return out;
  Eigen::VectorXd off = e;
  if (off.size() < n) off.conservativeResize(n);
  lapack_int info =
      LAPACKE_dstevd(LAPACK_COL_MAJOR, 'V', n, out.values.data(), off.data(), out.vectors.data(), n);
  if (info != 0) fail(ErrorKind::NumericalIntegrity, "dstevd info " + std::to_string(info));
  return out;
}

bool is_real(const Eigen::MatrixXcd& a) {
  for (Eigen::Index k = 0; k < a.size(); ++k)
    if (a.data()[k].imag() != 0.0) return false;
  return true;
}

}  // namespace fockmetro::linalg
