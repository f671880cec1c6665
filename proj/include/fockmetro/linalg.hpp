#pragma once

#include <Eigen/Dense>

namespace fockmetro::linalg {

struct RealEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns
};

struct ComplexEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXcd vectors;
};

RealEigen eigh(const Eigen::MatrixXd& a);
ComplexEigen eigh(const Eigen::MatrixXcd& a);
Eigen::VectorXd eigvalsh(const Eigen::MatrixXcd& a);

// symmetric tridiagonal: diagonal d, off-diagonal e (size n-1)
RealEigen eigh_tridiagonal(const Eigen::VectorXd& d, const Eigen::VectorXd& e);

// pins the BLAS backend thread count; results are reproducible at 1
void set_blas_threads(int n);

// true when every imaginary part is exactly zero
bool is_real(const Eigen::MatrixXcd& a);

}  // namespace fockmetro::linalg
