#include "sepsim/linalg.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace sep {

SymMat SymMat::identity(int d) {
  SymMat s = zero(d);
  for (int i = 0; i < d; ++i) s.at(i, i) = 1.0;
  return s;
}

SymMat SymMat::zero(int d) {
  SymMat s;
  s.dim = d;
  s.m.fill(0.0);
  return s;
}

VecD SymMat::apply(const VecD& x) const {
  VecD y = zero_vec();
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) y[i] += at(i, j) * x[j];
  return y;
}

double SymMat::quad(const VecD& x) const {
  double s = 0.0;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) s += x[i] * at(i, j) * x[j];
  return s;
}

double SymMat::max_abs() const {
  double s = 0.0;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) s = std::max(s, std::abs(at(i, j)));
  return s;
}

SymEigen sym_eigen(const SymMat& a) {
  Eigen::MatrixXd M(a.dim, a.dim);
  for (int i = 0; i < a.dim; ++i)
    for (int j = 0; j < a.dim; ++j) M(i, j) = a.at(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  SymEigen out;
  out.dim = a.dim;
  // Eigen sorts ascending; flip to nonincreasing.
  for (int k = 0; k < a.dim; ++k) {
    int src = a.dim - 1 - k;
    out.values[k] = es.eigenvalues()(src);
    VecD v = zero_vec();
    for (int i = 0; i < a.dim; ++i) v[i] = es.eigenvectors()(i, src);
    out.vectors[k] = v;
  }
  return out;
}

}  // namespace sep
