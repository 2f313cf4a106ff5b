#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace sep {

inline constexpr int kMaxDim = 4;
using VecD = std::array<double, kMaxDim>;

inline VecD zero_vec() { return VecD{0.0, 0.0, 0.0, 0.0}; }

inline double dot(const VecD& a, const VecD& b, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += a[k] * b[k];
  return s;
}

inline double norm2(const VecD& a, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += a[k] * a[k];
  return s;
}

// Dense d x d symmetric matrix, row-major, d <= kMaxDim.
struct SymMat {
  int dim = 0;
  std::array<double, kMaxDim * kMaxDim> m{};
  double& at(int i, int j) { return m[i * kMaxDim + j]; }
  double at(int i, int j) const { return m[i * kMaxDim + j]; }
  static SymMat identity(int d);
  static SymMat zero(int d);
  VecD apply(const VecD& x) const;
  double quad(const VecD& x) const;  // x . M x
  double max_abs() const;
};

// Eigen-decomposition of a SymMat: eigenvalues nonincreasing, orthonormal
// eigenvectors as rows of `vectors` (vectors[k] is the k-th eigenvector).
struct SymEigen {
  int dim = 0;
  std::array<double, kMaxDim> values{};
  std::array<VecD, kMaxDim> vectors{};
};

SymEigen sym_eigen(const SymMat& a);

}  // namespace sep
