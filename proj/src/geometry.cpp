#include "sepsim/geometry.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "sepsim/errors.hpp"

namespace sep::env {

namespace {

constexpr double kFaceTol = 1e-12;

void invert(int d, const std::array<double, kMaxDim * kMaxDim>& M,
            std::array<double, kMaxDim * kMaxDim>& Minv, double* det) {
  Eigen::MatrixXd A(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) A(i, j) = M[i * kMaxDim + j];
  double dt = A.determinant();
  if (std::abs(dt) < 1e-14)
    throw ValidationError("geometry: basis matrix is singular");
  Eigen::MatrixXd Ai = A.inverse();
  Minv.fill(0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) Minv[i * kMaxDim + j] = Ai(i, j);
  if (det) *det = dt;
}

inline VecD matvec(int d, const std::array<double, kMaxDim * kMaxDim>& M,
                   const VecD& x) {
  VecD y = zero_vec();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) y[i] += M[i * kMaxDim + j] * x[j];
  return y;
}

}  // namespace

GroupAction GroupAction::lattice(int d, std::span<const double> basis) {
  if (d < 1 || d > kMaxDim)
    throw ValidationError("geometry: dimension must be in [1, " +
                          std::to_string(kMaxDim) + "]");
  GroupAction a;
  a.dim = d;
  a.kind = GroupKind::Lattice;
  a.V.fill(0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a.V[i * kMaxDim + j] = basis[i * d + j];
  invert(d, a.V, a.Vinv, &a.det);
  return a;
}

GroupAction GroupAction::cubic(int d) {
  std::array<double, kMaxDim * kMaxDim> id{};
  for (int i = 0; i < d; ++i) id[i * d + i] = 1.0;
  return lattice(d, std::span<const double>(id.data(), d * d));
}

GroupAction GroupAction::continuum(int d) {
  GroupAction a = cubic(d);
  a.kind = GroupKind::Continuum;
  return a;
}

VecD GroupAction::apply_basis(const VecD& g) const { return matvec(dim, V, g); }
VecD GroupAction::apply_inverse(const VecD& x) const {
  return matvec(dim, Vinv, x);
}

OrbitDecomposition orbit_decompose(const VecD& x, const GroupAction& action) {
  OrbitDecomposition out;
  VecD f = action.apply_inverse(x);
  if (action.kind == GroupKind::Continuum) {
    // Degenerate branch: the orbit of the origin is all of R^d, so
    // g(x) = V^{-1} x and beta = 0.
    out.g = f;
    out.beta = zero_vec();
    out.integral = false;
    return out;
  }
  out.g = zero_vec();
  for (int k = 0; k < action.dim; ++k) {
    double fk = f[k];
    double g = std::floor(fk);
    // Snap to the next integer when within the face tolerance below it.
    if (fk - g > 1.0 - kFaceTol) g += 1.0;
    out.g_int[k] = static_cast<long>(g);
    out.g[k] = g;
  }
  VecD vg = action.apply_basis(out.g);
  out.beta = zero_vec();
  for (int k = 0; k < action.dim; ++k) {
    double b = x[k] - vg[k];
    if (std::abs(b) < kFaceTol) b = 0.0;
    out.beta[k] = b;
  }
  return out;
}

Torus Torus::from_box(int d, std::span<const double> box) {
  Torus t;
  t.dim = d;
  t.B.fill(0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) t.B[i * kMaxDim + j] = box[i * d + j];
  invert(d, t.B, t.Binv, nullptr);
  t.diagonal = true;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (i != j && t.B[i * kMaxDim + j] != 0.0) t.diagonal = false;
  return t;
}

void Torus::wrap(VecD& x) const {
  VecD f = matvec(dim, Binv, x);
  for (int k = 0; k < dim; ++k) f[k] -= std::floor(f[k]);
  x = matvec(dim, B, f);
}

void Torus::min_image(VecD& dx) const {
  if (diagonal) {
    for (int k = 0; k < dim; ++k) {
      double L = B[k * kMaxDim + k];
      dx[k] -= L * std::round(dx[k] / L);
    }
    return;
  }
  VecD f = matvec(dim, Binv, dx);
  for (int k = 0; k < dim; ++k) f[k] -= std::round(f[k]);
  // Scan neighbor images; the fractional round alone is not exact for
  // skewed cells.
  VecD best = matvec(dim, B, f);
  double bn = norm2(best, dim);
  int combos = 1;
  for (int k = 0; k < dim; ++k) combos *= 3;
  for (int c = 0; c < combos; ++c) {
    VecD g = f;
    int cc = c;
    bool nontrivial = false;
    for (int k = 0; k < dim; ++k) {
      int off = cc % 3 - 1;
      cc /= 3;
      g[k] += off;
      nontrivial = nontrivial || off != 0;
    }
    if (!nontrivial) continue;
    VecD cand = matvec(dim, B, g);
    double n = norm2(cand, dim);
    if (n < bn) {
      bn = n;
      best = cand;
    }
  }
  dx = best;
}

VecD Torus::centered(const VecD& x) const {
  VecD f = matvec(dim, Binv, x);
  for (int k = 0; k < dim; ++k) f[k] -= std::floor(f[k] + 0.5);
  return matvec(dim, B, f);
}

double Torus::distance(const VecD& a, const VecD& b) const {
  VecD d = zero_vec();
  for (int k = 0; k < dim; ++k) d[k] = b[k] - a[k];
  min_image(d);
  return std::sqrt(norm2(d, dim));
}

double Torus::half_min_extent() const {
  // Spacing between opposite faces of the cell is 1/|row_k(B^{-1})|.
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < dim; ++k) {
    double r2 = 0.0;
    for (int j = 0; j < dim; ++j) {
      double v = Binv[k * kMaxDim + j];
      r2 += v * v;
    }
    best = std::min(best, 0.5 / std::sqrt(r2));
  }
  return best;
}

double Torus::diameter() const {
  double s = 0.0;
  for (int j = 0; j < dim; ++j) {
    VecD col = zero_vec();
    for (int i = 0; i < dim; ++i) col[i] = B[i * kMaxDim + j];
    s += std::sqrt(norm2(col, dim));
  }
  return s;
}

}  // namespace sep::env
