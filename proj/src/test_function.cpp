#include "sepsim/test_function.hpp"

#include <cmath>

#include "sepsim/errors.hpp"
#include "sepsim/quadrature.hpp"

namespace sep::hydro {

TestFunction::TestFunction(int dim, double r_supp, std::string tag, ValueFn v,
                           GradFn g, HessFn h)
    : dim_(dim),
      r_supp_(r_supp),
      tag_(std::move(tag)),
      value_(std::move(v)),
      grad_(std::move(g)),
      hess_(std::move(h)) {}

double TestFunction::value(const VecD& x) const {
  if (norm2(x, dim_) >= r_supp_ * r_supp_) return 0.0;
  return value_(x);
}

VecD TestFunction::gradient(const VecD& x) const {
  if (norm2(x, dim_) >= r_supp_ * r_supp_) return zero_vec();
  return grad_(x);
}

SymMat TestFunction::hessian(const VecD& x) const {
  if (norm2(x, dim_) >= r_supp_ * r_supp_) return SymMat::zero(dim_);
  return hess_(x);
}

double TestFunction::diffusion_apply(const SymMat& D, const VecD& x) const {
  SymMat H = hessian(x);
  double s = 0.0;
  for (int i = 0; i < dim_; ++i)
    for (int k = 0; k < dim_; ++k) s += D.at(i, k) * H.at(i, k);
  return s;
}

namespace {

// Nested adaptive integration of f over [-r, r]^dim.
double box_integral(int dim, double r,
                    const std::function<double(VecD&)>& f, double tol) {
  VecD x = zero_vec();
  std::function<double(int, double)> rec = [&](int k, double tk) -> double {
    (void)tk;
    if (k == dim) return f(x);
    return quad::adaptive_simpson(
        [&](double t) {
          x[k] = t;
          return rec(k + 1, t);
        },
        -r, r, tol / std::pow(2.0 * r, dim - k), 24);
  };
  return rec(0, 0.0);
}

}  // namespace

double TestFunction::integral(double tol) const {
  return box_integral(dim_, r_supp_, [&](VecD& x) { return value(x); }, tol);
}

double TestFunction::abs_integral(double tol) const {
  return box_integral(
      dim_, r_supp_, [&](VecD& x) { return std::abs(value(x)); }, tol);
}

double TestFunction::l2_integral(double tol) const {
  return box_integral(
      dim_, r_supp_,
      [&](VecD& x) {
        double v = value(x);
        return v * v;
      },
      tol);
}

TestFunction bump(int dim, double r, double amp) {
  // m(x) = exp(psi(rho)), rho = |x|^2 / r^2, psi = 1 - 1/(1-rho).
  auto rho_of = [r, dim](const VecD& x) { return norm2(x, dim) / (r * r); };
  auto value = [=](const VecD& x) {
    double rho = rho_of(x);
    if (rho >= 1.0) return 0.0;
    return amp * std::exp(1.0 - 1.0 / (1.0 - rho));
  };
  auto grad = [=](const VecD& x) {
    VecD g = zero_vec();
    double rho = rho_of(x);
    if (rho >= 1.0) return g;
    double m = amp * std::exp(1.0 - 1.0 / (1.0 - rho));
    double dpsi = -1.0 / ((1.0 - rho) * (1.0 - rho));
    for (int k = 0; k < dim; ++k) g[k] = m * dpsi * 2.0 * x[k] / (r * r);
    return g;
  };
  auto hess = [=](const VecD& x) {
    SymMat H = SymMat::zero(dim);
    double rho = rho_of(x);
    if (rho >= 1.0) return H;
    double m = amp * std::exp(1.0 - 1.0 / (1.0 - rho));
    double u = 1.0 - rho;
    double dpsi = -1.0 / (u * u);
    double d2psi = -2.0 / (u * u * u);
    double c1 = 2.0 * dpsi / (r * r);
    double c2 = 4.0 * (d2psi + dpsi * dpsi) / (r * r * r * r);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        double v = m * c2 * x[i] * x[j];
        if (i == j) v += m * c1;
        H.at(i, j) = v;
      }
    }
    return H;
  };
  return TestFunction(dim, r, "bump(r=" + std::to_string(r) + ")", value, grad,
                      hess);
}

namespace {

// Scalar transition h on [0,1] with h(0) = 1, h(1) = 0, flat ends:
// h(t) = q(1-t) / (q(t) + q(1-t)), q(t) = exp(-1/t) for t > 0.
struct Transition {
  static double q(double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; }
  static double dq(double t) { return t > 0 ? q(t) / (t * t) : 0.0; }
  static double d2q(double t) {
    if (t <= 0) return 0.0;
    return q(t) * (1.0 / (t * t * t * t) - 2.0 / (t * t * t));
  }
  static double h(double t) {
    if (t <= 0) return 1.0;
    if (t >= 1) return 0.0;
    double A = q(1 - t), B = q(t);
    return A / (A + B);
  }
  static double dh(double t) {
    if (t <= 0 || t >= 1) return 0.0;
    double A = q(1 - t), B = q(t);
    double dA = -dq(1 - t), dB = dq(t);
    double S = A + B;
    return (dA * S - A * (dA + dB)) / (S * S);
  }
  static double d2h(double t) {
    if (t <= 0 || t >= 1) return 0.0;
    double A = q(1 - t), B = q(t);
    double dA = -dq(1 - t), dB = dq(t);
    double d2A = d2q(1 - t), d2B = d2q(t);
    double S = A + B, dS = dA + dB, d2S = d2A + d2B;
    // d/dt [ (dA S - A dS) / S^2 ]
    double N = dA * S - A * dS;
    double dN = d2A * S - A * d2S;
    return (dN * S * S - N * 2.0 * S * dS) / (S * S * S * S);
  }
};

// Radial function F(|x|) with F', F'' supplied; Hessian via the standard
// radial decomposition. Only evaluated where |x| is bounded away from 0
// whenever F'(0) != 0 (the plateau is flat near the origin).
SymMat radial_hessian(int dim, const VecD& x, double r, double dF, double d2F) {
  SymMat H = SymMat::zero(dim);
  if (r < 1e-14) {
    for (int i = 0; i < dim; ++i) H.at(i, i) = d2F;
    return H;
  }
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      double pij = x[i] * x[j] / (r * r);
      double v = d2F * pij + dF * ((i == j ? 1.0 : 0.0) - pij) / r;
      H.at(i, j) = v;
    }
  }
  return H;
}

}  // namespace

TestFunction plateau(int dim, double l) {
  if (!(l >= 1.0)) throw ValidationError("plateau radius must be >= 1");
  double rs = l + 1.0;
  auto value = [=](const VecD& x) {
    double r = std::sqrt(norm2(x, dim));
    return Transition::h(r - l);
  };
  auto grad = [=](const VecD& x) {
    VecD g = zero_vec();
    double r = std::sqrt(norm2(x, dim));
    double dF = Transition::dh(r - l);
    if (dF == 0.0 || r < 1e-14) return g;
    for (int k = 0; k < dim; ++k) g[k] = dF * x[k] / r;
    return g;
  };
  auto hess = [=](const VecD& x) {
    double r = std::sqrt(norm2(x, dim));
    return radial_hessian(dim, x, r, Transition::dh(r - l),
                          Transition::d2h(r - l));
  };
  return TestFunction(dim, rs, "plateau(l=" + std::to_string(l) + ")", value,
                      grad, hess);
}

TestFunction linear_bump(int dim, double r, int axis) {
  TestFunction base = bump(dim, r);
  auto value = [base, axis](const VecD& x) { return x[axis] * base.value(x); };
  auto grad = [base, axis, dim](const VecD& x) {
    VecD g = base.gradient(x);
    double m = base.value(x);
    for (int k = 0; k < dim; ++k) g[k] *= x[axis];
    g[axis] += m;
    return g;
  };
  auto hess = [base, axis, dim](const VecD& x) {
    SymMat H = base.hessian(x);
    VecD g = base.gradient(x);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        double v = x[axis] * H.at(i, j);
        if (i == axis) v += g[j];
        if (j == axis) v += g[i];
        H.at(i, j) = v;
      }
    return H;
  };
  return TestFunction(dim, r,
                      "x" + std::to_string(axis) + "*bump(r=" +
                          std::to_string(r) + ")",
                      value, grad, hess);
}

std::vector<TestFunction> test_function_family(int dim, int l_max) {
  std::vector<TestFunction> fam;
  fam.push_back(bump(dim, 1.0));
  for (int l = 1; l <= l_max; ++l) {
    fam.push_back(plateau(dim, static_cast<double>(l)));
    fam.push_back(bump(dim, static_cast<double>(l)));
    for (int k = 0; k < dim; ++k)
      fam.push_back(linear_bump(dim, static_cast<double>(l), k));
  }
  return fam;
}

}  // namespace sep::hydro
