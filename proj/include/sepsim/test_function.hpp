#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sepsim/linalg.hpp"

namespace sep::hydro {

// Compactly supported test function with value, gradient and Hessian
// evaluators. Everything vanishes outside the ball of radius r_supp.
class TestFunction {
 public:
  using ValueFn = std::function<double(const VecD&)>;
  using GradFn = std::function<VecD(const VecD&)>;
  using HessFn = std::function<SymMat(const VecD&)>;

  TestFunction() = default;
  TestFunction(int dim, double r_supp, std::string tag, ValueFn v, GradFn g,
               HessFn h);

  int dim() const { return dim_; }
  double support_radius() const { return r_supp_; }
  const std::string& tag() const { return tag_; }

  double value(const VecD& x) const;
  VecD gradient(const VecD& x) const;
  SymMat hessian(const VecD& x) const;

  // sum_ik D_ik d^2 phi / dx_i dx_k at x.
  double diffusion_apply(const SymMat& D, const VecD& x) const;

  double integral(double tol = 1e-9) const;      // int phi dx over the support
  double abs_integral(double tol = 1e-9) const;  // int |phi| dx
  double l2_integral(double tol = 1e-9) const;   // int phi^2 dx

 private:
  int dim_ = 0;
  double r_supp_ = 0.0;
  std::string tag_;
  ValueFn value_;
  GradFn grad_;
  HessFn hess_;
};

// Smooth radial mollifier exp(1 - 1/(1 - |x/r|^2)) on B_r, scaled by `amp`.
TestFunction bump(int dim, double r, double amp = 1.0);

// C^inf plateau: 1 on B_l, 0 outside B_{l+1}.
TestFunction plateau(int dim, double l);

// x_axis * bump(dim, r): odd moment probe.
TestFunction linear_bump(int dim, double r, int axis);

// The indexed family phi_j used by the measure metric: for each radius
// l = 1..l_max it contains the plateau at l, a bump of radius l, and the d
// linear-modulated bumps of radius l.
std::vector<TestFunction> test_function_family(int dim, int l_max);

}  // namespace sep::hydro
