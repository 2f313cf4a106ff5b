#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sepsim/environment.hpp"

namespace sep::walk {

// Sparse symmetric action u -> L^eps u with
//   (L^eps u)(i) = eps^{-2} sum_j c_ij (u(j) - u(i)).
// Row sums vanish; the operator is negative semidefinite and self-adjoint in
// L^2(eps^d counting measure).
class Generator {
 public:
  Generator(const env::Environment& e, double eps);

  const env::Environment& environment() const { return *env_; }
  double eps() const { return eps_; }
  double scale() const { return scale_; }                 // eps^{-2}
  double max_rate() const { return max_exit_ * scale_; }  // uniformization rate

  void apply(std::span<const double> u, std::span<double> out) const;
  // <u, L^eps v> with the eps^d-weighted counting measure.
  double l2_inner(std::span<const double> u, std::span<const double> v) const;
  double l2_norm(std::span<const double> u) const;

 private:
  const env::Environment* env_;
  double eps_;
  double scale_;
  double max_exit_;
};

struct WalkPath {
  std::int64_t start = 0;
  double t_end = 0.0;
  std::vector<double> times;          // jump times, strictly increasing
  std::vector<std::int32_t> points;   // point after each jump
};

// Continuous-time walk: holding time Exp(c_i), jump j with prob c_ij / c_i.
WalkPath sample_walk_path(const env::Environment& e, std::int64_t x0,
                          double t_end, std::uint64_t seed);

struct UniformizationReport {
  int splits = 1;
  int series_terms = 0;       // max over splits
  double clamped_mass = 0.0;  // negative mass removed before renormalizing
};

// Kernel row p_t(x, .) by uniformization, truncating the Poisson series when
// the tail mass drops below tol; time is split automatically when the
// uniformization rate times t is large (up to 64 splits).
std::vector<double> heat_kernel_row(const env::Environment& e, double eps,
                                    std::int64_t x, double t, double tol,
                                    UniformizationReport* report = nullptr);

std::vector<double> semigroup_apply(const env::Environment& e, double eps,
                                    double t, std::span<const double> f,
                                    double tol,
                                    UniformizationReport* report = nullptr);

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  std::vector<double> residual_history;
};

// Solve (lambda - L^eps) u = f by Jacobi-preconditioned conjugate gradients.
// tol is the relative residual target. The maximum principle
// |u|_inf <= |f|_inf / lambda and the L^2 bound lambda |u| <= |f| are
// checked on exit.
std::vector<double> resolvent_solve(const env::Environment& e, double eps,
                                    double lambda, std::span<const double> f,
                                    double tol = 1e-10,
                                    SolveReport* report = nullptr);

// eps^{d-2}/2 * sum_xy c_xy (u(y)-u(x)) (v(y)-v(x)).
double dirichlet_form(const env::Environment& e, double eps,
                      std::span<const double> u, std::span<const double> v);

}  // namespace sep::walk
