#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sepsim/environment.hpp"
#include "sepsim/exclusion.hpp"
#include "sepsim/linalg.hpp"
#include "sepsim/test_function.hpp"

namespace sep::hydro {

// Macroscopic initial profile rho_0 with values in [0,1], together with the
// effective matrix driving the limit equation. Step and constant profiles
// evaluate in closed form under the heat semigroup; the rest go through
// quadrature along the non-degenerate eigendirections.
class MacroProfile {
 public:
  static MacroProfile constant(int dim, double c, const SymMat& D);
  // rho_0(x) = lo + (hi - lo) 1{x . normal < threshold}
  static MacroProfile step(int dim, const VecD& normal, double threshold,
                           double hi_side_below, double lo_side_above,
                           const SymMat& D);
  static MacroProfile smooth_bump(int dim, double radius, double lo, double hi,
                                  const SymMat& D);
  // 1-D table along `axis`, linear interpolation, constant extension.
  static MacroProfile table(int dim, int axis, std::vector<double> xs,
                            std::vector<double> vals, const SymMat& D);
  static MacroProfile custom(int dim, std::function<double(const VecD&)> f,
                             double lo, double hi, const SymMat& D);

  int dim() const { return dim_; }
  const SymMat& diffusion() const { return D_; }
  const SymEigen& eigen() const { return eigs_; }
  int positive_rank() const { return d_star_; }
  double range_lo() const { return lo_; }
  double range_hi() const { return hi_; }
  double rho0(const VecD& x) const;

  std::string kind() const { return kind_; }

 private:
  MacroProfile(int dim, std::string kind, const SymMat& D);
  int dim_ = 0;
  std::string kind_;
  SymMat D_;
  SymEigen eigs_;
  int d_star_ = 0;
  double rank_threshold_ = 0.0;
  double lo_ = 0.0, hi_ = 1.0;
  std::function<double(const VecD&)> eval_;
  // step data
  VecD normal_{};
  double threshold_ = 0.0;
  double below_ = 1.0, above_ = 0.0;
  bool closed_form_step_ = false;

  friend double heat_solution(const MacroProfile&, const VecD&, double, double);
};

// E[ f(x + N(0, 2 D t)) ] restricted to the positive-eigenvalue subspace of
// D; identity along null directions. Adaptive to `tol` (absolute).
double gaussian_semigroup(const SymMat& D, const SymEigen& eigs, int d_star,
                          const std::function<double(const VecD&)>& f,
                          const VecD& x, double t, double tol);

// Same quantity for a compactly supported test function; the support radius
// bounds the integration window, which keeps sharp kernels (small t) exact.
double gaussian_semigroup_tf(const SymMat& D, const SymEigen& eigs, int d_star,
                             const TestFunction& phi, const VecD& x, double t,
                             double tol);

// rho(x, t) = P_t rho_0 (x); closed forms for constant and step profiles.
double heat_solution(const MacroProfile& profile, const VecD& x, double t,
                     double tol = 1e-6);

// pi^eps(phi) = eps^d sum_{eta(x)=1} phi(eps x), centered torus coordinates.
double empirical_eval(const env::Environment& e, const excl::ParticleConfig& eta,
                      double eps, const TestFunction& phi);

// mu^eps(phi): the eta == 1 case.
double mu_eval(const env::Environment& e, double eps, const TestFunction& phi);

struct MeasureDistance {
  double value = 0.0;  // truncated sum
  double tail = 0.0;   // 2^{-j_max + 1} uncertainty from truncation
};

// d_M(mu, nu) = sum_j 2^{-j} (1 and |mu(phi_j) - nu(phi_j)|), truncated at
// j_max (lists hold evaluations for j = 0 .. j_max - 1).
MeasureDistance measure_distance(std::span<const double> mu_evals,
                                 std::span<const double> nu_evals);

// Residual alpha_t(phi) - alpha_0(phi) - int_0^t alpha_s(div D grad phi) ds
// with the time integral by trapezoid on `grid` (>= 8 intervals, grid[0]=0,
// grid.back()=t). path_eval(psi, s) evaluates the measure at time s against
// psi (either phi itself or its diffusion image).
double weak_solution_residual(
    const std::function<double(const std::function<double(const VecD&)>&,
                               double)>& path_eval,
    const SymMat& D, const TestFunction& phi, std::span<const double> grid);

// eta(x) ~ Bernoulli(rho_0(eps x)) independently.
excl::ParticleConfig init_product_bernoulli(const env::Environment& e,
                                            const MacroProfile& profile,
                                            double eps, std::uint64_t seed);

// Var(pi^eps(phi)) for the product-Bernoulli initial law.
double bernoulli_variance(const env::Environment& e, const MacroProfile& profile,
                          double eps, const TestFunction& phi);

struct CorrectedGap {
  double l1_gap = 0.0;      // eps^d sum |G(eps x) - G^eps(eps x)|
  double pi_gap_bound = 0.0;  // deterministic bound on |pi(G) - pi(G^eps)|
  int cg_iterations = 0;
  double cg_residual = 0.0;
  std::vector<double> g_eps;  // resolvent-corrected test function on points
};

CorrectedGap corrected_empirical_gap(const env::Environment& e, double eps,
                                     const TestFunction& G, double lambda,
                                     const SymMat& D, double tol = 1e-10);

struct HydroConfig {
  std::vector<double> eps_grid;
  double horizon = 0.5;
  int time_points = 64;
  std::int64_t replicas = 50;
  std::uint64_t seed = 1;
  std::vector<double> thresholds = {0.01, 0.02, 0.05, 0.1};
  std::int64_t component_cap = 1000;
  double quad_tol = 1e-6;
};

struct HydroCell {
  double eps = 0.0;
  int phi_index = 0;
  std::vector<double> sup_deviation;  // per replica
  double median_sup = 0.0;
  double mean_sup = 0.0;
  std::vector<double> exceedance;  // per threshold
};

struct HydroReport {
  HydroConfig config;
  std::vector<double> quadrature_error;  // per phi: quad budget |int phi rho|
  std::vector<HydroCell> cells;
};

// Full hydrodynamic-limit experiment: product-Bernoulli initial data, clocks
// accelerated by eps^{-2}, sup over the time grid of
// |pi^eps_t(phi) - int phi rho(., t)| per replica.
HydroReport hydro_experiment(const env::Environment& e,
                             const MacroProfile& profile,
                             std::span<const TestFunction> phis,
                             const HydroConfig& cfg);

}  // namespace sep::hydro
