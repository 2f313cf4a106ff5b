#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sepsim/environment.hpp"
#include "sepsim/linalg.hpp"
#include "sepsim/test_function.hpp"

namespace sep::homog {

struct Corrector {
  VecD direction{};
  std::vector<double> chi;   // zero-mean point function
  double energy = 0.0;       // attained value of the variational functional
  double zero_trial_energy = 0.0;  // chi = 0 value, an upper bound
  int cg_iterations = 0;
  double cg_residual = 0.0;
};

struct CorrectorOptions {
  double tol = 1e-10;
  bool force_cg = false;  // bypass the cycle direct solver (testing)
};

// Minimize (1/2N) sum_ij c_ij (a . d_ij - (chi_j - chi_i))^2 over point
// functions chi; the Euler-Lagrange system is the weighted graph Laplacian
// with right-hand side b_i = sum_j c_ij a . d_ij, solved with the mean-zero
// gauge. Single-cycle graphs (1-D rings) go through a grounded tridiagonal
// direct solve; everything else through conjugate gradients.
Corrector corrector_solve(const env::Environment& e, const VecD& a,
                          const CorrectorOptions& opts = {});

struct EffectiveMatrix {
  SymMat D;
  SymEigen eigen;
  double rank_threshold = 0.0;
  int positive_rank = 0;
  std::vector<double> direction_energies;  // d axis probes then mixed probes
  std::vector<double> residuals;
  std::vector<int> iterations;
  double box_side = 0.0;
};

// Axis probes give the diagonal; mixed probes (e_i + e_j)/sqrt(2) fill the
// off-diagonal entries by polarization. Eigenvalues below
// 1e-8 * leading are clamped to zero.
EffectiveMatrix effective_matrix(const env::Environment& e,
                                 const CorrectorOptions& opts = {});

struct MsdEstimate {
  SymMat estimate;     // Cov(X_t) / (2t)
  SymMat std_error;    // per-entry standard errors
  double t = 0.0;
  std::int64_t replicas = 0;
  double expected_jumps = 0.0;
  bool wrap_warning = false;  // sqrt(2 tr(D) t) > L/4
};

// Monte Carlo diffusivity from unwrapped displacements of independent walks
// started from uniformly chosen points.
MsdEstimate msd_diffusivity(const env::Environment& e, double t,
                            std::int64_t replicas, std::uint64_t seed,
                            bool strict = false);

struct ConvergenceGaps {
  std::vector<double> eps;
  std::vector<double> gap;     // L1(mu^eps) distances
  bool strictly_decreasing = false;
  double last_over_first = 0.0;
};

// R_lambda phi (x) of the Brownian motion with diffusion matrix 2D, by
// adaptive quadrature of the Gaussian semigroup in the substituted variable
// s = u^2 (the integrand has an essential singularity at s = 0 outside the
// support of phi, which defeats fixed Laguerre rules).
double continuum_resolvent_value(const SymMat& D, double lambda,
                                 const hydro::TestFunction& phi, const VecD& x,
                                 double tol = 1e-8);

// L1(mu^eps) gap between the finite resolvent R^eps_lambda phi and the
// continuum R_lambda phi of the Brownian motion with diffusion matrix 2D,
// per environment in the family (same law, growing boxes).
ConvergenceGaps resolvent_convergence_check(
    std::span<const env::Environment* const> family,
    std::span<const double> eps, const hydro::TestFunction& phi, double lambda,
    const SymMat& D, double solver_tol = 1e-10);

ConvergenceGaps semigroup_convergence_check(
    std::span<const env::Environment* const> family,
    std::span<const double> eps, const hydro::TestFunction& phi, double t,
    const SymMat& D, double kernel_tol = 1e-8);

struct TailMassRow {
  double eps = 0.0;
  std::vector<double> ell;
  std::vector<double> mass;  // int psi(|x|) 1{|x| >= ell} d mu^eps
};

// psi(r) = 1 / (1 + r^{d+1}).
std::vector<TailMassRow> tail_mass_check(const env::Environment& e,
                                         std::span<const double> eps_list,
                                         std::span<const double> ell_list);

// Finite-volume D_L table over environment sizes, optional Richardson
// extrapolation (heuristic, off by default).
struct DTableRow {
  double box_cells = 0.0;
  SymMat D;
};

struct DTable {
  std::vector<DTableRow> rows;
  bool extrapolated = false;
  SymMat richardson;  // only meaningful when extrapolated
};

DTable effective_matrix_table(std::span<const env::Environment* const> family,
                              bool richardson,
                              const CorrectorOptions& opts = {});

}  // namespace sep::homog
