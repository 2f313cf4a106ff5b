#include "sepsim/homogenization.hpp"

#include <algorithm>
#include <cmath>

#include "sepsim/errors.hpp"
#include "sepsim/hydrodynamics.hpp"
#include "sepsim/kernels.hpp"
#include "sepsim/quadrature.hpp"
#include "sepsim/random_walk.hpp"
#include "sepsim/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sep::homog {

namespace {

// Right-hand side b_i = sum_j c_ij a . d_ij. Orthogonal to constants by the
// antisymmetry of the minimal-image displacement under edge reversal.
std::vector<double> corrector_rhs(const env::Environment& e, const VecD& a) {
  const auto& g = e.graph;
  const int d = e.dim();
  std::vector<double> b(e.n(), 0.0);
  for (std::int64_t i = 0; i < e.n(); ++i) {
    double acc = 0.0;
    for (std::int64_t k = g.row_ptr[i]; k < g.row_ptr[i + 1]; ++k) {
      double ad = 0.0;
      for (int c = 0; c < d; ++c) ad += a[c] * g.disp[k * d + c];
      acc += g.rate[k] * ad;
    }
    b[i] = acc;
  }
  double sum = 0.0, abs_sum = 0.0;
  for (double v : b) {
    sum += v;
    abs_sum += std::abs(v);
  }
  if (abs_sum > 0 && std::abs(sum) > 1e-10 * abs_sum)
    throw NumericalError(
        "corrector_solve: right-hand side not orthogonal to constants; "
        "environment displacements are inconsistent");
  return b;
}

double corrector_energy(const env::Environment& e, const VecD& a,
                        std::span<const double> chi) {
  const auto& g = e.graph;
  const int d = e.dim();
  double acc = 0.0;
  for (std::int64_t i = 0; i < e.n(); ++i) {
    for (std::int64_t k = g.row_ptr[i]; k < g.row_ptr[i + 1]; ++k) {
      double ad = 0.0;
      for (int c = 0; c < d; ++c) ad += a[c] * g.disp[k * d + c];
      double grad = chi.empty() ? 0.0 : chi[g.col[k]] - chi[i];
      double r = ad - grad;
      acc += g.rate[k] * r * r;
    }
  }
  return acc / (2.0 * static_cast<double>(e.n()));
}

void subtract_mean(std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  for (double& v : x) v -= m;
}

// Detect a single-cycle rate graph (every vertex of degree 2). Returns the
// vertex order along the cycle, empty when not a cycle.
std::vector<std::int32_t> cycle_order(const env::Environment& e) {
  const auto& g = e.graph;
  if (e.n() < 3 || g.num_edges() != e.n()) return {};
  for (std::int64_t i = 0; i < e.n(); ++i)
    if (g.row_ptr[i + 1] - g.row_ptr[i] != 2) return {};
  std::vector<std::int32_t> order;
  order.reserve(e.n());
  std::int32_t prev = -1, cur = 0;
  for (std::int64_t steps = 0; steps < e.n(); ++steps) {
    order.push_back(cur);
    std::int32_t nxt = -1;
    for (std::int64_t k = g.row_ptr[cur]; k < g.row_ptr[cur + 1]; ++k) {
      if (g.col[k] != prev) {
        nxt = g.col[k];
        break;
      }
    }
    if (nxt < 0) return {};
    prev = cur;
    cur = nxt;
  }
  if (cur != 0) return {};  // did not close up
  return order;
}

// Grounded tridiagonal solve of the cycle Laplacian system L chi = b with
// chi[order[0]] = 0; unknowns are the path order[1..n-1].
std::vector<double> solve_cycle(const env::Environment& e,
                                std::span<const double> b,
                                const std::vector<std::int32_t>& order) {
  const auto& g = e.graph;
  const std::int64_t n = e.n();
  // Conductance of the edge between order[k] and order[k+1 mod n].
  std::vector<double> w(n, 0.0);
  auto edge_rate = [&](std::int32_t u, std::int32_t v) {
    for (std::int64_t k = g.row_ptr[u]; k < g.row_ptr[u + 1]; ++k)
      if (g.col[k] == v) return g.rate[k];
    throw NumericalError("solve_cycle: missing cycle edge");
  };
  for (std::int64_t k = 0; k < n; ++k)
    w[k] = edge_rate(order[k], order[(k + 1) % n]);

  // Unknowns x_k = chi(order[k]), k = 1..n-1; x_0 = 0. The reduced system is
  // tridiagonal: row k: -w[k-1] x_{k-1} + (w[k-1]+w[k]) x_k - w[k] x_{k+1}.
  std::int64_t m = n - 1;
  std::vector<double> diag(m), lower(m, 0.0), upper(m, 0.0), rhs(m);
  for (std::int64_t k = 1; k <= m; ++k) {
    diag[k - 1] = w[k - 1] + w[k % n];
    if (k > 1) lower[k - 1] = -w[k - 1];
    if (k < m) upper[k - 1] = -w[k];
    // Sign: L chi (i) = sum_j c_ij (chi_j - chi_i) = b_i  ->  A chi = -b with
    // A the positive Laplacian; keep A x = -b.
    rhs[k - 1] = -b[order[k]];
  }
  // Thomas algorithm.
  for (std::int64_t k = 1; k < m; ++k) {
    double f = lower[k] / diag[k - 1];
    diag[k] -= f * upper[k - 1];
    rhs[k] -= f * rhs[k - 1];
  }
  std::vector<double> x(m);
  x[m - 1] = rhs[m - 1] / diag[m - 1];
  for (std::int64_t k = m - 2; k >= 0; --k)
    x[k] = (rhs[k] - upper[k] * x[k + 1]) / diag[k];

  std::vector<double> chi(n, 0.0);
  for (std::int64_t k = 1; k <= m; ++k) chi[order[k]] = x[k - 1];
  return chi;
}

}  // namespace

Corrector corrector_solve(const env::Environment& e, const VecD& a,
                          const CorrectorOptions& opts) {
  const auto& g = e.graph;
  const std::int64_t n = e.n();
  std::vector<double> b = corrector_rhs(e, a);

  Corrector out;
  out.direction = a;
  out.zero_trial_energy = corrector_energy(e, a, {});

  std::vector<std::int32_t> cyc;
  if (!opts.force_cg) cyc = cycle_order(e);
  if (!cyc.empty()) {
    out.chi = solve_cycle(e, b, cyc);
    subtract_mean(out.chi);
    // Residual check of the direct solve.
    std::vector<double> r(n);
    kernels::laplacian_apply(g.row_ptr, g.col, g.rate, 1.0, out.chi, r);
    double rn = 0.0, bn = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      rn += (r[i] - b[i]) * (r[i] - b[i]);
      bn += b[i] * b[i];
    }
    out.cg_residual = bn > 0 ? std::sqrt(rn / bn) : 0.0;
    out.cg_iterations = 0;
  } else {
    // Mean-zero preconditioned CG on the singular-but-consistent system
    // A chi = -b, A = -L positive semidefinite,
    // L chi (i) = sum_j c_ij (chi_j - chi_i) = b_i.
    std::vector<double> chi(n, 0.0), r(n), z(n), p(n), Ap(n);
    std::vector<double> jacobi(n);
    for (std::int64_t i = 0; i < n; ++i) jacobi[i] = 1.0 / g.exit_rate[i];
    for (std::int64_t i = 0; i < n; ++i) r[i] = -b[i];
    subtract_mean(r);
    double bnorm = std::sqrt(kernels::dot(r, r));
    if (bnorm == 0.0) {
      out.chi.assign(n, 0.0);
      out.energy = out.zero_trial_energy;
      return out;
    }
    auto apply_A = [&](std::span<const double> x, std::span<double> y) {
      kernels::laplacian_apply(g.row_ptr, g.col, g.rate, -1.0, x, y);
    };
    for (std::int64_t i = 0; i < n; ++i) z[i] = jacobi[i] * r[i];
    subtract_mean(z);
    p = z;
    double rz = kernels::dot(r, z);
    const std::int64_t cap = std::max<std::int64_t>(
        200, 40 * static_cast<std::int64_t>(std::ceil(std::sqrt(double(n)))));
    double relres = 1.0;
    std::int64_t it = 0;
    for (; it < cap; ++it) {
      relres = std::sqrt(kernels::dot(r, r)) / bnorm;
      if (relres <= opts.tol) break;
      apply_A(p, Ap);
      double pAp = kernels::dot(p, Ap);
      if (!(pAp > 0)) break;
      double alpha = rz / pAp;
      kernels::axpy(alpha, p, chi);
      kernels::axpy(-alpha, Ap, r);
      if (it % 50 == 49) subtract_mean(r);
      for (std::int64_t i = 0; i < n; ++i) z[i] = jacobi[i] * r[i];
      subtract_mean(z);
      double rz_new = kernels::dot(r, z);
      kernels::xpay(z, rz_new / rz, p);
      rz = rz_new;
    }
    if (relres > opts.tol)
      throw NumericalError("corrector_solve: CG stalled at residual " +
                           std::to_string(relres) + " after " +
                           std::to_string(it) + " iterations");
    subtract_mean(chi);
    out.chi = std::move(chi);
    out.cg_iterations = static_cast<int>(it);
    out.cg_residual = relres;
  }
  out.energy = corrector_energy(e, a, out.chi);
  if (out.energy > out.zero_trial_energy * (1.0 + 1e-12) + 1e-15)
    throw NumericalError("corrector_solve: energy above the zero-trial bound");
  return out;
}

EffectiveMatrix effective_matrix(const env::Environment& e,
                                 const CorrectorOptions& opts) {
  const int d = e.dim();
  EffectiveMatrix out;
  out.D = SymMat::zero(d);
  out.box_side = e.cells > 0 ? e.cells : e.box_side;

  std::vector<double> diag(d);
  for (int k = 0; k < d; ++k) {
    VecD a = zero_vec();
    a[k] = 1.0;
    Corrector c = corrector_solve(e, a, opts);
    diag[k] = c.energy;
    out.D.at(k, k) = c.energy;
    out.direction_energies.push_back(c.energy);
    out.residuals.push_back(c.cg_residual);
    out.iterations.push_back(c.cg_iterations);
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      VecD a = zero_vec();
      a[i] = a[j] = 1.0 / std::sqrt(2.0);
      Corrector c = corrector_solve(e, a, opts);
      // a.Da = (D_ii + D_jj + 2 D_ij) / 2.
      double off = c.energy - 0.5 * (diag[i] + diag[j]);
      out.D.at(i, j) = off;
      out.D.at(j, i) = off;
      out.direction_energies.push_back(c.energy);
      out.residuals.push_back(c.cg_residual);
      out.iterations.push_back(c.cg_iterations);
    }
  }

  out.eigen = sym_eigen(out.D);
  double lead = std::max(out.eigen.values[0], 0.0);
  out.rank_threshold = 1e-8 * lead;
  if (out.eigen.values[d - 1] < -1e-10 * std::max(lead, 1e-300))
    throw NumericalError("effective_matrix: negative eigenvalue beyond slack");
  out.positive_rank = 0;
  for (int k = 0; k < d; ++k) {
    if (out.eigen.values[k] <= out.rank_threshold) out.eigen.values[k] = 0.0;
    if (out.eigen.values[k] > 0.0) ++out.positive_rank;
  }
  return out;
}

MsdEstimate msd_diffusivity(const env::Environment& e, double t,
                            std::int64_t replicas, std::uint64_t seed,
                            bool strict) {
  if (replicas < 1000)
    throw ValidationError("msd_diffusivity: replicas >= 1e3 required");
  double mean_exit = 0.0;
  for (std::int64_t i = 0; i < e.n(); ++i) mean_exit += e.exit_rate(i);
  mean_exit /= static_cast<double>(e.n());
  if (mean_exit * t < 100.0)
    throw ValidationError(
        "msd_diffusivity: expected jump count below 100; increase t");
  const int d = e.dim();
  const auto& g = e.graph;

  std::vector<VecD> disp(replicas);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t r = 0; r < replicas; ++r) {
    rng::Stream rs(rng::seed_derive(seed, "msd.replica", r));
    std::int64_t x = static_cast<std::int64_t>(rs.below(e.n()));
    double tcur = 0.0;
    VecD acc = zero_vec();
    while (true) {
      tcur += rs.exponential(g.exit_rate[x]);
      if (tcur > t) break;
      double u = rs.u01() * g.exit_rate[x];
      double run = 0.0;
      std::int64_t pick = g.row_ptr[x];
      for (std::int64_t k = g.row_ptr[x]; k < g.row_ptr[x + 1]; ++k) {
        run += g.rate[k];
        if (u < run) {
          pick = k;
          break;
        }
      }
      for (int c = 0; c < d; ++c) acc[c] += g.disp[pick * d + c];
      x = g.col[pick];
    }
    disp[r] = acc;
  }

  VecD mean = zero_vec();
  for (const auto& v : disp)
    for (int c = 0; c < d; ++c) mean[c] += v[c];
  for (int c = 0; c < d; ++c) mean[c] /= static_cast<double>(replicas);

  MsdEstimate out;
  out.estimate = SymMat::zero(d);
  out.std_error = SymMat::zero(d);
  out.t = t;
  out.replicas = replicas;
  out.expected_jumps = mean_exit * t;
  for (int a = 0; a < d; ++a) {
    for (int bx = a; bx < d; ++bx) {
      double m2 = 0.0, m4 = 0.0;
      for (const auto& v : disp) {
        double prod = (v[a] - mean[a]) * (v[bx] - mean[bx]);
        m2 += prod;
        m4 += prod * prod;
      }
      m2 /= static_cast<double>(replicas);
      m4 /= static_cast<double>(replicas);
      double est = m2 / (2.0 * t);
      double se = std::sqrt(std::max(m4 - m2 * m2, 0.0) /
                            static_cast<double>(replicas)) /
                  (2.0 * t);
      out.estimate.at(a, bx) = out.estimate.at(bx, a) = est;
      out.std_error.at(a, bx) = out.std_error.at(bx, a) = se;
    }
  }
  double trace = 0.0;
  for (int c = 0; c < d; ++c) trace += out.estimate.at(c, c);
  double spread = std::sqrt(std::max(2.0 * trace * t, 0.0));
  double quarter = 0.5 * e.torus.half_min_extent();
  if (spread > quarter) {
    out.wrap_warning = true;
    if (strict)
      throw NumericalError(
          "msd_diffusivity: diffusive spread exceeds L/4; torus wrap would "
          "bias the estimate");
  }
  return out;
}

namespace {

int positive_rank_of(const SymEigen& eigs, int dim) {
  double lead = std::max(eigs.values[0], 0.0);
  int d_star = 0;
  for (int k = 0; k < dim; ++k)
    if (eigs.values[k] > 1e-8 * lead) ++d_star;
  return d_star;
}

}  // namespace

double continuum_resolvent_value(const SymMat& D, double lambda,
                                 const hydro::TestFunction& phi, const VecD& x,
                                 double tol) {
  SymEigen eigs = sym_eigen(D);
  int d_star = positive_rank_of(eigs, D.dim);
  // R = int_0^inf e^{-lambda s} P_s phi ds = int_0^U 2u e^{-lambda u^2}
  // P_{u^2} phi du with U^2 = 40 / lambda (tail below e^{-40}).
  double U = std::sqrt(40.0 / lambda);
  auto integrand = [&](double u) {
    return 2.0 * u * std::exp(-lambda * u * u) *
           hydro::gaussian_semigroup_tf(D, eigs, d_star, phi, x, u * u,
                                        0.05 * tol);
  };
  const int panels = 16;
  double acc = 0.0;
  for (int p = 0; p < panels; ++p)
    acc += quad::adaptive_simpson(integrand, U * p / panels,
                                  U * (p + 1) / panels, tol / panels, 30);
  return acc;
}

ConvergenceGaps resolvent_convergence_check(
    std::span<const env::Environment* const> family,
    std::span<const double> eps, const hydro::TestFunction& phi, double lambda,
    const SymMat& D, double solver_tol) {
  if (family.size() != eps.size() || family.empty())
    throw ValidationError("resolvent_convergence_check: family/eps mismatch");
  ConvergenceGaps out;
  for (std::size_t kcase = 0; kcase < family.size(); ++kcase) {
    const env::Environment& e = *family[kcase];
    double ep = eps[kcase];
    double half = e.torus.half_min_extent();
    if (!(ep * half >= phi.support_radius()))
      throw ValidationError(
          "resolvent_convergence_check: support violation at eps = " +
          std::to_string(ep));
    const int d = e.dim();
    std::vector<double> f(e.n());
    std::vector<VecD> xs(e.n());
    for (std::int64_t i = 0; i < e.n(); ++i) {
      VecD x = e.centered_point(i);
      for (int c = 0; c < d; ++c) x[c] *= ep;
      xs[i] = x;
      f[i] = phi.value(x);
    }
    std::vector<double> u = walk::resolvent_solve(e, ep, lambda, f, solver_tol);
    double gap = 0.0;
#pragma omp parallel for schedule(dynamic, 32) reduction(+ : gap)
    for (std::int64_t i = 0; i < e.n(); ++i)
      gap += std::abs(u[i] -
                      continuum_resolvent_value(D, lambda, phi, xs[i], 1e-8));
    out.eps.push_back(ep);
    out.gap.push_back(std::pow(ep, d) * gap);
  }
  out.strictly_decreasing = true;
  for (std::size_t k = 1; k < out.gap.size(); ++k)
    out.strictly_decreasing =
        out.strictly_decreasing && out.gap[k] < out.gap[k - 1];
  out.last_over_first =
      out.gap.front() > 0 ? out.gap.back() / out.gap.front() : 0.0;
  return out;
}

ConvergenceGaps semigroup_convergence_check(
    std::span<const env::Environment* const> family,
    std::span<const double> eps, const hydro::TestFunction& phi, double t,
    const SymMat& D, double kernel_tol) {
  if (family.size() != eps.size() || family.empty())
    throw ValidationError("semigroup_convergence_check: family/eps mismatch");
  SymEigen eigs = sym_eigen(D);
  int d_star = positive_rank_of(eigs, D.dim);
  ConvergenceGaps out;
  for (std::size_t kcase = 0; kcase < family.size(); ++kcase) {
    const env::Environment& e = *family[kcase];
    double ep = eps[kcase];
    double half = e.torus.half_min_extent();
    if (!(ep * half >= phi.support_radius()))
      throw ValidationError(
          "semigroup_convergence_check: support violation at eps = " +
          std::to_string(ep));
    const int d = e.dim();
    std::vector<double> f(e.n());
    std::vector<VecD> xs(e.n());
    for (std::int64_t i = 0; i < e.n(); ++i) {
      VecD x = e.centered_point(i);
      for (int c = 0; c < d; ++c) x[c] *= ep;
      xs[i] = x;
      f[i] = phi.value(x);
    }
    std::vector<double> u =
        t > 0 ? walk::semigroup_apply(e, ep, t, f, kernel_tol) : f;
    double gap = 0.0;
#pragma omp parallel for schedule(dynamic, 32) reduction(+ : gap)
    for (std::int64_t i = 0; i < e.n(); ++i)
      gap += std::abs(u[i] - hydro::gaussian_semigroup_tf(D, eigs, d_star, phi,
                                                          xs[i], t, 1e-9));
    out.eps.push_back(ep);
    out.gap.push_back(std::pow(ep, d) * gap);
  }
  out.strictly_decreasing = true;
  for (std::size_t k = 1; k < out.gap.size(); ++k)
    out.strictly_decreasing =
        out.strictly_decreasing && out.gap[k] < out.gap[k - 1];
  out.last_over_first =
      out.gap.front() > 0 ? out.gap.back() / out.gap.front() : 0.0;
  return out;
}

std::vector<TailMassRow> tail_mass_check(const env::Environment& e,
                                         std::span<const double> eps_list,
                                         std::span<const double> ell_list) {
  const int d = e.dim();
  std::vector<TailMassRow> rows;
  for (double ep : eps_list) {
    TailMassRow row;
    row.eps = ep;
    row.ell.assign(ell_list.begin(), ell_list.end());
    row.mass.assign(ell_list.size(), 0.0);
    for (std::int64_t i = 0; i < e.n(); ++i) {
      VecD x = e.centered_point(i);
      double r = 0.0;
      for (int c = 0; c < d; ++c) r += ep * x[c] * ep * x[c];
      r = std::sqrt(r);
      double psi = 1.0 / (1.0 + std::pow(r, d + 1));
      for (std::size_t q = 0; q < ell_list.size(); ++q)
        if (r >= ell_list[q]) row.mass[q] += psi;
    }
    for (double& m : row.mass) m *= std::pow(ep, d);
    rows.push_back(std::move(row));
  }
  return rows;
}

DTable effective_matrix_table(std::span<const env::Environment* const> family,
                              bool richardson, const CorrectorOptions& opts) {
  DTable table;
  for (const env::Environment* e : family) {
    EffectiveMatrix em = effective_matrix(*e, opts);
    table.rows.push_back({em.box_side, em.D});
  }
  if (richardson && table.rows.size() >= 2) {
    // Heuristic first-order Richardson step on the last two rows, assuming
    // D_L = D + C / L.
    const auto& a = table.rows[table.rows.size() - 2];
    const auto& b = table.rows.back();
    double la = a.box_cells, lb = b.box_cells;
    table.richardson = SymMat::zero(b.D.dim);
    for (int i = 0; i < b.D.dim; ++i)
      for (int j = 0; j < b.D.dim; ++j)
        table.richardson.at(i, j) =
            (lb * b.D.at(i, j) - la * a.D.at(i, j)) / (lb - la);
    table.extrapolated = true;
  }
  return table;
}

}  // namespace sep::homog
