#include "sepsim/random_walk.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sepsim/errors.hpp"
#include "sepsim/kernels.hpp"
#include "sepsim/rng.hpp"

namespace sep::walk {

Generator::Generator(const env::Environment& e, double eps)
    : env_(&e), eps_(eps), scale_(1.0 / (eps * eps)) {
  if (!(eps > 0)) throw ValidationError("Generator: eps > 0 required");
  max_exit_ = e.max_exit_rate();
}

void Generator::apply(std::span<const double> u, std::span<double> out) const {
  const auto& g = env_->graph;
  kernels::laplacian_apply(g.row_ptr, g.col, g.rate, scale_, u, out);
}

double Generator::l2_inner(std::span<const double> u,
                           std::span<const double> v) const {
  return std::pow(eps_, env_->dim()) * kernels::dot(u, v);
}

double Generator::l2_norm(std::span<const double> u) const {
  return std::sqrt(l2_inner(u, u));
}

WalkPath sample_walk_path(const env::Environment& e, std::int64_t x0,
                          double t_end, std::uint64_t seed) {
  if (x0 < 0 || x0 >= e.n())
    throw ValidationError("sample_walk_path: start index out of range");
  if (t_end < 0) throw ValidationError("sample_walk_path: t_end >= 0");
  const auto& g = e.graph;
  rng::Stream rs(seed);
  WalkPath path;
  path.start = x0;
  path.t_end = t_end;
  double t = 0.0;
  std::int64_t x = x0;
  while (true) {
    double c = g.exit_rate[x];
    t += rs.exponential(c);
    if (t > t_end) break;
    double u = rs.u01() * c;
    double acc = 0.0;
    std::int64_t chosen = g.col[g.row_ptr[x]];
    for (std::int64_t k = g.row_ptr[x]; k < g.row_ptr[x + 1]; ++k) {
      acc += g.rate[k];
      if (u < acc) {
        chosen = g.col[k];
        break;
      }
    }
    x = chosen;
    path.times.push_back(t);
    path.points.push_back(static_cast<std::int32_t>(x));
  }
  return path;
}

namespace {

constexpr double kSplitThreshold = 600.0;
constexpr int kMaxSplits = 64;
constexpr int kSeriesCap = 20000;

// Smallest K with P(Poisson(mu) > K) < tol, plus the weight table.
int poisson_weights(double mu, double tol, std::vector<double>& w) {
  w.clear();
  double p = std::exp(-mu), cum = p;
  w.push_back(p);
  int k = 0;
  while (1.0 - cum >= tol && k < kSeriesCap) {
    ++k;
    p *= mu / static_cast<double>(k);
    w.push_back(p);
    cum += p;
  }
  if (1.0 - cum >= tol)
    throw NumericalError("uniformization: series cap exceeded");
  return k;
}

std::vector<double> uniformize(const env::Environment& e, double eps, double t,
                               std::span<const double> f, double tol,
                               bool renormalize_row, UniformizationReport* rep) {
  const auto& g = e.graph;
  const std::int64_t n = e.n();
  Generator gen(e, eps);
  double Lambda = gen.max_rate();
  if (Lambda <= 0) throw NumericalError("uniformization: zero max rate");
  double mu_total = Lambda * t;
  int splits = std::max(1, static_cast<int>(std::ceil(mu_total / kSplitThreshold)));
  if (splits > kMaxSplits)
    throw NumericalError(
        "uniformization: horizon too large; would need " +
        std::to_string(splits) + " time splits (cap " +
        std::to_string(kMaxSplits) + "); reduce t or raise tol");
  double dt = t / splits;
  double mu = Lambda * dt;
  double split_tol = tol / splits;

  // Substochastic transition P = I + Q / Lambda in CSR form.
  std::vector<double> p(g.rate.size());
  double inv = 1.0 / Lambda;
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = g.rate[k] * gen.scale() * inv;
  std::vector<double> diag(n);
  for (std::int64_t i = 0; i < n; ++i)
    diag[i] = 1.0 - g.exit_rate[i] * gen.scale() * inv;

  std::vector<double> cur(f.begin(), f.end());
  std::vector<double> term(n), nextterm(n), acc(n);
  std::vector<double> w;
  int max_terms = 0;
  for (int s = 0; s < splits; ++s) {
    int K = poisson_weights(mu, split_tol, w);
    max_terms = std::max(max_terms, K);
    std::copy(cur.begin(), cur.end(), term.begin());
    std::fill(acc.begin(), acc.end(), 0.0);
    double wsum = 0.0;
    for (int k = 0; k <= K; ++k) {
      kernels::axpy(w[k], term, acc);
      wsum += w[k];
      if (k < K) {
        kernels::stochastic_apply(g.row_ptr, g.col, p, diag, term, nextterm);
        term.swap(nextterm);
      }
    }
    // Compensate the truncated tail; keeps constants exactly invariant.
    double corr = 1.0 / wsum;
    for (double& v : acc) v *= corr;
    cur.swap(acc);
  }
  if (renormalize_row) {
    double clamped = 0.0, sum = 0.0;
    for (double& v : cur) {
      if (v < 0) {
        clamped -= v;
        v = 0.0;
      }
      sum += v;
    }
    if (sum > 0)
      for (double& v : cur) v /= sum;
    if (rep) rep->clamped_mass = clamped;
  }
  if (rep) {
    rep->splits = splits;
    rep->series_terms = max_terms;
  }
  return cur;
}

}  // namespace

std::vector<double> heat_kernel_row(const env::Environment& e, double eps,
                                    std::int64_t x, double t, double tol,
                                    UniformizationReport* report) {
  if (!(tol > 0 && tol <= 1e-3))
    throw ValidationError("heat_kernel_row: tol in (0, 1e-3] required");
  if (x < 0 || x >= e.n())
    throw ValidationError("heat_kernel_row: index out of range");
  if (t < 0) throw ValidationError("heat_kernel_row: t >= 0");
  std::vector<double> f(e.n(), 0.0);
  f[x] = 1.0;
  if (t == 0) return f;
  return uniformize(e, eps, t, f, tol, /*renormalize_row=*/true, report);
}

std::vector<double> semigroup_apply(const env::Environment& e, double eps,
                                    double t, std::span<const double> f,
                                    double tol, UniformizationReport* report) {
  if (!(tol > 0 && tol <= 1e-3))
    throw ValidationError("semigroup_apply: tol in (0, 1e-3] required");
  if (static_cast<std::int64_t>(f.size()) != e.n())
    throw ValidationError("semigroup_apply: size mismatch");
  if (t < 0) throw ValidationError("semigroup_apply: t >= 0");
  if (t == 0) return std::vector<double>(f.begin(), f.end());
  return uniformize(e, eps, t, f, tol, /*renormalize_row=*/false, report);
}

std::vector<double> resolvent_solve(const env::Environment& e, double eps,
                                    double lambda, std::span<const double> f,
                                    double tol, SolveReport* report) {
  if (!(lambda > 0)) throw ValidationError("resolvent_solve: lambda > 0");
  if (static_cast<std::int64_t>(f.size()) != e.n())
    throw ValidationError("resolvent_solve: size mismatch");
  const auto& g = e.graph;
  const std::int64_t n = e.n();
  Generator gen(e, eps);

  // A u = lambda u - L^eps u, SPD for lambda > 0.
  std::vector<double> tmp(n);
  auto apply_A = [&](std::span<const double> u, std::span<double> out) {
    gen.apply(u, tmp);
    for (std::int64_t i = 0; i < n; ++i) out[i] = lambda * u[i] - tmp[i];
  };
  std::vector<double> jacobi(n);
  for (std::int64_t i = 0; i < n; ++i)
    jacobi[i] = 1.0 / (lambda + g.exit_rate[i] * gen.scale());

  std::vector<double> u(n, 0.0), r(f.begin(), f.end()), z(n), pdir(n), Ap(n);
  double fnorm = std::sqrt(kernels::dot(r, r));
  SolveReport rep;
  if (fnorm == 0.0) {
    if (report) *report = rep;
    return u;
  }
  for (std::int64_t i = 0; i < n; ++i) z[i] = jacobi[i] * r[i];
  pdir = z;
  double rz = kernels::dot(r, z);
  // Iteration cap from the Chebyshev bound: kappa <= (lambda + 2 Lambda) /
  // lambda by Gershgorin, iterations ~ sqrt(kappa) log(2/tol) / 2. The
  // naive 20 sqrt(N) is far too small for one-dimensional boxes under
  // diffusive scaling, where kappa grows like eps^{-2}.
  double kappa_bound = (lambda + 2.0 * gen.max_rate()) / lambda;
  std::int64_t cheb = static_cast<std::int64_t>(
      std::ceil(std::sqrt(kappa_bound) * (std::log(2.0 / tol) + 2.0)));
  const std::int64_t cap =
      std::max<std::int64_t>(
          20 * static_cast<std::int64_t>(std::ceil(std::sqrt(double(n)))),
          cheb) +
      20;
  double relres = 1.0;
  std::int64_t it = 0;
  for (; it < cap; ++it) {
    relres = std::sqrt(kernels::dot(r, r)) / fnorm;
    rep.residual_history.push_back(relres);
    if (relres <= tol) break;
    apply_A(pdir, Ap);
    double alpha = rz / kernels::dot(pdir, Ap);
    kernels::axpy(alpha, pdir, u);
    kernels::axpy(-alpha, Ap, r);
    for (std::int64_t i = 0; i < n; ++i) z[i] = jacobi[i] * r[i];
    double rz_new = kernels::dot(r, z);
    double beta = rz_new / rz;
    rz = rz_new;
    kernels::xpay(z, beta, pdir);
  }
  rep.iterations = static_cast<int>(it);
  rep.relative_residual = relres;
  if (relres > tol) {
    if (report) *report = rep;
    std::ostringstream msg;
    msg << "resolvent_solve: CG did not reach tol " << tol << " within "
        << cap << " iterations (residual " << relres << ")";
    throw NumericalError(msg.str());
  }

  // Maximum principle and L^2 resolvent bound.
  double fmax = 0.0, umax = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    fmax = std::max(fmax, std::abs(f[i]));
    umax = std::max(umax, std::abs(u[i]));
  }
  double slack = 1.0 + 1e-8 + 10.0 * tol;
  if (umax > fmax / lambda * slack)
    throw NumericalError("resolvent_solve: maximum principle violated");
  if (gen.l2_norm(u) * lambda > gen.l2_norm({f.data(), f.size()}) * slack)
    throw NumericalError("resolvent_solve: L2 resolvent bound violated");
  if (report) *report = rep;
  return u;
}

double dirichlet_form(const env::Environment& e, double eps,
                      std::span<const double> u, std::span<const double> v) {
  const auto& g = e.graph;
  double s = 0.0;
  for (std::int64_t k = 0; k < g.num_edges(); ++k) {
    std::int32_t a = g.e_i[k], b = g.e_j[k];
    s += g.e_rate[k] * (u[b] - u[a]) * (v[b] - v[a]);
  }
  // The unordered-edge sum is half the ordered double sum.
  return std::pow(eps, e.dim() - 2) * s;
}

}  // namespace sep::walk
