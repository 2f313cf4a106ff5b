#include "sepsim/hydrodynamics.hpp"

#include <algorithm>
#include <cmath>

#include "sepsim/errors.hpp"
#include "sepsim/quadrature.hpp"
#include "sepsim/random_walk.hpp"
#include "sepsim/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sep::hydro {

namespace {
constexpr double kRankThresholdFactor = 1e-8;
}

MacroProfile::MacroProfile(int dim, std::string kind, const SymMat& D)
    : dim_(dim), kind_(std::move(kind)), D_(D) {
  if (D.dim != dim) throw ValidationError("MacroProfile: D dimension mismatch");
  eigs_ = sym_eigen(D);
  double lead = std::max(eigs_.values[0], 0.0);
  rank_threshold_ = kRankThresholdFactor * lead;
  d_star_ = 0;
  for (int k = 0; k < dim; ++k)
    if (eigs_.values[k] > rank_threshold_) ++d_star_;
}

MacroProfile MacroProfile::constant(int dim, double c, const SymMat& D) {
  if (!(c >= 0.0 && c <= 1.0))
    throw ValidationError("MacroProfile: values must lie in [0,1]");
  MacroProfile p(dim, "constant", D);
  p.lo_ = p.hi_ = c;
  p.eval_ = [c](const VecD&) { return c; };
  return p;
}

MacroProfile MacroProfile::step(int dim, const VecD& normal, double threshold,
                                double below, double above, const SymMat& D) {
  for (double v : {below, above})
    if (!(v >= 0.0 && v <= 1.0))
      throw ValidationError("MacroProfile: values must lie in [0,1]");
  MacroProfile p(dim, "step", D);
  double nn = std::sqrt(norm2(normal, dim));
  if (!(nn > 0)) throw ValidationError("MacroProfile: zero step normal");
  p.normal_ = normal;
  for (int k = 0; k < dim; ++k) p.normal_[k] /= nn;
  p.threshold_ = threshold / nn;
  p.below_ = below;
  p.above_ = above;
  p.lo_ = std::min(below, above);
  p.hi_ = std::max(below, above);
  p.closed_form_step_ = true;
  VecD n = p.normal_;
  double th = p.threshold_;
  int d = dim;
  p.eval_ = [n, th, below, above, d](const VecD& x) {
    return dot(n, x, d) < th ? below : above;
  };
  return p;
}

MacroProfile MacroProfile::smooth_bump(int dim, double radius, double lo,
                                       double hi, const SymMat& D) {
  for (double v : {lo, hi})
    if (!(v >= 0.0 && v <= 1.0))
      throw ValidationError("MacroProfile: values must lie in [0,1]");
  MacroProfile p(dim, "smooth_bump", D);
  p.lo_ = std::min(lo, hi);
  p.hi_ = std::max(lo, hi);
  int d = dim;
  p.eval_ = [radius, lo, hi, d](const VecD& x) {
    double rho = norm2(x, d) / (radius * radius);
    if (rho >= 1.0) return lo;
    return lo + (hi - lo) * std::exp(1.0 - 1.0 / (1.0 - rho));
  };
  return p;
}

MacroProfile MacroProfile::table(int dim, int axis, std::vector<double> xs,
                                 std::vector<double> vals, const SymMat& D) {
  if (xs.size() != vals.size() || xs.size() < 2)
    throw ValidationError("MacroProfile: table needs >= 2 samples");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1]))
      throw ValidationError("MacroProfile: table abscissae must increase");
  double lo = 1.0, hi = 0.0;
  for (double v : vals) {
    if (!(v >= 0.0 && v <= 1.0))
      throw ValidationError("MacroProfile: values must lie in [0,1]");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  MacroProfile p(dim, "table", D);
  p.lo_ = lo;
  p.hi_ = hi;
  auto xs_s = std::make_shared<std::vector<double>>(std::move(xs));
  auto vs_s = std::make_shared<std::vector<double>>(std::move(vals));
  p.eval_ = [xs_s, vs_s, axis](const VecD& x) {
    const auto& X = *xs_s;
    const auto& V = *vs_s;
    double u = x[axis];
    if (u <= X.front()) return V.front();
    if (u >= X.back()) return V.back();
    auto it = std::upper_bound(X.begin(), X.end(), u);
    std::size_t k = static_cast<std::size_t>(it - X.begin());
    double w = (u - X[k - 1]) / (X[k] - X[k - 1]);
    return (1.0 - w) * V[k - 1] + w * V[k];
  };
  return p;
}

MacroProfile MacroProfile::custom(int dim, std::function<double(const VecD&)> f,
                                  double lo, double hi, const SymMat& D) {
  MacroProfile p(dim, "custom", D);
  p.lo_ = lo;
  p.hi_ = hi;
  p.eval_ = std::move(f);
  return p;
}

double MacroProfile::rho0(const VecD& x) const { return eval_(x); }

double gaussian_semigroup(const SymMat& D, const SymEigen& eigs, int d_star,
                          const std::function<double(const VecD&)>& f,
                          const VecD& x, double t, double tol) {
  (void)D;
  if (t <= 0 || d_star == 0) return f(x);
  // Integrate along the positive eigendirections only.
  std::array<double, kMaxDim> sigma{};
  for (int k = 0; k < d_star; ++k)
    sigma[k] = std::sqrt(2.0 * eigs.values[k] * t);

  if (d_star == 1) {
    // Robust one-dimensional path (handles discontinuous profiles). The
    // window is paneled at width sigma/2 before the adaptive pass so the
    // seed evaluations cannot miss a feature narrower than the kernel.
    const VecD dir = eigs.vectors[0];
    const double s = sigma[0];
    const double norm = 1.0 / (s * std::sqrt(2.0 * M_PI));
    auto integrand = [&](double z) {
      VecD y = x;
      for (int c = 0; c < eigs.dim; ++c) y[c] += z * dir[c];
      return f(y) * norm * std::exp(-z * z / (2.0 * s * s));
    };
    const int panels = 32;
    double lo = -8.0 * s, width = 16.0 * s / panels;
    double acc = 0.0;
    for (int p = 0; p < panels; ++p)
      acc += quad::adaptive_simpson(integrand, lo + p * width,
                                    lo + (p + 1) * width, tol / panels, 30);
    return acc;
  }

  // Tensor Gauss-Hermite with order doubling.
  double prev = 0.0;
  for (int order = 8; order <= 128; order *= 2) {
    quad::Rule gh = quad::gauss_hermite(order);
    double inv_pi = std::pow(M_PI, -0.5 * d_star);
    double acc = 0.0;
    // d_star-fold tensor loop.
    std::function<void(int, double, VecD)> rec = [&](int k, double w, VecD y) {
      if (k == d_star) {
        acc += w * f(y);
        return;
      }
      for (int q = 0; q < order; ++q) {
        VecD y2 = y;
        double disp = std::sqrt(2.0) * sigma[k] * gh.nodes[q];
        for (int c = 0; c < eigs.dim; ++c)
          y2[c] += disp * eigs.vectors[k][c];
        rec(k + 1, w * gh.weights[q], y2);
      }
    };
    rec(0, inv_pi, x);
    if (order > 8 && std::abs(acc - prev) <= tol) return acc;
    prev = acc;
  }
  return prev;
}

double gaussian_semigroup_tf(const SymMat& D, const SymEigen& eigs, int d_star,
                             const TestFunction& phi, const VecD& x, double t,
                             double tol) {
  if (t <= 0 || d_star == 0) return phi.value(x);
  if (d_star == 1 && eigs.dim == 1) {
    // Integrate over the support in y with the Gaussian kernel; panels at
    // min(sigma/2, window/8) so neither a sharp kernel nor a small support
    // can slip between the seed points.
    double sigma = std::sqrt(2.0 * eigs.values[0] * t);
    double r = phi.support_radius();
    double lo = std::max(-r, x[0] - 8.0 * sigma);
    double hi = std::min(r, x[0] + 8.0 * sigma);
    if (!(hi > lo)) return 0.0;
    double norm = 1.0 / (sigma * std::sqrt(2.0 * M_PI));
    auto integrand = [&](double y) {
      VecD yy = zero_vec();
      yy[0] = y;
      double dz = y - x[0];
      return phi.value(yy) * norm * std::exp(-dz * dz / (2.0 * sigma * sigma));
    };
    double width = std::min(0.5 * sigma, (hi - lo) / 8.0);
    int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / width)));
    double acc = 0.0;
    for (int p = 0; p < panels; ++p) {
      double a = lo + (hi - lo) * p / panels;
      double b = lo + (hi - lo) * (p + 1) / panels;
      acc += quad::adaptive_simpson(integrand, a, b, tol / panels, 30);
    }
    return acc;
  }
  return gaussian_semigroup(D, eigs, d_star,
                            [&phi](const VecD& y) { return phi.value(y); }, x,
                            t, tol);
}

double heat_solution(const MacroProfile& profile, const VecD& x, double t,
                     double tol) {
  if (t < 0) throw ValidationError("heat_solution: t >= 0 required");
  double v;
  if (t == 0 || profile.kind_ == "constant") {
    v = profile.rho0(x);
  } else if (profile.closed_form_step_) {
    // n . (x + B_t) is Gaussian with variance 2 t n.D n.
    double var = 2.0 * t * profile.D_.quad(profile.normal_);
    double mean = dot(profile.normal_, x, profile.dim_);
    if (var <= 0) {
      v = profile.rho0(x);
    } else {
      double zscore = (profile.threshold_ - mean) / std::sqrt(2.0 * var);
      double p_below = 0.5 * std::erfc(-zscore);
      v = profile.below_ * p_below + profile.above_ * (1.0 - p_below);
    }
  } else {
    v = gaussian_semigroup(profile.D_, profile.eigs_, profile.d_star_,
                           profile.eval_, x, t, tol);
  }
  // Maximum principle: clamp quadrature wiggle into the profile range.
  return std::min(std::max(v, profile.lo_), profile.hi_);
}

namespace {

void require_support_fits(const env::Environment& e, double eps,
                          const TestFunction& phi, const char* who) {
  double half = e.torus.half_min_extent();
  if (!(eps * half >= phi.support_radius()))
    throw ValidationError(std::string(who) +
                          ": support violation, eps * L/2 = " +
                          std::to_string(eps * half) + " < r_supp = " +
                          std::to_string(phi.support_radius()));
}

}  // namespace

double empirical_eval(const env::Environment& e, const excl::ParticleConfig& eta,
                      double eps, const TestFunction& phi) {
  if (eta.size() != e.n())
    throw ValidationError("empirical_eval: configuration size mismatch");
  require_support_fits(e, eps, phi, "empirical_eval");
  const int d = e.dim();
  double acc = 0.0;
  for (std::int64_t i = 0; i < e.n(); ++i) {
    if (!eta.occ[i]) continue;
    VecD x = e.centered_point(i);
    for (int c = 0; c < d; ++c) x[c] *= eps;
    acc += phi.value(x);
  }
  return std::pow(eps, d) * acc;
}

double mu_eval(const env::Environment& e, double eps, const TestFunction& phi) {
  excl::ParticleConfig full(e.n(), 1);
  return empirical_eval(e, full, eps, phi);
}

MeasureDistance measure_distance(std::span<const double> mu_evals,
                                 std::span<const double> nu_evals) {
  if (mu_evals.size() != nu_evals.size())
    throw ValidationError("measure_distance: mismatched family prefixes");
  MeasureDistance out;
  double w = 1.0;
  for (std::size_t j = 0; j < mu_evals.size(); ++j, w *= 0.5)
    out.value += w * std::min(1.0, std::abs(mu_evals[j] - nu_evals[j]));
  out.tail = 2.0 * w;  // sum_{j >= j_max} 2^{-j}
  return out;
}

double weak_solution_residual(
    const std::function<double(const std::function<double(const VecD&)>&,
                               double)>& path_eval,
    const SymMat& D, const TestFunction& phi, std::span<const double> grid) {
  if (grid.size() < 9)
    throw ValidationError(
        "weak_solution_residual: need at least 8 grid intervals");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw ValidationError("weak_solution_residual: grid must increase");
  auto phi_fn = [&phi](const VecD& x) { return phi.value(x); };
  auto dphi_fn = [&phi, &D](const VecD& x) { return phi.diffusion_apply(D, x); };
  double head = path_eval(phi_fn, grid.back()) - path_eval(phi_fn, grid.front());
  double integral = 0.0;
  double prev = path_eval(dphi_fn, grid.front());
  for (std::size_t i = 1; i < grid.size(); ++i) {
    double cur = path_eval(dphi_fn, grid[i]);
    integral += 0.5 * (prev + cur) * (grid[i] - grid[i - 1]);
    prev = cur;
  }
  return head - integral;
}

excl::ParticleConfig init_product_bernoulli(const env::Environment& e,
                                            const MacroProfile& profile,
                                            double eps, std::uint64_t seed) {
  rng::Stream rs(seed);
  excl::ParticleConfig eta(e.n());
  const int d = e.dim();
  for (std::int64_t i = 0; i < e.n(); ++i) {
    VecD x = e.centered_point(i);
    for (int c = 0; c < d; ++c) x[c] *= eps;
    double rho = profile.rho0(x);
    if (rho >= 1.0)
      eta.occ[i] = 1;
    else if (rho <= 0.0)
      eta.occ[i] = 0;
    else
      eta.occ[i] = rs.u01() < rho ? 1 : 0;
  }
  return eta;
}

double bernoulli_variance(const env::Environment& e, const MacroProfile& profile,
                          double eps, const TestFunction& phi) {
  const int d = e.dim();
  double acc = 0.0;
  for (std::int64_t i = 0; i < e.n(); ++i) {
    VecD x = e.centered_point(i);
    for (int c = 0; c < d; ++c) x[c] *= eps;
    double rho = profile.rho0(x);
    double pv = phi.value(x);
    acc += pv * pv * rho * (1.0 - rho);
  }
  return std::pow(eps, 2 * d) * acc;
}

CorrectedGap corrected_empirical_gap(const env::Environment& e, double eps,
                                     const TestFunction& G, double lambda,
                                     const SymMat& D, double tol) {
  if (!(lambda > 0))
    throw ValidationError("corrected_empirical_gap: lambda > 0");
  require_support_fits(e, eps, G, "corrected_empirical_gap");
  const int d = e.dim();
  const std::int64_t n = e.n();
  std::vector<double> g_of_x(n), g_lambda(n);
  for (std::int64_t i = 0; i < n; ++i) {
    VecD x = e.centered_point(i);
    for (int c = 0; c < d; ++c) x[c] *= eps;
    g_of_x[i] = G.value(x);
    g_lambda[i] = lambda * g_of_x[i] - G.diffusion_apply(D, x);
  }
  walk::SolveReport rep;
  CorrectedGap out;
  out.g_eps = walk::resolvent_solve(e, eps, lambda, g_lambda, tol, &rep);
  out.cg_iterations = rep.iterations;
  out.cg_residual = rep.relative_residual;
  double gap = 0.0;
  for (std::int64_t i = 0; i < n; ++i)
    gap += std::abs(g_of_x[i] - out.g_eps[i]);
  out.l1_gap = std::pow(eps, d) * gap;
  out.pi_gap_bound = out.l1_gap;
  return out;
}

HydroReport hydro_experiment(const env::Environment& e,
                             const MacroProfile& profile,
                             std::span<const TestFunction> phis,
                             const HydroConfig& cfg) {
  if (phis.empty()) throw ValidationError("hydro_experiment: no test functions");
  if (cfg.replicas < 1) throw ValidationError("hydro_experiment: replicas >= 1");
  if (cfg.time_points < 2)
    throw ValidationError("hydro_experiment: need a time grid");
  const int d = e.dim();
  const double T = cfg.horizon;
  double lambda_max = std::max(profile.eigen().values[0], 0.0);

  HydroReport report;
  report.config = cfg;

  std::vector<double> grid(cfg.time_points);
  for (int k = 0; k < cfg.time_points; ++k)
    grid[k] = T * static_cast<double>(k) / (cfg.time_points - 1);

  // Support + diffusive-spread window check per eps.
  for (double eps : cfg.eps_grid) {
    double need = 0.0;
    for (const auto& phi : phis)
      need = std::max(need, phi.support_radius());
    need += 6.0 * std::sqrt(2.0 * lambda_max * T);
    double have = eps * e.torus.half_min_extent();
    if (!(need <= have))
      throw ValidationError(
          "hydro_experiment: support + diffusive spread exceeds the window: "
          "r_supp + 6 sqrt(2 lambda_max T) = " +
          std::to_string(need) + " > eps L / 2 = " + std::to_string(have));
  }

  report.quadrature_error.assign(phis.size(), cfg.quad_tol);

  for (double eps : cfg.eps_grid) {
    // Reference curves int phi rho(., t) per phi and grid time.
    std::vector<std::vector<double>> ref(phis.size(),
                                         std::vector<double>(grid.size()));
    for (std::size_t pi = 0; pi < phis.size(); ++pi) {
      const TestFunction& phi = phis[pi];
      double r = phi.support_radius();
      for (std::size_t k = 0; k < grid.size(); ++k) {
        double t = grid[k];
        if (d == 1) {
          ref[pi][k] = quad::adaptive_simpson(
              [&](double x) {
                VecD xx = zero_vec();
                xx[0] = x;
                return phi.value(xx) *
                       heat_solution(profile, xx, t, cfg.quad_tol);
              },
              -r, r, cfg.quad_tol);
        } else {
          // Tensor adaptive integration over the support box.
          std::function<double(int, VecD&)> rec = [&](int k2, VecD& xx) -> double {
            if (k2 == d)
              return phi.value(xx) * heat_solution(profile, xx, t, cfg.quad_tol);
            return quad::adaptive_simpson(
                [&](double v) {
                  xx[k2] = v;
                  return rec(k2 + 1, xx);
                },
                -r, r, cfg.quad_tol / std::pow(2.0 * r, d - 1 - k2), 20);
          };
          VecD xx = zero_vec();
          ref[pi][k] = rec(0, xx);
        }
      }
    }

    // Per-point scaled test function values (shared across replicas).
    std::vector<std::vector<double>> phi_vals(phis.size(),
                                              std::vector<double>(e.n()));
    for (std::size_t pi = 0; pi < phis.size(); ++pi)
      for (std::int64_t i = 0; i < e.n(); ++i) {
        VecD x = e.centered_point(i);
        for (int c = 0; c < d; ++c) x[c] *= eps;
        phi_vals[pi][i] = phis[pi].value(x);
      }

    const double rate_scale = 1.0 / (eps * eps);
    const double t0 = std::min(excl::default_slab_width(e, rate_scale), T);
    const double epsd = std::pow(eps, d);

    std::vector<std::vector<double>> sup(phis.size(),
                                         std::vector<double>(cfg.replicas, 0.0));
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t r = 0; r < cfg.replicas; ++r) {
      std::uint64_t init_seed = rng::seed_derive(cfg.seed, "hydro.init",
                                                 static_cast<std::uint64_t>(r) ^
                                                     (std::uint64_t)(1e6 * eps));
      std::uint64_t clock_seed = rng::seed_derive(cfg.seed, "hydro.clocks",
                                                  static_cast<std::uint64_t>(r) ^
                                                      (std::uint64_t)(1e6 * eps));
      excl::ParticleConfig xi = init_product_bernoulli(e, profile, eps, init_seed);
      excl::ClockSchedule clocks(e, T, t0, clock_seed, rate_scale);
      excl::EvolveOptions opts;
      opts.component_cap = cfg.component_cap;
      opts.observe_times = grid;
      std::vector<double> local_sup(phis.size(), 0.0);
      opts.observer = [&](std::size_t k, double, const excl::ParticleConfig& eta) {
        for (std::size_t pi = 0; pi < phis.size(); ++pi) {
          double acc = 0.0;
          const auto& pv = phi_vals[pi];
          for (std::int64_t i = 0; i < e.n(); ++i)
            if (eta.occ[i]) acc += pv[i];
          double dev = std::abs(epsd * acc - ref[pi][k]);
          local_sup[pi] = std::max(local_sup[pi], dev);
        }
      };
      excl::evolve(e, clocks, xi, T, opts);
      for (std::size_t pi = 0; pi < phis.size(); ++pi)
        sup[pi][r] = local_sup[pi];
    }

    for (std::size_t pi = 0; pi < phis.size(); ++pi) {
      HydroCell cell;
      cell.eps = eps;
      cell.phi_index = static_cast<int>(pi);
      cell.sup_deviation = sup[pi];
      std::vector<double> sorted = sup[pi];
      std::sort(sorted.begin(), sorted.end());
      cell.median_sup = sorted[sorted.size() / 2];
      double mean = 0.0;
      for (double v : sorted) mean += v;
      cell.mean_sup = mean / sorted.size();
      for (double thr : cfg.thresholds) {
        std::int64_t c = 0;
        for (double v : sorted)
          if (v > thr) ++c;
        cell.exceedance.push_back(static_cast<double>(c) / sorted.size());
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

}  // namespace sep::hydro
