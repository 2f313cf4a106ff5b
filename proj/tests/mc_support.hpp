#pragma once

// Monte Carlo oracle for the generator finite-difference check: simulates
// the exclusion dynamics over a short window [0, h] by direct event
// sampling (Poisson event count, iid uniform times, edges by rate), fully
// independent of the library's ClockSchedule/evolve path.

#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "sepsim/environment.hpp"
#include "sepsim/exclusion.hpp"
#include "sepsim/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mc {

struct FdEstimate {
  double mean = 0.0;  // MC estimate of (E f(eta_h) - f(eta)) / h
  double se = 0.0;
};

// One window simulation: returns f(eta_h) - f(eta0).
inline double window_delta(const sep::env::Environment& e,
                           const std::vector<double>& edge_cum, double total,
                           const sep::excl::LocalFunction& f,
                           const sep::excl::ParticleConfig& eta0, double h,
                           double f0, sep::rng::SplitMix& g) {
  long k = sep::rng::poisson_from_u01(g, total * h, std::exp(-total * h));
  if (k == 0) return 0.0;
  // Edge sequence in time order: times are exchangeable, so sampling edges
  // in order of occurrence needs no explicit times.
  sep::excl::ParticleConfig eta = eta0;
  for (long q = 0; q < k; ++q) {
    double u = g.u01() * total;
    std::size_t lo = 0, hi = edge_cum.size();
    while (lo + 1 < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (edge_cum[mid] <= u)
        lo = mid;
      else
        hi = mid;
    }
    sep::excl::exchange(eta, e.graph.e_i[lo], e.graph.e_j[lo]);
  }
  return f.eval(eta) - f0;
}

inline FdEstimate fd_estimate(const sep::env::Environment& e,
                              const sep::excl::LocalFunction& f,
                              const sep::excl::ParticleConfig& eta0, double h,
                              std::int64_t replicas, std::uint64_t seed) {
  std::vector<double> edge_cum(e.graph.num_edges());
  double total = 0.0;
  for (std::int64_t k = 0; k < e.graph.num_edges(); ++k) {
    edge_cum[k] = total;
    total += e.graph.e_rate[k];
  }
  double f0 = f.eval(eta0);

  const int blocks = 64;
  std::vector<double> sum(blocks, 0.0), sumsq(blocks, 0.0);
  std::int64_t per = (replicas + blocks - 1) / blocks;
#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < blocks; ++b) {
    sep::rng::SplitMix g(sep::rng::mix64(seed ^ (0x1234ULL + b)));
    double s = 0.0, s2 = 0.0;
    std::int64_t lo = b * per, hi = std::min<std::int64_t>(replicas, lo + per);
    for (std::int64_t r = lo; r < hi; ++r) {
      double d = window_delta(e, edge_cum, total, f, eta0, h, f0, g);
      s += d;
      s2 += d * d;
    }
    sum[b] = s;
    sumsq[b] = s2;
  }
  double s = 0.0, s2 = 0.0;
  for (int b = 0; b < blocks; ++b) {
    s += sum[b];
    s2 += sumsq[b];
  }
  double mean = s / static_cast<double>(replicas);
  double var =
      (s2 / static_cast<double>(replicas) - mean * mean) /
      static_cast<double>(replicas);
  FdEstimate out;
  out.mean = mean / h;
  out.se = std::sqrt(std::max(var, 0.0)) / h;
  return out;
}

// Fuzz a local function with enough curvature for the slope check to be
// measurable: products and singles over ring sites with integer coefficients,
// paired with a configuration where L^2 f is large.
struct FuzzedCase {
  sep::excl::LocalFunction f;
  sep::excl::ParticleConfig eta;
  double lf = 0.0;   // exact L f (eta)
  double l2f = 0.0;  // exact L^2 f (eta)
};

inline FuzzedCase fuzz_local_function(const sep::env::Environment& e,
                                      std::uint64_t seed, double min_l2) {
  using sep::excl::LocalFunction;
  using sep::excl::ParticleConfig;
  for (std::uint64_t attempt = 0;; ++attempt) {
    sep::rng::Stream rs(sep::rng::mix64(seed + attempt));
    // terms: coefficient and a site subset (size 1..3)
    struct Term {
      double coeff;
      std::vector<std::int32_t> sites;
    };
    auto shared_terms = std::make_shared<std::vector<Term>>();
    int nterms = 2 + static_cast<int>(rs.below(3));
    for (int t = 0; t < nterms; ++t) {
      Term term;
      term.coeff = (rs.u01() < 0.5 ? -1.0 : 1.0) * (1.0 + rs.below(3));
      int sz = 1 + static_cast<int>(rs.below(3));
      for (int q = 0; q < sz; ++q)
        term.sites.push_back(static_cast<std::int32_t>(rs.below(e.n())));
      shared_terms->push_back(term);
    }
    LocalFunction f;
    for (std::int64_t i = 0; i < e.n(); ++i)
      f.support.push_back(static_cast<std::int32_t>(i));
    f.eval = [shared_terms](const ParticleConfig& eta) {
      double acc = 0.0;
      for (const auto& term : *shared_terms) {
        double prod = term.coeff;
        for (auto s : term.sites) prod *= eta.occ[s];
        acc += prod;
      }
      return acc;
    };
    ParticleConfig eta(e.n(), 0);
    for (std::int64_t i = 0; i < e.n(); ++i) eta.occ[i] = rs.u01() < 0.5;

    double lf = sep::excl::generator_apply(e, f, eta);
    // L^2 f via the generator applied to (L f)(.)
    LocalFunction lf_fn;
    lf_fn.support = f.support;
    lf_fn.eval = [&e, &f](const ParticleConfig& cfg) {
      return sep::excl::generator_apply(e, f, cfg);
    };
    double l2f = sep::excl::generator_apply(e, lf_fn, eta);
    if (std::abs(l2f) >= min_l2) {
      FuzzedCase out;
      out.f = std::move(f);
      out.eta = std::move(eta);
      out.lf = lf;
      out.l2f = l2f;
      return out;
    }
  }
}

}  // namespace mc
