#include "sepsim/exclusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sepsim/errors.hpp"
#include "sepsim/quadrature.hpp"
#include "sepsim/random_walk.hpp"
#include "sepsim/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sep::excl {

std::int64_t ParticleConfig::count() const {
  std::int64_t c = 0;
  for (auto v : occ) c += v;
  return c;
}

void exchange(ParticleConfig& eta, std::int64_t i, std::int64_t j) {
  if (i == j) return;
  std::swap(eta.occ[i], eta.occ[j]);
}

ParticleConfig exchanged(const ParticleConfig& eta, std::int64_t i,
                         std::int64_t j) {
  ParticleConfig out = eta;
  exchange(out, i, j);
  return out;
}

double default_slab_width(const env::Environment& e, double rate_scale) {
  double pc = env::bond_percolation_threshold(e.ambient);
  double p_target = pc > 0.0 ? 0.5 * pc : 0.25;
  double cmax = e.max_edge_rate() * rate_scale;
  return -std::log1p(-p_target) / cmax;
}

ClockSchedule::ClockSchedule(const env::Environment& e, double horizon,
                             double t0, std::uint64_t seed, double rate_scale)
    : env_(&e),
      horizon_(horizon),
      t0_(t0),
      rate_scale_(rate_scale),
      seed_(seed) {
  if (!(horizon >= 0)) throw ValidationError("ClockSchedule: horizon >= 0");
  if (horizon > 0 && !(t0 > 0 && t0 <= horizon))
    throw ValidationError("ClockSchedule: t0 in (0, horizon] required");
  stream_ = rng::mix64(seed ^ 0x5eb5c1a9cafe4d11ULL);
  num_slabs_ = horizon > 0
                   ? static_cast<int>(std::ceil(horizon / t0 - 1e-12))
                   : 0;
  const auto& g = e.graph;
  mu_.resize(g.num_edges());
  expmu_.resize(g.num_edges());
  for (std::int64_t k = 0; k < g.num_edges(); ++k) {
    mu_[k] = g.e_rate[k] * rate_scale_ * t0_;
    expmu_[k] = std::exp(-mu_[k]);
  }
}

void ClockSchedule::slab_events(int r, std::vector<ClockEvent>& out) const {
  out.clear();
  if (r < 0 || r >= num_slabs_) return;
  const double lo = r * t0_;
  const std::int64_t ne = static_cast<std::int64_t>(mu_.size());
  for (std::int64_t ed = 0; ed < ne; ++ed) {
    if (mu_[ed] == 0.0) continue;
    rng::SplitMix gen(rng::mix64(stream_ ^
                                 ((static_cast<std::uint64_t>(r) << 32) |
                                  static_cast<std::uint64_t>(ed))));
    long k = rng::poisson_from_u01(gen, mu_[ed], expmu_[ed]);
    for (long q = 0; q < k; ++q) {
      double t = lo + gen.u01() * t0_;
      if (t <= horizon_ && t > lo)
        out.push_back({t, static_cast<std::int32_t>(ed)});
    }
  }
  std::sort(out.begin(), out.end(), [](const ClockEvent& a, const ClockEvent& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.edge < b.edge;
  });
  // Exact ties across edges are measure zero; resolve deterministically by
  // re-drawing the later event inside the slab.
  for (int pass = 0; pass < 100; ++pass) {
    bool tie = false;
    for (std::size_t i = 1; i < out.size(); ++i) {
      if (out[i].time == out[i - 1].time) {
        rng::SplitMix tb(rng::mix64(stream_ ^ 0x7ee1db7feadULL ^
                                    ((static_cast<std::uint64_t>(r) << 32) |
                                     (static_cast<std::uint64_t>(out[i].edge) +
                                      17u * pass))));
        out[i].time = lo + tb.u01() * t0_;
        if (out[i].time > horizon_ || out[i].time <= lo)
          out[i].time = lo + 0.5 * (1.0 + tb.u01()) * std::min(t0_, horizon_ - lo);
        tie = true;
      }
    }
    if (!tie) break;
    std::sort(out.begin(), out.end(),
              [](const ClockEvent& a, const ClockEvent& b) {
                if (a.time != b.time) return a.time < b.time;
                return a.edge < b.edge;
              });
  }
}

std::vector<std::vector<double>> ClockSchedule::per_edge_events() const {
  std::vector<std::vector<double>> per(mu_.size());
  std::vector<ClockEvent> buf;
  for (int r = 0; r < num_slabs_; ++r) {
    slab_events(r, buf);
    for (const auto& ev : buf) per[ev.edge].push_back(ev.time);
  }
  return per;
}

std::vector<ClockEvent> ClockSchedule::events_until(double t) const {
  std::vector<ClockEvent> all, buf;
  for (int r = 0; r < num_slabs_; ++r) {
    if (r * t0_ >= t) break;
    slab_events(r, buf);
    for (const auto& ev : buf)
      if (ev.time <= t) all.push_back(ev);
  }
  return all;
}

namespace {

// Union-find over the points touched by one window of events.
struct TouchedComponents {
  std::vector<std::int32_t> parent, size, points;

  void build(const env::Environment& e, std::span<const ClockEvent> events,
             std::vector<std::int32_t>& local, std::vector<std::int32_t>& stamp,
             std::int32_t epoch) {
    parent.clear();
    size.clear();
    points.clear();
    auto local_id = [&](std::int32_t p) {
      if (stamp[p] != epoch) {
        stamp[p] = epoch;
        local[p] = static_cast<std::int32_t>(points.size());
        points.push_back(p);
        parent.push_back(static_cast<std::int32_t>(parent.size()));
        size.push_back(1);
      }
      return local[p];
    };
    auto find = [&](std::int32_t x) {
      while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
      }
      return x;
    };
    const auto& g = e.graph;
    for (const auto& ev : events) {
      std::int32_t a = local_id(g.e_i[ev.edge]);
      std::int32_t b = local_id(g.e_j[ev.edge]);
      a = find(a);
      b = find(b);
      if (a == b) continue;
      if (size[a] < size[b]) std::swap(a, b);
      parent[b] = a;
      size[a] += size[b];
    }
  }

  std::int32_t find(std::int32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }

  std::int64_t max_component() {
    std::int64_t m = 0;
    for (std::size_t i = 0; i < parent.size(); ++i)
      if (find(static_cast<std::int32_t>(i)) == static_cast<std::int32_t>(i))
        m = std::max<std::int64_t>(m, size[i]);
    return m;
  }
};

}  // namespace

std::vector<SlabCertificate> slab_certificates(const env::Environment& e,
                                               const ClockSchedule& clocks,
                                               std::int64_t cap) {
  std::vector<SlabCertificate> certs;
  std::vector<ClockEvent> buf;
  std::vector<std::int32_t> local(e.n(), 0), stamp(e.n(), -1);
  TouchedComponents tc;
  for (int r = 0; r < clocks.num_slabs(); ++r) {
    clocks.slab_events(r, buf);
    tc.build(e, buf, local, stamp, r);
    SlabCertificate cert;
    cert.slab = r;
    cert.max_component = tc.max_component();
    (void)cap;
    // Group points by root, roots in first-touch order.
    std::vector<std::int32_t> root_slot(tc.points.size(),
                                        static_cast<std::int32_t>(-1));
    for (std::size_t i = 0; i < tc.points.size(); ++i) {
      std::int32_t rt = tc.find(static_cast<std::int32_t>(i));
      if (root_slot[rt] < 0) {
        root_slot[rt] = static_cast<std::int32_t>(cert.components.size());
        cert.components.emplace_back();
      }
      cert.components[root_slot[rt]].push_back(tc.points[i]);
    }
    certs.push_back(std::move(cert));
  }
  return certs;
}

namespace {

struct EvolveContext {
  const env::Environment* e;
  const ClockSchedule* clocks;
  double t;
  const EvolveOptions* opts;
  ParticleConfig* eta;
  EvolveResult* result;
  std::vector<std::int32_t> local, stamp;
  std::int32_t epoch = 0;
  std::size_t obs_pos = 0;

  void emit_until(double time_threshold) {
    const auto& obs = opts->observe_times;
    while (obs_pos < obs.size() && obs[obs_pos] < time_threshold &&
           obs[obs_pos] <= t) {
      if (opts->observer) opts->observer(obs_pos, obs[obs_pos], *eta);
      ++obs_pos;
    }
  }

  void apply_event(const ClockEvent& ev) {
    if (ev.time > t) return;
    emit_until(ev.time);
    const auto& g = e->graph;
    std::int32_t a = g.e_i[ev.edge], b = g.e_j[ev.edge];
    bool swapped = eta->occ[a] != eta->occ[b];
    exchange(*eta, a, b);
    if (opts->collect_log) result->log.push_back({ev.time, a, b, swapped});
    result->events_processed++;
  }

  // Process the events of one window; certificate first, then replay in time
  // order. Components of the fired-edge graph are independent, so the replay
  // order between them cannot change the result (checked in debug mode).
  void process_window(std::span<const ClockEvent> events, double lo, double hi,
                      int depth) {
    if (events.empty()) return;
    TouchedComponents tc;
    tc.build(*e, events, local, stamp, ++epoch);
    if (tc.max_component() > opts->component_cap) {
      if (depth >= opts->max_halvings)
        throw NumericalError(
            "evolve: slab component cap exceeded after max halvings");
      result->max_halving_depth = std::max(result->max_halving_depth, depth + 1);
      double mid = 0.5 * (lo + hi);
      auto split = std::partition_point(
          events.begin(), events.end(),
          [&](const ClockEvent& ev) { return ev.time <= mid; });
      std::size_t nlo = static_cast<std::size_t>(split - events.begin());
      process_window(events.subspan(0, nlo), lo, mid, depth + 1);
      process_window(events.subspan(nlo), mid, hi, depth + 1);
      return;
    }
    if (opts->debug_order_check) {
      // Replay whole components in two different orders and compare.
      std::vector<std::int32_t> comp_of(events.size());
      for (std::size_t i = 0; i < events.size(); ++i)
        comp_of[i] = tc.find(local[e->graph.e_i[events[i].edge]]);
      std::vector<std::int32_t> roots;
      for (std::size_t i = 0; i < tc.parent.size(); ++i)
        if (tc.find(static_cast<std::int32_t>(i)) ==
            static_cast<std::int32_t>(i))
          roots.push_back(static_cast<std::int32_t>(i));
      auto replay = [&](const std::vector<std::int32_t>& order) {
        ParticleConfig tmp = *eta;
        for (std::int32_t rt : order)
          for (std::size_t i = 0; i < events.size(); ++i)
            if (comp_of[i] == rt && events[i].time <= t) {
              const auto& g = e->graph;
              exchange(tmp, g.e_i[events[i].edge], g.e_j[events[i].edge]);
            }
        return tmp;
      };
      std::vector<std::int32_t> rev(roots.rbegin(), roots.rend());
      ParticleConfig fwd = replay(roots), bwd = replay(rev);
      if (!(fwd == bwd))
        throw NumericalError("evolve: component order dependence detected");
    }
    for (const auto& ev : events) apply_event(ev);
  }
};

}  // namespace

EvolveResult evolve(const env::Environment& e, const ClockSchedule& clocks,
                    const ParticleConfig& xi, double t,
                    const EvolveOptions& opts) {
  if (xi.size() != e.n())
    throw ValidationError("evolve: configuration size mismatch");
  if (t > clocks.horizon() + 1e-12)
    throw ValidationError("evolve: t beyond clock horizon");
  EvolveResult result;
  result.eta = xi;
  EvolveContext ctx;
  ctx.e = &e;
  ctx.clocks = &clocks;
  ctx.t = t;
  ctx.opts = &opts;
  ctx.eta = &result.eta;
  ctx.result = &result;
  ctx.local.assign(e.n(), 0);
  ctx.stamp.assign(e.n(), -1);

  std::vector<ClockEvent> buf;
  const double t0 = clocks.slab_width();
  for (int r = 0; r < clocks.num_slabs(); ++r) {
    double lo = r * t0;
    if (lo >= t) break;
    clocks.slab_events(r, buf);
    ctx.process_window(std::span<const ClockEvent>(buf), lo,
                       std::min((r + 1) * t0, clocks.horizon()), 0);
  }
  ctx.emit_until(std::numeric_limits<double>::infinity());
  return result;
}

double generator_apply(const env::Environment& e, const LocalFunction& f,
                       const ParticleConfig& eta, double rate_scale,
                       bool debug_check_support, std::uint64_t fuzz_seed) {
  if (eta.size() != e.n())
    throw ValidationError("generator_apply: configuration size mismatch");
  if (f.support.empty())
    throw ValidationError("generator_apply: empty declared support");
  std::vector<char> in_a(e.n(), 0);
  for (auto p : f.support) in_a[p] = 1;

  if (debug_check_support) {
    // Fuzz: exchanges entirely outside the declared support must not move f.
    rng::Stream rs(fuzz_seed ^ 0xf00dULL);
    ParticleConfig probe = eta;
    double base = f.eval(probe);
    int done = 0, tries = 0;
    while (done < 32 && tries < 4096 && e.n() >
           static_cast<std::int64_t>(f.support.size()) + 1) {
      ++tries;
      std::int64_t i = static_cast<std::int64_t>(rs.below(e.n()));
      std::int64_t j = static_cast<std::int64_t>(rs.below(e.n()));
      if (i == j || in_a[i] || in_a[j]) continue;
      ParticleConfig mod = probe;
      exchange(mod, i, j);
      if (std::abs(f.eval(mod) - base) > 0)
        throw ValidationError(
            "generator_apply: f changes under exchanges outside its declared "
            "support");
      ++done;
    }
  }

  const auto& g = e.graph;
  double acc = 0.0;
  double fbase = f.eval(eta);
  ParticleConfig work = eta;
  for (auto x : f.support) {
    for (std::int64_t k = g.row_ptr[x]; k < g.row_ptr[x + 1]; ++k) {
      std::int32_t y = g.col[k];
      if (in_a[y] && y < x) continue;  // unordered edges within A counted once
      if (eta.occ[x] == eta.occ[y]) continue;  // exchange is a no-op on f
      exchange(work, x, y);
      acc += g.rate[k] * (f.eval(work) - fbase);
      exchange(work, x, y);
    }
  }
  return acc * rate_scale;
}

double generator_apply_occupation(const env::Environment& e,
                                  const LocalFunction& f,
                                  const ParticleConfig& eta,
                                  double rate_scale) {
  std::vector<char> in_a(e.n(), 0);
  for (auto p : f.support) in_a[p] = 1;
  const auto& g = e.graph;
  double acc = 0.0;
  double fbase = f.eval(eta);
  ParticleConfig work = eta;
  // Ordered pairs with eta(x) (1 - eta(y)); both orientations of each edge.
  for (std::int64_t ed = 0; ed < g.num_edges(); ++ed) {
    std::int32_t a = g.e_i[ed], b = g.e_j[ed];
    if (!in_a[a] && !in_a[b]) continue;
    for (int dir = 0; dir < 2; ++dir) {
      std::int32_t x = dir == 0 ? a : b, y = dir == 0 ? b : a;
      if (!(eta.occ[x] == 1 && eta.occ[y] == 0)) continue;
      exchange(work, x, y);
      acc += g.e_rate[ed] * (f.eval(work) - fbase);
      exchange(work, x, y);
    }
  }
  return acc * rate_scale;
}

MartingalePath dynkin_path(const env::Environment& e, double eps,
                           const ClockSchedule& clocks,
                           const ParticleConfig& xi, std::span<const double> u,
                           std::span<const double> times) {
  if (static_cast<std::int64_t>(u.size()) != e.n())
    throw ValidationError("dynkin_path: u size mismatch");
  for (double t : times)
    if (t > clocks.horizon() + 1e-12)
      throw ValidationError("dynkin_path: evaluation time beyond horizon");

  const auto& g = e.graph;
  const int d = e.dim();
  const double scale = clocks.rate_scale();
  const double epsd = std::pow(eps, d);

  // v(x) = sum_y c_eff (u(y) - u(x)); drift(eta) = eps^d sum eta v.
  std::vector<double> v(e.n(), 0.0);
  for (std::int64_t i = 0; i < e.n(); ++i) {
    double s = 0.0;
    for (std::int64_t k = g.row_ptr[i]; k < g.row_ptr[i + 1]; ++k)
      s += g.rate[k] * (u[g.col[k]] - u[i]);
    v[i] = s * scale;
  }
  // Per-edge bracket weights c_eff (u(x)-u(y))^2; B = eps^{2d} * sum over
  // active edges (occupations differing across the edge).
  std::vector<double> bw(g.num_edges());
  for (std::int64_t ed = 0; ed < g.num_edges(); ++ed) {
    double du = u[g.e_i[ed]] - u[g.e_j[ed]];
    bw[ed] = g.e_rate[ed] * scale * du * du;
  }

  ParticleConfig eta = xi;
  double pi_u = 0.0, drift_sum = 0.0, bracket_rate = 0.0;
  for (std::int64_t i = 0; i < e.n(); ++i)
    if (eta.occ[i]) {
      pi_u += u[i];
      drift_sum += v[i];
    }
  for (std::int64_t ed = 0; ed < g.num_edges(); ++ed)
    if (eta.occ[g.e_i[ed]] != eta.occ[g.e_j[ed]]) bracket_rate += bw[ed];

  const double pi_u0 = epsd * pi_u;
  MartingalePath path;
  path.times.assign(times.begin(), times.end());
  path.martingale.resize(times.size());
  path.bracket.resize(times.size());

  double t_cur = 0.0, drift_int = 0.0, bracket_int = 0.0;
  std::size_t ti = 0;
  auto advance_to = [&](double s) {
    double dt = s - t_cur;
    drift_int += drift_sum * dt;
    bracket_int += bracket_rate * dt;
    t_cur = s;
  };
  auto emit_through = [&](double s) {
    while (ti < times.size() && times[ti] < s) {
      advance_to(times[ti]);
      path.martingale[ti] =
          epsd * pi_u - pi_u0 - epsd * drift_int;
      path.bracket[ti] = epsd * epsd * bracket_int;
      ++ti;
    }
  };

  double t_max = times.empty() ? 0.0 : times.back();
  std::vector<ClockEvent> buf;
  for (int r = 0; r < clocks.num_slabs() && r * clocks.slab_width() < t_max;
       ++r) {
    clocks.slab_events(r, buf);
    for (const auto& ev : buf) {
      if (ev.time > t_max) break;
      emit_through(ev.time);
      advance_to(ev.time);
      std::int32_t a = g.e_i[ev.edge], b = g.e_j[ev.edge];
      if (eta.occ[a] != eta.occ[b]) {
        double oa = eta.occ[a], ob = eta.occ[b];
        double delta = ob - oa;  // new eta(a) - old eta(a)
        pi_u += delta * (u[a] - u[b]);
        drift_sum += delta * (v[a] - v[b]);
        // Activity of edges incident to a or b may flip; the edge {a,b}
        // itself stays active under an exchange.
        for (std::int64_t k = g.row_ptr[a]; k < g.row_ptr[a + 1]; ++k) {
          std::int32_t y = g.col[k];
          if (y == b) continue;
          double w = g.rate[k] * scale * (u[a] - u[y]) * (u[a] - u[y]);
          bool was = oa != eta.occ[y], now = ob != eta.occ[y];
          if (was != now) bracket_rate += now ? w : -w;
        }
        for (std::int64_t k = g.row_ptr[b]; k < g.row_ptr[b + 1]; ++k) {
          std::int32_t y = g.col[k];
          if (y == a) continue;
          double w = g.rate[k] * scale * (u[b] - u[y]) * (u[b] - u[y]);
          bool was = ob != eta.occ[y], now = oa != eta.occ[y];
          if (was != now) bracket_rate += now ? w : -w;
        }
        exchange(eta, a, b);
      }
    }
  }
  emit_through(t_max + 1.0);
  return path;
}

DualityResult duality_mc(const env::Environment& e, const ParticleConfig& xi,
                         std::int64_t x, double t, std::int64_t replicas,
                         std::uint64_t seed, double kernel_tol) {
  if (replicas < 100)
    throw ValidationError("duality_mc: at least 100 replicas required");
  double t0 = default_slab_width(e, 1.0);
  t0 = std::min(t0, t > 0 ? t : 1.0);
  std::vector<std::uint8_t> hits(replicas);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t r = 0; r < replicas; ++r) {
    ClockSchedule k(e, t, t0, rng::seed_derive(seed, "duality.replica", r));
    EvolveResult res = evolve(e, k, xi, t);
    hits[r] = res.eta.occ[x];
  }
  double mean = 0.0;
  for (auto h : hits) mean += h;
  mean /= static_cast<double>(replicas);
  double var = 0.0;
  for (auto h : hits) var += (h - mean) * (h - mean);
  var /= static_cast<double>(replicas - 1);
  double se = std::sqrt(var / static_cast<double>(replicas));

  std::vector<double> row = walk::heat_kernel_row(e, 1.0, x, t, kernel_tol);
  double kernel = 0.0;
  for (std::int64_t i = 0; i < e.n(); ++i) kernel += row[i] * xi.occ[i];
  double z = se > 0 ? (mean - kernel) / se : 0.0;
  return {mean, se, kernel, z};
}

NagyResult nagy_check(const env::Environment& e, const ClockSchedule& clocks,
                      const ParticleConfig& xi, std::int64_t x, double t,
                      double quad_tol) {
  if (e.n() > 64)
    throw ValidationError("nagy_check: instance too large (N <= 64)");
  if (!(quad_tol >= 1e-8))
    throw ValidationError("nagy_check: quad_tol >= 1e-8 required");
  if (t > clocks.horizon() + 1e-12)
    throw ValidationError("nagy_check: t beyond horizon");

  const auto& g = e.graph;
  const double scale = clocks.rate_scale();
  const double kernel_tol = 1e-10;
  // semigroup with rates c * scale corresponds to eps = 1/sqrt(scale).
  const double eps_eff = 1.0 / std::sqrt(scale);

  auto kernel_row = [&](double s) {
    return walk::heat_kernel_row(e, eps_eff, x, s, kernel_tol);
  };

  auto events = clocks.events_until(t);

  // Replay, keeping the configuration before each event.
  ParticleConfig eta = xi;
  std::vector<ParticleConfig> before;
  before.reserve(events.size());
  for (const auto& ev : events) {
    before.push_back(eta);
    exchange(eta, g.e_i[ev.edge], g.e_j[ev.edge]);
  }
  double lhs = eta.occ[x];

  // Initial-data term.
  std::vector<double> row_t = kernel_row(t);
  double rhs = 0.0;
  for (std::int64_t i = 0; i < e.n(); ++i) rhs += row_t[i] * xi.occ[i];

  // Jump part of the stochastic integral.
  for (std::size_t q = 0; q < events.size(); ++q) {
    const auto& ev = events[q];
    std::int32_t a = g.e_i[ev.edge], b = g.e_j[ev.edge];
    double diff = static_cast<double>(before[q].occ[b]) -
                  static_cast<double>(before[q].occ[a]);
    if (diff == 0.0) continue;
    std::vector<double> row = kernel_row(t - ev.time);
    rhs += diff * (row[a] - row[b]);
  }

  // Compensator: minus int p(t-s, x, .) . w_s ds on each constancy interval,
  // w_s(y) = sum_z c_eff (eta_s(z) - eta_s(y)).
  auto compensator_piece = [&](const ParticleConfig& cfg, double s_lo,
                               double s_hi) {
    std::vector<double> w(e.n(), 0.0);
    for (std::int64_t i = 0; i < e.n(); ++i) {
      double s = 0.0;
      for (std::int64_t k = g.row_ptr[i]; k < g.row_ptr[i + 1]; ++k)
        s += g.rate[k] * (static_cast<double>(cfg.occ[g.col[k]]) -
                          static_cast<double>(cfg.occ[i]));
      w[i] = s * scale;
    }
    auto integrand = [&](double s) {
      std::vector<double> row = kernel_row(t - s);
      double acc = 0.0;
      for (std::int64_t i = 0; i < e.n(); ++i) acc += row[i] * w[i];
      return acc;
    };
    return quad::adaptive_simpson(integrand, s_lo, s_hi,
                                  quad_tol / std::max<std::size_t>(
                                                 1, events.size() + 1));
  };

  double s_prev = 0.0;
  for (std::size_t q = 0; q < events.size(); ++q) {
    rhs -= compensator_piece(before[q], s_prev, events[q].time);
    s_prev = events[q].time;
  }
  rhs -= compensator_piece(eta, s_prev, t);

  NagyResult out;
  out.lhs = lhs;
  out.rhs = rhs;
  out.residual = std::abs(lhs - rhs);
  out.bound = 10.0 * quad_tol + 100.0 * kernel_tol;
  return out;
}

}  // namespace sep::excl
