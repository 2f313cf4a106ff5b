#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sepsim/environment.hpp"

namespace sep::excl {

struct ParticleConfig {
  std::vector<std::uint8_t> occ;

  ParticleConfig() = default;
  explicit ParticleConfig(std::int64_t n, std::uint8_t fill = 0)
      : occ(n, fill) {}
  std::int64_t size() const { return static_cast<std::int64_t>(occ.size()); }
  std::int64_t count() const;
  bool operator==(const ParticleConfig&) const = default;
};

// eta^{i,j}: exchange the occupation values at i and j. i == j is a no-op.
void exchange(ParticleConfig& eta, std::int64_t i, std::int64_t j);
ParticleConfig exchanged(const ParticleConfig& eta, std::int64_t i,
                         std::int64_t j);

// Default slab width from the bounded-rate percolation criterion: t0 with
// 1 - exp(-c_max t0) = p_target, p_target = p_c/2 for the ambient lattice
// (a conservative 1/4 for non-lattice models; the component cap and the
// halving fallback in evolve cover those).
double default_slab_width(const env::Environment& e, double rate_scale = 1.0);

struct ClockEvent {
  double time;
  std::int32_t edge;
};

// Realized Poisson clocks per edge on [0, horizon], sliced into generation
// slabs of width t0. Events are a pure function of (environment, horizon, t0,
// rate_scale, seed), materialized lazily slab by slab; simultaneous events
// across edges are excluded at generation by re-drawing the later one.
class ClockSchedule {
 public:
  ClockSchedule(const env::Environment& e, double horizon, double t0,
                std::uint64_t seed, double rate_scale = 1.0);

  const env::Environment& environment() const { return *env_; }
  double horizon() const { return horizon_; }
  double slab_width() const { return t0_; }
  double rate_scale() const { return rate_scale_; }
  std::uint64_t seed() const { return seed_; }
  int num_slabs() const { return num_slabs_; }

  // Chronological events of generation slab r (times in (r t0, (r+1) t0],
  // clipped to the horizon), distinct across edges.
  void slab_events(int r, std::vector<ClockEvent>& out) const;

  // Per-edge sorted event-time lists over the whole horizon. Intended for
  // small instances; materializes everything.
  std::vector<std::vector<double>> per_edge_events() const;

  // All events up to time t, chronological.
  std::vector<ClockEvent> events_until(double t) const;

 private:
  const env::Environment* env_;
  double horizon_;
  double t0_;
  double rate_scale_;
  std::uint64_t seed_;
  std::uint64_t stream_;
  int num_slabs_;
  std::vector<double> mu_;      // per-edge events per slab
  std::vector<double> expmu_;   // exp(-mu)
};

// Connected components of the graph whose edges fired within one slab
// (property (P_r) data). Components list touched points only.
struct SlabCertificate {
  int slab = 0;
  std::vector<std::vector<std::int32_t>> components;
  std::int64_t max_component = 0;
  bool valid(std::int64_t cap) const { return max_component <= cap; }
};

std::vector<SlabCertificate> slab_certificates(const env::Environment& e,
                                               const ClockSchedule& clocks,
                                               std::int64_t cap);

struct EvolveLogEntry {
  double time;
  std::int32_t i, j;
  bool swapped;
};

struct EvolveOptions {
  std::int64_t component_cap = 1000;
  int max_halvings = 10;
  bool debug_order_check = false;  // replay components in two orders
  bool collect_log = false;
  std::span<const double> observe_times;  // ascending
  std::function<void(std::size_t, double, const ParticleConfig&)> observer;
};

struct EvolveResult {
  ParticleConfig eta;
  std::vector<EvolveLogEntry> log;
  int max_halving_depth = 0;
  std::int64_t events_processed = 0;
};

// Graphical construction: deterministic function of (xi, clocks). Slabs are
// processed whole (certificate on the full slab) and only events <= t are
// replayed within the final slab. When a slab's fired-edge graph has a
// component above the cap the window is halved, up to max_halvings.
EvolveResult evolve(const env::Environment& e, const ClockSchedule& clocks,
                    const ParticleConfig& xi, double t,
                    const EvolveOptions& opts = {});

// Local function of the configuration with declared support.
struct LocalFunction {
  std::vector<std::int32_t> support;
  std::function<double(const ParticleConfig&)> eval;
};

// Generator on a local function: sum over unordered edges meeting the
// support of c_xy [f(eta^{x,y}) - f(eta)]. With debug_check_support, 32
// random exchanges outside the support must leave f unchanged.
double generator_apply(const env::Environment& e, const LocalFunction& f,
                       const ParticleConfig& eta, double rate_scale = 1.0,
                       bool debug_check_support = false,
                       std::uint64_t fuzz_seed = 0);

// Occupation form (exchange restricted to eta(x)(1-eta(y)) pairs); agrees
// with generator_apply and is kept as the cross-check route.
double generator_apply_occupation(const env::Environment& e,
                                  const LocalFunction& f,
                                  const ParticleConfig& eta,
                                  double rate_scale = 1.0);

struct MartingalePath {
  std::vector<double> times;
  std::vector<double> martingale;  // M at each evaluation time, M(0) = 0
  std::vector<double> bracket;     // integral of B up to each time
};

// Dynkin martingale of pi^eps(u) along one clock realization, with the drift
// integrated exactly over the piecewise-constant configuration.
MartingalePath dynkin_path(const env::Environment& e, double eps,
                           const ClockSchedule& clocks,
                           const ParticleConfig& xi, std::span<const double> u,
                           std::span<const double> times);

struct DualityResult {
  double mc_mean = 0.0;
  double std_error = 0.0;
  double kernel_value = 0.0;
  double z = 0.0;
};

// Monte Carlo estimate of E[eta_t(x)] against the one-walk kernel value
// sum_y p_t(x, y) xi(y). Replicas run in parallel with independent streams.
DualityResult duality_mc(const env::Environment& e, const ParticleConfig& xi,
                         std::int64_t x, double t, std::int64_t replicas,
                         std::uint64_t seed, double kernel_tol = 1e-10);

struct NagyResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  double bound = 0.0;  // 10 * quad_tol + kernel tolerance
};

// Pathwise representation check for a fixed clock realization:
// eta_t(x) = sum_y p(t,x,y) xi(y) + sum_y int_0^t p(t-s,x,y) dM_y(s).
NagyResult nagy_check(const env::Environment& e, const ClockSchedule& clocks,
                      const ParticleConfig& xi, std::int64_t x, double t,
                      double quad_tol);

}  // namespace sep::excl
