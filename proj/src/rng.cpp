#include "sepsim/rng.hpp"

#include <algorithm>
#include <array>

#include "sepsim/errors.hpp"

namespace sep::rng {

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {
const std::vector<std::string> kLabels = {
    "env.count",    "env.points",  "env.energy",   "env.rates",
    "env.open",     "env.retry",   "clocks",       "clocks.tiebreak",
    "walk.path",    "walk.start",  "exclusion.init", "msd.replica",
    "duality.replica", "generator.mc", "hydro.init", "hydro.clocks",
    "dynkin.replica", "bench", "test"};
}  // namespace

bool label_registered(const std::string& label) {
  return std::find(kLabels.begin(), kLabels.end(), label) != kLabels.end();
}

const std::vector<std::string>& label_registry() { return kLabels; }

std::uint64_t seed_derive(std::uint64_t master, const std::string& label,
                          std::uint64_t index) {
  if (!label_registered(label))
    throw ValidationError("seed_derive: unknown stream label '" + label + "'");
  std::uint64_t h = mix64(master ^ fnv1a64(label));
  return mix64(h + 0x9e3779b97f4a7c15ULL * (index + 1));
}

double Stream::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller; u clamped away from 0 so log stays finite.
  double u = u01();
  if (u <= 0.0) u = 0x1.0p-53;
  double r = std::sqrt(-2.0 * std::log(u));
  double a = 6.283185307179586476925286766559 * u01();
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

std::uint64_t Stream::below(std::uint64_t n) {
  // Rejection to avoid modulo bias.
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                        std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = eng_();
  } while (x >= limit);
  return x % n;
}

long Stream::poisson(double mean) {
  if (mean <= 0.0) return 0;
  if (mean < 30.0) {
    double p = std::exp(-mean), s = p, u = u01();
    long k = 0;
    while (u > s && k < 1000) {
      ++k;
      p *= mean / static_cast<double>(k);
      s += p;
    }
    return k;
  }
  // Arrival counting in log space; robust for any mean, O(mean) draws.
  double t = 0.0;
  long n = -1;
  while (t <= mean) {
    t += exponential(1.0);
    ++n;
  }
  return n;
}

long poisson_from_u01(SplitMix& g, double mean, double exp_neg_mean) {
  if (mean <= 0.0) return 0;
  double p = exp_neg_mean, s = p, u = g.u01();
  long k = 0;
  while (u > s) {
    ++k;
    p *= mean / static_cast<double>(k);
    s += p;
    if (k > 10000) break;  // unreachable for the slab means this is used with
  }
  return k;
}

}  // namespace sep::rng
