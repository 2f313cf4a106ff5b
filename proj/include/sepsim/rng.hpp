#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace sep::rng {

// SplitMix64 finalizer. Bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(const std::string& s);

// Registered stream labels; seed_derive rejects anything else.
bool label_registered(const std::string& label);
const std::vector<std::string>& label_registry();

// Keyed derivation master -> (label, index) stream seed. Platform independent.
std::uint64_t seed_derive(std::uint64_t master, const std::string& label,
                          std::uint64_t index);

// Minimal counter-based generator for per-(edge,slab) substreams. Much cheaper
// to construct than mt19937_64; statistically adequate for event sampling.
struct SplitMix {
  std::uint64_t state;
  explicit SplitMix(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() { return mix64(state += 0x9e3779b97f4a7c15ULL); }
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

// mt19937_64 wrapper with hand-rolled transforms so streams are identical on
// every platform (the raw engine output is pinned by the standard).
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t raw() { return eng_(); }
  // Uniform in [0,1).
  double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * u01(); }
  double exponential(double rate) { return -std::log1p(-u01()) / rate; }
  double normal();  // Box-Muller, consumes two uniforms per pair
  std::uint64_t below(std::uint64_t n);  // uniform in [0,n)
  long poisson(double mean);

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

long poisson_from_u01(SplitMix& g, double mean, double exp_neg_mean);

}  // namespace sep::rng
