#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sepsim/rng.hpp"

namespace sep::env {

// Scalar mark distribution used for conductances and energy marks.
// `Cycle` is a deterministic assignment by draw index (values repeating in
// order); it consumes no randomness.
struct ScalarLaw {
  enum class Kind {
    Constant,
    Uniform,
    Exponential,
    LogNormal,
    TwoPoint,
    Table,
    Cycle,
    Normal,
  };

  Kind kind = Kind::Constant;
  double a = 1.0;  // constant value / uniform lo / exp rate / lognormal mu / normal mu
  double b = 0.0;  // uniform hi / lognormal sigma / normal sigma
  double p = 0.5;                // TwoPoint: probability of `a`
  std::vector<double> values;    // Table / Cycle
  std::vector<double> weights;   // Table

  static ScalarLaw constant(double v);
  static ScalarLaw uniform(double lo, double hi);
  static ScalarLaw exponential(double rate);
  static ScalarLaw lognormal(double mu, double sigma);
  static ScalarLaw two_point(double v1, double v2, double p1);
  static ScalarLaw table(std::vector<double> values, std::vector<double> weights);
  static ScalarLaw cycle(std::vector<double> values);
  static ScalarLaw normal(double mu, double sigma);

  double sample(rng::Stream& rs, std::uint64_t draw_index) const;

  // Throws ValidationError unless the law's support lies in (0, inf).
  void require_positive_support(const std::string& what) const;

  std::string describe() const;
};

}  // namespace sep::env
