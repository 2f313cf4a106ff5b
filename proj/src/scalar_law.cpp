#include "sepsim/scalar_law.hpp"

#include <cmath>
#include <sstream>

#include "sepsim/errors.hpp"

namespace sep::env {

ScalarLaw ScalarLaw::constant(double v) {
  ScalarLaw l;
  l.kind = Kind::Constant;
  l.a = v;
  return l;
}

ScalarLaw ScalarLaw::uniform(double lo, double hi) {
  if (!(hi > lo)) throw ValidationError("uniform law requires hi > lo");
  ScalarLaw l;
  l.kind = Kind::Uniform;
  l.a = lo;
  l.b = hi;
  return l;
}

ScalarLaw ScalarLaw::exponential(double rate) {
  if (!(rate > 0)) throw ValidationError("exponential law requires rate > 0");
  ScalarLaw l;
  l.kind = Kind::Exponential;
  l.a = rate;
  return l;
}

ScalarLaw ScalarLaw::lognormal(double mu, double sigma) {
  if (!(sigma >= 0)) throw ValidationError("lognormal law requires sigma >= 0");
  ScalarLaw l;
  l.kind = Kind::LogNormal;
  l.a = mu;
  l.b = sigma;
  return l;
}

ScalarLaw ScalarLaw::two_point(double v1, double v2, double p1) {
  if (!(p1 >= 0 && p1 <= 1))
    throw ValidationError("two_point law requires p in [0,1]");
  ScalarLaw l;
  l.kind = Kind::TwoPoint;
  l.a = v1;
  l.b = v2;
  l.p = p1;
  return l;
}

ScalarLaw ScalarLaw::table(std::vector<double> values,
                           std::vector<double> weights) {
  if (values.empty() || values.size() != weights.size())
    throw ValidationError("table law requires matching nonempty values/weights");
  double tot = 0;
  for (double w : weights) {
    if (!(w >= 0)) throw ValidationError("table law weights must be >= 0");
    tot += w;
  }
  if (!(tot > 0)) throw ValidationError("table law needs positive total weight");
  ScalarLaw l;
  l.kind = Kind::Table;
  l.values = std::move(values);
  l.weights = std::move(weights);
  for (double& w : l.weights) w /= tot;
  return l;
}

ScalarLaw ScalarLaw::cycle(std::vector<double> values) {
  if (values.empty()) throw ValidationError("cycle law requires values");
  ScalarLaw l;
  l.kind = Kind::Cycle;
  l.values = std::move(values);
  return l;
}

ScalarLaw ScalarLaw::normal(double mu, double sigma) {
  ScalarLaw l;
  l.kind = Kind::Normal;
  l.a = mu;
  l.b = sigma;
  return l;
}

double ScalarLaw::sample(rng::Stream& rs, std::uint64_t draw_index) const {
  switch (kind) {
    case Kind::Constant:
      return a;
    case Kind::Uniform:
      return rs.uniform(a, b);
    case Kind::Exponential:
      return rs.exponential(a);
    case Kind::LogNormal:
      return std::exp(a + b * rs.normal());
    case Kind::TwoPoint:
      return rs.u01() < p ? a : b;
    case Kind::Table: {
      double u = rs.u01(), acc = 0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        acc += weights[i];
        if (u < acc) return values[i];
      }
      return values.back();
    }
    case Kind::Cycle:
      return values[draw_index % values.size()];
    case Kind::Normal:
      return a + b * rs.normal();
  }
  return a;
}

void ScalarLaw::require_positive_support(const std::string& what) const {
  auto fail = [&] {
    throw ValidationError(what + ": law must have support in (0, inf), got " +
                          describe());
  };
  switch (kind) {
    case Kind::Constant:
      if (!(a > 0)) fail();
      break;
    case Kind::Uniform:
      if (!(a > 0)) fail();
      break;
    case Kind::Exponential:
    case Kind::LogNormal:
      break;  // support (0, inf) by construction
    case Kind::TwoPoint:
      if (!(a > 0) || !(b > 0)) fail();
      break;
    case Kind::Table:
    case Kind::Cycle:
      for (double v : values)
        if (!(v > 0)) fail();
      break;
    case Kind::Normal:
      fail();  // full real line
      break;
  }
}

std::string ScalarLaw::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Constant: os << "constant(" << a << ")"; break;
    case Kind::Uniform: os << "uniform(" << a << "," << b << ")"; break;
    case Kind::Exponential: os << "exponential(" << a << ")"; break;
    case Kind::LogNormal: os << "lognormal(" << a << "," << b << ")"; break;
    case Kind::TwoPoint: os << "two_point(" << a << "," << b << ";" << p << ")"; break;
    case Kind::Table: os << "table[" << values.size() << "]"; break;
    case Kind::Cycle: os << "cycle[" << values.size() << "]"; break;
    case Kind::Normal: os << "normal(" << a << "," << b << ")"; break;
  }
  return os.str();
}

}  // namespace sep::env
