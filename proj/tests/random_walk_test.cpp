#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "sepsim/environment.hpp"
#include "sepsim/errors.hpp"
#include "sepsim/random_walk.hpp"
#include "sepsim/rng.hpp"
#include "test_support.hpp"

using namespace sep;
using namespace sep::env;
using namespace sep::walk;

namespace {

// Effectively a two-point system: one unit edge dominates, the remaining
// ring edges carry rate 1e-30 (needed only to keep exit rates positive).
Environment two_point_env(double rate = 1.0) {
  return gen_zd_conductance(
      1, 4, ScalarLaw::cycle({rate, 1e-30, 1e-30, 1e-30}), 1);
}

std::vector<double> random_vec(std::int64_t n, std::uint64_t seed) {
  rng::Stream rs(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rs.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

TEST_CASE("walk path basics") {
  auto ring = gen_zd_conductance(1, 8, ScalarLaw::constant(1.0), 1);
  SUBCASE("t_end = 0 keeps the walker at the start") {
    auto p = sample_walk_path(ring, 3, 0.0, 5);
    CHECK(p.start == 3);
    CHECK(p.times.empty());
  }
  SUBCASE("jump times strictly increase and moves follow edges") {
    auto p = sample_walk_path(ring, 0, 50.0, 6);
    std::int64_t prev = 0;
    double tprev = 0.0;
    for (std::size_t k = 0; k < p.times.size(); ++k) {
      CHECK(p.times[k] > tprev);
      tprev = p.times[k];
      std::int64_t next = p.points[k];
      std::int64_t diff = std::abs(next - prev);
      CHECK((diff == 1 || diff == 7));
      prev = next;
    }
  }
  SUBCASE("mean holding time 1/c over replicas") {
    // First holding of each path: truncation at t_end would bias the rest.
    std::vector<double> first;
    for (int s = 0; s < 3000; ++s) {
      auto p = sample_walk_path(ring, 0, 50.0, 100 + s);
      REQUIRE_FALSE(p.times.empty());
      first.push_back(p.times.front());
    }
    auto ms = oracle::mean_se(first);
    // holding ~ Exp(2): mean 1/2
    CHECK(std::abs(ms.mean - 0.5) < 3.0 * ms.se);
  }
}

TEST_CASE("jump counts are Poisson on a pair") {
  // Single dominating edge: exit rate ~ 1 at both ends, so the jump count
  // over [0, t] is ~ Poisson(t).
  auto pair_env = two_point_env(1.0);
  const double t = 6.0;
  const int seeds = 10000;
  std::vector<double> counts;
  counts.reserve(seeds);
  for (int s = 0; s < seeds; ++s) {
    auto p = sample_walk_path(pair_env, 0, t, 10'000 + s);
    counts.push_back(static_cast<double>(p.times.size()));
  }
  auto ms = oracle::mean_se(counts);
  CHECK(std::abs(ms.mean - t) < 3.0 * std::sqrt(t / seeds) + 1e-3);
}

TEST_CASE("two-state heat kernel closed form") {
  // Isolated pair with rate c: p_t(x,x) = (1 + e^{-2 c t}) / 2.
  double c = 0.7;
  auto e = two_point_env(c);
  for (double t : {0.1, 0.5, 2.0}) {
    auto row = heat_kernel_row(e, 1.0, 0, t, 1e-10);
    double expect = 0.5 * (1.0 + std::exp(-2.0 * c * t));
    CHECK(row[0] == doctest::Approx(expect).epsilon(1e-7));
  }
  auto row0 = heat_kernel_row(e, 1.0, 2, 0.0, 1e-6);
  CHECK(row0[2] == 1.0);
  CHECK(row0[0] == 0.0);
}

TEST_CASE("kernel row matches the dense matrix exponential oracle") {
  auto ring = gen_zd_conductance(1, 8, ScalarLaw::constant(1.0), 2);
  Eigen::MatrixXd P = oracle::expm(oracle::dense_generator(ring) * 0.5);
  auto row = heat_kernel_row(ring, 1.0, 3, 0.5, 1e-12);
  for (std::int64_t j = 0; j < 8; ++j)
    CHECK(row[j] == doctest::Approx(P(3, j)).epsilon(1e-8));

  SUBCASE("row sums to one and is symmetric across start points") {
    double sum = 0.0;
    for (double v : row) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    for (std::int64_t x = 0; x < 8; ++x) {
      auto rx = heat_kernel_row(ring, 1.0, x, 0.5, 1e-12);
      for (std::int64_t y = 0; y < 8; ++y) {
        auto ry = heat_kernel_row(ring, 1.0, y, 0.5, 1e-12);
        CHECK(rx[y] == doctest::Approx(ry[x]).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("chapman-kolmogorov on the ring") {
  auto ring = gen_zd_conductance(1, 8, ScalarLaw::uniform(0.5, 1.5), 3);
  auto r_full = heat_kernel_row(ring, 1.0, 0, 0.8, 1e-12);
  auto r_half = heat_kernel_row(ring, 1.0, 0, 0.4, 1e-12);
  // sum_y p_s(0,y) p_s(y,z) = p_{2s}(0,z)
  std::vector<double> conv(8, 0.0);
  for (std::int64_t y = 0; y < 8; ++y) {
    auto ry = heat_kernel_row(ring, 1.0, y, 0.4, 1e-12);
    for (std::int64_t z = 0; z < 8; ++z) conv[z] += r_half[y] * ry[z];
  }
  for (std::int64_t z = 0; z < 8; ++z)
    CHECK(conv[z] == doctest::Approx(r_full[z]).epsilon(1e-7));
}

TEST_CASE("semigroup apply: conservation, kernel consistency, dense oracle") {
  auto ring = gen_zd_conductance(1, 8, ScalarLaw::constant(1.0), 4);
  std::vector<double> ones(8, 1.0);
  auto r = semigroup_apply(ring, 1.0, 1.3, ones, 1e-10);
  for (double v : r) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));

  std::vector<double> ind(8, 0.0);
  ind[2] = 1.0;
  auto ri = semigroup_apply(ring, 1.0, 0.9, ind, 1e-12);
  auto row = heat_kernel_row(ring, 1.0, 2, 0.9, 1e-12);
  for (std::int64_t j = 0; j < 8; ++j)
    CHECK(ri[j] == doctest::Approx(row[j]).epsilon(1e-8));

  auto f = random_vec(8, 5);
  Eigen::MatrixXd P = oracle::expm(oracle::dense_generator(ring) * 0.6);
  Eigen::VectorXd fe(8);
  for (int i = 0; i < 8; ++i) fe(i) = f[i];
  Eigen::VectorXd pf = P * fe;
  auto rf = semigroup_apply(ring, 1.0, 0.6, f, 1e-12);
  for (int i = 0; i < 8; ++i)
    CHECK(rf[i] == doctest::Approx(pf(i)).epsilon(1e-8));

  SUBCASE("L2 contraction") {
    Generator gen(ring, 1.0);
    CHECK(gen.l2_norm(rf) <= gen.l2_norm(f) * (1.0 + 1e-12));
  }
  SUBCASE("semigroup property") {
    auto one_step = semigroup_apply(ring, 1.0, 1.0, f, 1e-10);
    auto two_step =
        semigroup_apply(ring, 1.0, 0.5,
                        semigroup_apply(ring, 1.0, 0.5, f, 1e-10), 1e-10);
    for (int i = 0; i < 8; ++i)
      CHECK(two_step[i] == doctest::Approx(one_step[i]).epsilon(2e-9));
  }
}

TEST_CASE("uniformization splits large horizons and rejects absurd ones") {
  auto ring = gen_zd_conductance(1, 16, ScalarLaw::constant(1.0), 6);
  UniformizationReport rep;
  auto row = heat_kernel_row(ring, 1.0 / 64.0, 0, 0.3, 1e-8, &rep);
  CHECK(rep.splits > 1);
  double sum = 0.0;
  for (double v : row) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  // over 64 splits needed -> explicit error
  CHECK_THROWS_AS(heat_kernel_row(ring, 1e-4, 0, 1.0, 1e-8), NumericalError);
}

TEST_CASE("generator operator identities") {
  auto e = gen_zd_conductance(2, 6, ScalarLaw::lognormal(0.0, 0.4), 7);
  Generator gen(e, 0.5);
  std::vector<double> out(e.n());

  SUBCASE("row sums vanish") {
    std::vector<double> ones(e.n(), 1.0);
    gen.apply(ones, out);
    for (double v : out) CHECK(std::abs(v) < 1e-10);
  }
  SUBCASE("self-adjoint and negative semidefinite in L2(mu^eps)") {
    for (int rep = 0; rep < 100; ++rep) {
      auto u = random_vec(e.n(), 100 + rep);
      auto v = random_vec(e.n(), 200 + rep);
      gen.apply(v, out);
      double uv = gen.l2_inner(u, out);
      std::vector<double> lu(e.n());
      gen.apply(u, lu);
      double vu = gen.l2_inner(v, lu);
      CHECK(uv == doctest::Approx(vu).epsilon(1e-12));
      gen.apply(u, out);
      CHECK(-gen.l2_inner(u, out) >= -1e-12);
    }
  }
}

TEST_CASE("resolvent solve") {
  SUBCASE("constants are harmonic: f == 1 gives u == 1/lambda") {
    auto ring = gen_zd_conductance(1, 12, ScalarLaw::uniform(0.5, 2.0), 8);
    std::vector<double> f(ring.n(), 1.0);
    auto u = resolvent_solve(ring, 1.0, 2.5, f, 1e-12);
    for (double v : u) CHECK(v == doctest::Approx(1.0 / 2.5).epsilon(1e-10));
  }
  SUBCASE("two-point pair closed form (2/3, 1/3)") {
    auto e = two_point_env(1.0);
    std::vector<double> f(e.n(), 0.0);
    f[0] = 1.0;
    auto u = resolvent_solve(e, 1.0, 1.0, f, 1e-13);
    CHECK(u[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(u[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  }
  SUBCASE("ring L=32 matches a dense LU oracle") {
    auto ring = gen_zd_conductance(1, 32, ScalarLaw::uniform(0.5, 1.5), 9);
    auto f = random_vec(32, 11);
    double lambda = 0.7, eps = 0.5;
    Eigen::MatrixXd A =
        lambda * Eigen::MatrixXd::Identity(32, 32) -
        oracle::dense_generator(ring, 1.0 / (eps * eps));
    Eigen::VectorXd fe(32);
    for (int i = 0; i < 32; ++i) fe(i) = f[i];
    Eigen::VectorXd ue = A.partialPivLu().solve(fe);
    walk::SolveReport rep;
    auto u = resolvent_solve(ring, eps, lambda, f, 1e-12, &rep);
    for (int i = 0; i < 32; ++i)
      CHECK(u[i] == doctest::Approx(ue(i)).epsilon(1e-8));
    CHECK(rep.iterations > 0);
    CHECK(rep.relative_residual <= 1e-12);
  }
  SUBCASE("resolvent identity against quadrature of the semigroup") {
    auto ring = gen_zd_conductance(1, 8, ScalarLaw::constant(1.0), 10);
    auto f = random_vec(8, 12);
    double lambda = 1.0;
    auto u = resolvent_solve(ring, 1.0, lambda, f, 1e-12);
    // u = int_0^inf e^{-lambda s} P_s f ds via fine trapezoid to s = 40.
    std::vector<double> acc(8, 0.0);
    double h = 0.02;
    for (int k = 0; k <= 2000; ++k) {
      double s = k * h;
      auto ps = semigroup_apply(ring, 1.0, s, f, 1e-10);
      double w = (k == 0 || k == 2000) ? 0.5 : 1.0;
      for (int i = 0; i < 8; ++i) acc[i] += w * h * std::exp(-lambda * s) * ps[i];
    }
    for (int i = 0; i < 8; ++i)
      CHECK(u[i] == doctest::Approx(acc[i]).epsilon(5e-4));
  }
}

TEST_CASE("dirichlet form") {
  auto e = two_point_env(1.0);
  SUBCASE("constants give zero") {
    std::vector<double> c(e.n(), 3.0);
    CHECK(dirichlet_form(e, 1.0, c, c) == 0.0);
  }
  SUBCASE("single edge value") {
    // d = 1, eps = 1: E(u,u) = eps^{d-2}/2 * 2 * c (u1-u0)^2 = 1.
    std::vector<double> u(e.n(), 0.0);
    u[1] = 1.0;
    CHECK(dirichlet_form(e, 1.0, u, u) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("identity with the generator inner product") {
    auto ring = gen_zd_conductance(1, 10, ScalarLaw::uniform(0.5, 2.0), 13);
    Generator gen(ring, 0.5);
    for (int rep = 0; rep < 20; ++rep) {
      auto u = random_vec(ring.n(), 300 + rep);
      std::vector<double> lu(ring.n());
      gen.apply(u, lu);
      double lhs = dirichlet_form(ring, 0.5, u, u);
      double rhs = -gen.l2_inner(u, lu);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
  }
}
