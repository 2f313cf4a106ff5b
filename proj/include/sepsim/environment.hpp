#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sepsim/geometry.hpp"
#include "sepsim/scalar_law.hpp"

namespace sep::hydro {
class TestFunction;
}

namespace sep::env {

// Ambient lattice class, used to pick the default clock slab width from the
// bond percolation threshold of the underlying graph.
enum class AmbientLattice { Z1, Z2, Z3, Hexagonal, Other };

double bond_percolation_threshold(AmbientLattice which);

// Symmetric rate graph in CSR form plus the canonical undirected edge list
// (i < j, sorted). `disp` holds the minimum-image displacement x_col - x_row
// per directed entry.
struct RateGraph {
  std::int64_t n = 0;
  std::vector<std::int64_t> row_ptr;
  std::vector<std::int32_t> col;
  std::vector<double> rate;
  std::vector<double> disp;       // 2E * dim
  std::vector<double> exit_rate;  // c_i
  std::vector<std::int32_t> e_i, e_j;
  std::vector<double> e_rate;

  std::int64_t num_edges() const { return static_cast<std::int64_t>(e_rate.size()); }
};

struct TruncationInfo {
  bool truncated = false;
  double r_max = 0.0;
  double rate_floor = 0.0;
  double dropped_mass_bound = 0.0;  // tail bound of the rate envelope
};

// Finite periodized sample of the marked point process: point set, symmetric
// rates, group geometry and intensity. Immutable after construction and safe
// for concurrent reads.
struct Environment {
  GroupAction geometry;
  int cells = 0;          // cells per side (lattice models); 0 for continuum
  double box_side = 0.0;  // torus side (continuum models)
  Torus torus;

  std::vector<double> coords;  // n * dim
  RateGraph graph;

  double intensity = 0.0;
  std::string model_tag;
  std::uint64_t seed = 0;
  AmbientLattice ambient = AmbientLattice::Other;
  bool connected = true;
  bool restricted_to_largest = false;
  int generation_retries = 0;
  TruncationInfo truncation;

  int dim() const { return geometry.dim; }
  std::int64_t n() const { return graph.n; }
  VecD point(std::int64_t i) const;
  VecD centered_point(std::int64_t i) const;  // representative around 0
  double exit_rate(std::int64_t i) const { return graph.exit_rate[i]; }
  double max_exit_rate() const;
  double max_edge_rate() const;

  // Displacement of the directed CSR entry k out of point i (min image).
  VecD entry_disp(std::int64_t k) const;

  void check_invariants() const;  // symmetry, no self rates, 0 < c_i < inf
};

// --- generators -----------------------------------------------------------

struct CrystalSpec {
  GroupAction action;  // lattice kind
  std::vector<VecD> cell_points;
  struct TemplateEdge {
    int a = 0, b = 0;
    std::array<int, kMaxDim> offset{};
  };
  std::vector<TemplateEdge> edges;

  static CrystalSpec cubic(int d);
  // Honeycomb with unit nearest-neighbor distance: basis
  // v1 = (sqrt(3), 0), v2 = (sqrt(3)/2, 3/2), cell points {0, a},
  // a = (sqrt(3)/2, 1/2), three template edges per cell.
  static CrystalSpec hexagonal();
};

Environment gen_zd_conductance(int d, int L, const ScalarLaw& law,
                               std::uint64_t seed);

Environment gen_crystal_conductance(const CrystalSpec& spec, int cells,
                                    const ScalarLaw& law, std::uint64_t seed);

Environment gen_mott_ppp(int d, double L, double intensity,
                         const ScalarLaw& energy_law, double r_max,
                         double rate_floor, std::uint64_t seed);

enum class PercLattice { Zd, Hexagonal };

Environment gen_percolation_cluster(PercLattice lattice, int d, int cells,
                                    double p, std::uint64_t seed);

// --- Palm / ergodic diagnostics -------------------------------------------

// Site average (1/N) sum_i f(i): the finite-volume Palm estimator.
double palm_site_average(const Environment& e, std::span<const double> f);
double palm_site_average(const Environment& e,
                         const std::function<double(std::int64_t)>& f);

// lambda_k estimate: site average of sum_j c_ij dist(i,j)^k, k in {0, 2}.
double moment_check(const Environment& e, int k);

struct ErgodicCheckResult {
  double lhs = 0.0, rhs = 0.0, gap = 0.0;
};

ErgodicCheckResult ergodic_average_check(const Environment& e,
                                         std::span<const double> f,
                                         const hydro::TestFunction& phi,
                                         double eps);

}  // namespace sep::env
