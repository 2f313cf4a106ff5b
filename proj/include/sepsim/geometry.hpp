#pragma once

#include <array>
#include <span>

#include "sepsim/linalg.hpp"

namespace sep::env {

enum class GroupKind { Continuum, Lattice };

// Group G acting on R^d by x -> x + V g. For the lattice kind the columns of
// V span the fundamental cell Delta (half-open, ties broken toward 0 with a
// 1e-12 face tolerance).
struct GroupAction {
  int dim = 0;
  GroupKind kind = GroupKind::Lattice;
  std::array<double, kMaxDim * kMaxDim> V{};     // row-major
  std::array<double, kMaxDim * kMaxDim> Vinv{};  // row-major
  double det = 0.0;

  static GroupAction lattice(int d, std::span<const double> basis_rowmajor);
  static GroupAction cubic(int d);      // lattice, V = I
  static GroupAction continuum(int d);  // G = R^d, V = I

  VecD apply_basis(const VecD& g) const;   // V g
  VecD apply_inverse(const VecD& x) const; // V^{-1} x
};

struct OrbitDecomposition {
  VecD g{};                        // integer-valued for the lattice kind
  std::array<long, kMaxDim> g_int{};
  VecD beta{};
  bool integral = true;            // false on the continuum branch
};

// x = V g + beta with g integer and beta in Delta (lattice kind). For the
// continuum kind g = V^{-1} x and beta = 0 (degenerate branch).
OrbitDecomposition orbit_decompose(const VecD& x, const GroupAction& action);

// Periodic box with period lattice given by the columns of B (row-major
// storage). Handles skewed (crystal) cells; minimum images are exact for
// displacements shorter than the cell inradius.
struct Torus {
  int dim = 0;
  std::array<double, kMaxDim * kMaxDim> B{};
  std::array<double, kMaxDim * kMaxDim> Binv{};
  bool diagonal = true;

  static Torus from_box(int d, std::span<const double> box_rowmajor);

  void wrap(VecD& x) const;              // representative with fractional [0,1)
  void min_image(VecD& dx) const;        // shortest periodic displacement
  VecD centered(const VecD& x) const;    // representative with fractional [-1/2,1/2)
  double distance(const VecD& a, const VecD& b) const;
  double half_min_extent() const;        // inradius of the fundamental cell
  double diameter() const;               // cell circumdiameter bound
};

}  // namespace sep::env
