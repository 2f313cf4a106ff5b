#include "sepsim/environment.hpp"

#include <algorithm>
#include <cmath>

#include "sepsim/errors.hpp"
#include "sepsim/test_function.hpp"

namespace sep::env {

double bond_percolation_threshold(AmbientLattice which) {
  switch (which) {
    case AmbientLattice::Z1:
      return 1.0;
    case AmbientLattice::Z2:
      return 0.5;
    case AmbientLattice::Z3:
      return 0.2488126;
    case AmbientLattice::Hexagonal:
      return 0.652704;  // 1 - 2 sin(pi/18)
    case AmbientLattice::Other:
      return 0.0;
  }
  return 0.0;
}

VecD Environment::point(std::int64_t i) const {
  VecD x = zero_vec();
  for (int k = 0; k < dim(); ++k) x[k] = coords[i * dim() + k];
  return x;
}

VecD Environment::centered_point(std::int64_t i) const {
  return torus.centered(point(i));
}

double Environment::max_exit_rate() const {
  double m = 0.0;
  for (double c : graph.exit_rate) m = std::max(m, c);
  return m;
}

double Environment::max_edge_rate() const {
  double m = 0.0;
  for (double c : graph.e_rate) m = std::max(m, c);
  return m;
}

VecD Environment::entry_disp(std::int64_t k) const {
  VecD d = zero_vec();
  for (int c = 0; c < dim(); ++c) d[c] = graph.disp[k * dim() + c];
  return d;
}

void Environment::check_invariants() const {
  if (n() == 0) throw NumericalError("environment: empty point set");
  for (std::int64_t e = 0; e < graph.num_edges(); ++e) {
    if (graph.e_i[e] == graph.e_j[e])
      throw NumericalError("environment: self rate stored");
    if (!(graph.e_rate[e] > 0.0) || !std::isfinite(graph.e_rate[e]))
      throw NumericalError("environment: nonpositive or non-finite edge rate");
  }
  for (std::int64_t i = 0; i < n(); ++i) {
    double c = graph.exit_rate[i];
    if (!(c > 0.0) || !std::isfinite(c))
      throw NumericalError("environment: exit rate not in (0, inf) at point " +
                           std::to_string(i));
  }
}

namespace detail {

// Path-compressed union-find, weighted by size.
struct UnionFind {
  std::vector<std::int32_t> parent;
  std::vector<std::int32_t> size;
  explicit UnionFind(std::int64_t n)
      : parent(n), size(n, 1) {
    for (std::int64_t i = 0; i < n; ++i) parent[i] = static_cast<std::int32_t>(i);
  }
  std::int32_t find(std::int32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size[a] < size[b]) std::swap(a, b);
    parent[b] = a;
    size[a] += size[b];
  }
};

}  // namespace detail

// Shared tail of every generator: merge duplicate pairs, drop zero rates,
// restrict to the largest rate-graph component when disconnected, build CSR.
void finalize_environment(Environment& e,
                          std::vector<std::int32_t>& ei,
                          std::vector<std::int32_t>& ej,
                          std::vector<double>& er) {
  const int d = e.dim();
  std::int64_t n = static_cast<std::int64_t>(e.coords.size()) / d;

  // Canonicalize (min, max) and sort; merge parallel edges by summing.
  std::vector<std::int64_t> order(er.size());
  for (std::size_t k = 0; k < er.size(); ++k) {
    if (ei[k] == ej[k]) throw ValidationError("environment: self edge");
    if (ei[k] > ej[k]) std::swap(ei[k], ej[k]);
    order[k] = static_cast<std::int64_t>(k);
  }
  std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    if (ei[a] != ei[b]) return ei[a] < ei[b];
    if (ej[a] != ej[b]) return ej[a] < ej[b];
    return a < b;
  });
  std::vector<std::int32_t> mi, mj;
  std::vector<double> mr;
  mi.reserve(er.size());
  mj.reserve(er.size());
  mr.reserve(er.size());
  for (std::int64_t k : order) {
    if (er[k] < 0.0 || !std::isfinite(er[k]))
      throw ValidationError("environment: invalid rate drawn");
    if (er[k] == 0.0) continue;
    if (!mi.empty() && mi.back() == ei[k] && mj.back() == ej[k]) {
      mr.back() += er[k];
    } else {
      mi.push_back(ei[k]);
      mj.push_back(ej[k]);
      mr.push_back(er[k]);
    }
  }

  // Connectivity of the rate graph. Tie for the largest component is broken
  // by the smallest minimal point index.
  detail::UnionFind uf(n);
  for (std::size_t k = 0; k < mr.size(); ++k) uf.unite(mi[k], mj[k]);
  std::int32_t best_root = -1;
  std::int64_t best_size = -1;
  {
    std::vector<std::int64_t> comp_size(n, 0);
    std::vector<std::int32_t> comp_min(n, -1);
    for (std::int64_t i = 0; i < n; ++i) {
      std::int32_t r = uf.find(static_cast<std::int32_t>(i));
      comp_size[r]++;
      if (comp_min[r] < 0) comp_min[r] = static_cast<std::int32_t>(i);
    }
    for (std::int64_t i = 0; i < n; ++i) {
      if (comp_size[i] == 0) continue;
      if (comp_size[i] > best_size ||
          (comp_size[i] == best_size && comp_min[i] < comp_min[best_root])) {
        best_size = comp_size[i];
        best_root = static_cast<std::int32_t>(i);
      }
    }
  }

  bool disconnected = best_size < n;
  if (disconnected) {
    // Keep the largest component, relabel points in index order.
    std::vector<std::int32_t> newid(n, -1);
    std::vector<double> coords2;
    coords2.reserve(best_size * d);
    std::int32_t next = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      if (uf.find(static_cast<std::int32_t>(i)) == uf.find(best_root)) {
        newid[i] = next++;
        for (int k = 0; k < d; ++k) coords2.push_back(e.coords[i * d + k]);
      }
    }
    std::vector<std::int32_t> fi, fj;
    std::vector<double> fr;
    for (std::size_t k = 0; k < mr.size(); ++k) {
      if (newid[mi[k]] >= 0 && newid[mj[k]] >= 0) {
        fi.push_back(newid[mi[k]]);
        fj.push_back(newid[mj[k]]);
        fr.push_back(mr[k]);
      }
    }
    e.coords = std::move(coords2);
    mi = std::move(fi);
    mj = std::move(fj);
    mr = std::move(fr);
    n = best_size;
    e.connected = true;
    e.restricted_to_largest = true;
  } else {
    e.connected = true;
    e.restricted_to_largest = false;
  }

  if (n == 0 || mr.empty())
    throw NumericalError("environment: no points with positive exit rate");

  RateGraph& g = e.graph;
  g.n = n;
  g.e_i = mi;
  g.e_j = mj;
  g.e_rate = mr;

  std::vector<std::int64_t> deg(n, 0);
  for (std::size_t k = 0; k < mr.size(); ++k) {
    deg[mi[k]]++;
    deg[mj[k]]++;
  }
  g.row_ptr.assign(n + 1, 0);
  for (std::int64_t i = 0; i < n; ++i) g.row_ptr[i + 1] = g.row_ptr[i] + deg[i];
  std::int64_t nnz = g.row_ptr[n];
  g.col.assign(nnz, 0);
  g.rate.assign(nnz, 0.0);
  g.disp.assign(nnz * d, 0.0);
  std::vector<std::int64_t> cursor(g.row_ptr.begin(), g.row_ptr.end() - 1);
  auto put = [&](std::int32_t from, std::int32_t to, double rate) {
    std::int64_t k = cursor[from]++;
    g.col[k] = to;
    g.rate[k] = rate;
    VecD dx = zero_vec();
    for (int c = 0; c < d; ++c)
      dx[c] = e.coords[static_cast<std::int64_t>(to) * d + c] -
              e.coords[static_cast<std::int64_t>(from) * d + c];
    e.torus.min_image(dx);
    for (int c = 0; c < d; ++c) g.disp[k * d + c] = dx[c];
  };
  for (std::size_t k = 0; k < mr.size(); ++k) {
    put(mi[k], mj[k], mr[k]);
    put(mj[k], mi[k], mr[k]);
  }
  g.exit_rate.assign(n, 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    double c = 0.0;
    for (std::int64_t k = g.row_ptr[i]; k < g.row_ptr[i + 1]; ++k)
      c += g.rate[k];
    g.exit_rate[i] = c;
  }
  e.check_invariants();
}

double palm_site_average(const Environment& e, std::span<const double> f) {
  if (e.n() == 0) throw ValidationError("palm_site_average: empty environment");
  if (static_cast<std::int64_t>(f.size()) != e.n())
    throw ValidationError("palm_site_average: observable size mismatch");
  double s = 0.0;
  for (double v : f) s += v;
  return s / static_cast<double>(e.n());
}

double palm_site_average(const Environment& e,
                         const std::function<double(std::int64_t)>& f) {
  if (e.n() == 0) throw ValidationError("palm_site_average: empty environment");
  double s = 0.0;
  for (std::int64_t i = 0; i < e.n(); ++i) s += f(i);
  return s / static_cast<double>(e.n());
}

double moment_check(const Environment& e, int k) {
  if (k != 0 && k != 2)
    throw ValidationError("moment_check: k must be 0 or 2");
  const RateGraph& g = e.graph;
  const int d = e.dim();
  return palm_site_average(e, [&](std::int64_t i) {
    double s = 0.0;
    for (std::int64_t p = g.row_ptr[i]; p < g.row_ptr[i + 1]; ++p) {
      if (k == 0) {
        s += g.rate[p];
      } else {
        double r2 = 0.0;
        for (int c = 0; c < d; ++c) {
          double v = g.disp[p * d + c];
          r2 += v * v;
        }
        s += g.rate[p] * r2;
      }
    }
    return s;
  });
}

ErgodicCheckResult ergodic_average_check(const Environment& e,
                                         std::span<const double> f,
                                         const hydro::TestFunction& phi,
                                         double eps) {
  if (static_cast<std::int64_t>(f.size()) != e.n())
    throw ValidationError("ergodic_average_check: observable size mismatch");
  double half = e.torus.half_min_extent();
  if (!(eps * half >= phi.support_radius())) {
    double needed = phi.support_radius() / (eps * half);
    throw ValidationError(
        "ergodic_average_check: support violation, eps*L/2 = " +
        std::to_string(eps * half) + " < r_supp = " +
        std::to_string(phi.support_radius()) + "; need the box side about " +
        std::to_string(needed) + " times larger");
  }
  const int d = e.dim();
  double lhs = 0.0;
  for (std::int64_t i = 0; i < e.n(); ++i) {
    VecD x = e.centered_point(i);
    for (int c = 0; c < d; ++c) x[c] *= eps;
    double pv = phi.value(x);
    if (pv != 0.0) lhs += pv * f[i];
  }
  lhs *= std::pow(eps, d);
  double rhs = e.intensity * palm_site_average(e, f) * phi.integral();
  return {lhs, rhs, std::abs(lhs - rhs)};
}

}  // namespace sep::env
