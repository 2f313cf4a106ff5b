#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sepsim/environment.hpp"
#include "sepsim/errors.hpp"

namespace sep::env {

void finalize_environment(Environment& e, std::vector<std::int32_t>& ei,
                          std::vector<std::int32_t>& ej,
                          std::vector<double>& er);

namespace {

VecD to_vec(const std::array<int, kMaxDim>& g, int d) {
  VecD v = zero_vec();
  for (int k = 0; k < d; ++k) v[k] = g[k];
  return v;
}

// Lexicographic cell index, first coordinate fastest.
std::int64_t cell_index(const std::array<int, kMaxDim>& g, int cells, int d) {
  std::int64_t idx = 0;
  for (int k = d - 1; k >= 0; --k) {
    int gk = ((g[k] % cells) + cells) % cells;
    idx = idx * cells + gk;
  }
  return idx;
}

struct CellIter {
  int d, cells;
  std::array<int, kMaxDim> g{};
  bool done = false;
  void next() {
    for (int k = 0; k < d; ++k) {
      if (++g[k] < cells) return;
      g[k] = 0;
    }
    done = true;
  }
};

// Canonical half of a symmetric edge template. The representative of the
// pair {(a,b,off), (b,a,-off)} is the one whose first nonzero offset
// component is positive; for zero offsets, the one with a < b. This keeps
// the natural "forward" edge of the cubic template, which fixes the draw
// order rates are assigned in.
std::vector<CrystalSpec::TemplateEdge> canonical_template(
    const CrystalSpec& spec, int d) {
  auto canonical = [&](CrystalSpec::TemplateEdge t) {
    int first_nonzero = 0;
    for (int c = 0; c < d; ++c) {
      if (t.offset[c] != 0) {
        first_nonzero = t.offset[c] > 0 ? 1 : -1;
        break;
      }
    }
    bool flip = first_nonzero < 0 || (first_nonzero == 0 && t.a > t.b);
    if (flip) {
      std::swap(t.a, t.b);
      for (int c = 0; c < d; ++c) t.offset[c] = -t.offset[c];
    }
    return t;
  };
  auto key = [&](const CrystalSpec::TemplateEdge& t) {
    std::array<int, 2 + kMaxDim> k{};
    k[0] = t.a;
    k[1] = t.b;
    for (int c = 0; c < d; ++c) k[2 + c] = t.offset[c];
    return k;
  };
  std::vector<CrystalSpec::TemplateEdge> out;
  std::vector<std::array<int, 2 + kMaxDim>> seen;
  for (const auto& t : spec.edges) {
    if (t.a < 0 || t.b < 0 ||
        t.a >= static_cast<int>(spec.cell_points.size()) ||
        t.b >= static_cast<int>(spec.cell_points.size()))
      throw ValidationError("crystal template references cell point outside A");
    if (t.a == t.b) {
      bool zero = true;
      for (int c = 0; c < d; ++c) zero = zero && t.offset[c] == 0;
      if (zero) throw ValidationError("crystal template contains a self loop");
    }
    CrystalSpec::TemplateEdge c = canonical(t);
    auto kc = key(c);
    if (std::find(seen.begin(), seen.end(), kc) == seen.end()) {
      seen.push_back(kc);
      out.push_back(c);
    }
  }
  if (out.empty()) throw ValidationError("crystal template has no edges");
  return out;
}

}  // namespace

CrystalSpec CrystalSpec::cubic(int d) {
  CrystalSpec s;
  s.action = GroupAction::cubic(d);
  s.cell_points = {zero_vec()};
  for (int k = 0; k < d; ++k) {
    TemplateEdge t;
    t.a = 0;
    t.b = 0;
    t.offset.fill(0);
    t.offset[k] = 1;
    s.edges.push_back(t);
  }
  return s;
}

CrystalSpec CrystalSpec::hexagonal() {
  CrystalSpec s;
  const double rt3 = std::sqrt(3.0);
  // Rows of the basis matrix: columns are v1 = (rt3, 0), v2 = (rt3/2, 3/2).
  std::array<double, 4> V = {rt3, rt3 / 2.0, 0.0, 1.5};
  s.action = GroupAction::lattice(2, V);
  VecD a = zero_vec();
  a[0] = rt3 / 2.0;
  a[1] = 0.5;
  s.cell_points = {zero_vec(), a};
  auto add = [&](int ox, int oy) {
    TemplateEdge t;
    t.a = 0;
    t.b = 1;
    t.offset.fill(0);
    t.offset[0] = ox;
    t.offset[1] = oy;
    s.edges.push_back(t);
  };
  add(0, 0);
  add(-1, 0);
  add(0, -1);
  return s;
}

Environment gen_crystal_conductance(const CrystalSpec& spec, int cells,
                                    const ScalarLaw& law, std::uint64_t seed) {
  const int d = spec.action.dim;
  if (cells < 2) throw ValidationError("gen_crystal_conductance: cells >= 2");
  if (spec.cell_points.empty())
    throw ValidationError("gen_crystal_conductance: empty cell point set");
  law.require_positive_support("conductance law");
  auto tmpl = canonical_template(spec, d);
  for (const auto& t : tmpl)
    for (int c = 0; c < d; ++c)
      if (std::abs(t.offset[c]) >= cells)
        throw ValidationError("gen_crystal_conductance: offset exceeds box");

  Environment e;
  e.geometry = spec.action;
  e.cells = cells;
  std::array<double, kMaxDim * kMaxDim> box{};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      box[i * d + j] = spec.action.V[i * kMaxDim + j] * cells;
  e.torus = Torus::from_box(d, std::span<const double>(box.data(), d * d));
  e.seed = seed;

  const int na = static_cast<int>(spec.cell_points.size());
  std::int64_t ncells = 1;
  for (int k = 0; k < d; ++k) ncells *= cells;
  e.coords.resize(ncells * na * d);
  for (CellIter it{d, cells}; !it.done; it.next()) {
    std::int64_t ci = cell_index(it.g, cells, d);
    VecD base = spec.action.apply_basis(to_vec(it.g, d));
    for (int a = 0; a < na; ++a) {
      std::int64_t pid = ci * na + a;
      for (int c = 0; c < d; ++c)
        e.coords[pid * d + c] = base[c] + spec.cell_points[a][c];
    }
  }

  rng::Stream rs(rng::seed_derive(seed, "env.rates", 0));
  std::vector<std::int32_t> ei, ej;
  std::vector<double> er;
  std::uint64_t draw = 0;
  for (CellIter it{d, cells}; !it.done; it.next()) {
    std::int64_t ci = cell_index(it.g, cells, d);
    for (const auto& t : tmpl) {
      std::array<int, kMaxDim> g2 = it.g;
      for (int c = 0; c < d; ++c) g2[c] += t.offset[c];
      std::int64_t cj = cell_index(g2, cells, d);
      std::int64_t pi = ci * na + t.a;
      std::int64_t pj = cj * na + t.b;
      double rate = law.sample(rs, draw++);
      if (pi == pj) continue;  // wrapped onto itself; cannot happen for cells>=2
      ei.push_back(static_cast<std::int32_t>(pi));
      ej.push_back(static_cast<std::int32_t>(pj));
      er.push_back(rate);
    }
  }

  e.intensity = static_cast<double>(na) / std::abs(spec.action.det);
  std::ostringstream tag;
  tag << "crystal_conductance[d=" << d << ",cells=" << cells
      << ",law=" << law.describe() << "]";
  e.model_tag = tag.str();
  e.ambient = AmbientLattice::Other;
  finalize_environment(e, ei, ej, er);
  return e;
}

Environment gen_zd_conductance(int d, int L, const ScalarLaw& law,
                               std::uint64_t seed) {
  if (L < 2)
    throw ValidationError("gen_zd_conductance: L >= 2 required (torus edges)");
  Environment e = gen_crystal_conductance(CrystalSpec::cubic(d), L, law, seed);
  std::ostringstream tag;
  tag << "zd_conductance[d=" << d << ",L=" << L << ",law=" << law.describe()
      << "]";
  e.model_tag = tag.str();
  e.ambient = d == 1   ? AmbientLattice::Z1
              : d == 2 ? AmbientLattice::Z2
              : d == 3 ? AmbientLattice::Z3
                       : AmbientLattice::Other;
  return e;
}

namespace {

// Surface area of the unit sphere in R^d.
double sphere_area(int d) {
  switch (d) {
    case 1:
      return 2.0;
    case 2:
      return 2.0 * M_PI;
    case 3:
      return 4.0 * M_PI;
    default:
      return 2.0 * std::pow(M_PI, d / 2.0) / std::tgamma(d / 2.0);
  }
}

// int_R^inf r^{d-1} e^{-r} dr = (d-1)! e^{-R} sum_{k<d} R^k / k!.
double envelope_tail(int d, double R) {
  double fact = 1.0;
  for (int k = 2; k < d; ++k) fact *= k;
  double s = 0.0, term = 1.0;
  for (int k = 0; k < d; ++k) {
    s += term;
    term *= R / static_cast<double>(k + 1);
  }
  return fact * std::exp(-R) * s;
}

}  // namespace

Environment gen_mott_ppp(int d, double L, double intensity,
                         const ScalarLaw& energy_law, double r_max,
                         double rate_floor, std::uint64_t seed) {
  if (d < 1 || d > kMaxDim) throw ValidationError("gen_mott_ppp: bad dimension");
  if (!(L > 0)) throw ValidationError("gen_mott_ppp: L > 0 required");
  if (!(intensity > 0)) throw ValidationError("gen_mott_ppp: intensity > 0");
  if (!(r_max > 0)) throw ValidationError("gen_mott_ppp: R_max > 0");
  if (r_max > L / 2.0)
    throw ValidationError("gen_mott_ppp: R_max must not exceed L/2");
  if (rate_floor < 0) throw ValidationError("gen_mott_ppp: rate_floor >= 0");

  const int kMaxRetries = 8;
  for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
    rng::Stream rc(rng::seed_derive(seed, "env.count", attempt));
    rng::Stream rp(rng::seed_derive(seed, "env.points", attempt));
    rng::Stream re(rng::seed_derive(seed, "env.energy", attempt));

    double mean = intensity * std::pow(L, d);
    std::int64_t npts = rc.poisson(mean);
    if (npts < 2) continue;  // resample; reported via attempt count

    Environment e;
    e.geometry = GroupAction::continuum(d);
    e.cells = 0;
    e.box_side = L;
    std::array<double, kMaxDim * kMaxDim> box{};
    for (int k = 0; k < d; ++k) box[k * d + k] = L;
    e.torus = Torus::from_box(d, std::span<const double>(box.data(), d * d));
    e.seed = seed;
    e.coords.resize(npts * d);
    for (std::int64_t i = 0; i < npts; ++i)
      for (int c = 0; c < d; ++c) e.coords[i * d + c] = rp.uniform(0.0, L);
    std::vector<double> energy(npts);
    for (std::int64_t i = 0; i < npts; ++i) energy[i] = energy_law.sample(re, i);

    // Pair search within r_max. Cell lists when they pay off.
    std::vector<std::int32_t> ei, ej;
    std::vector<double> er;
    auto consider = [&](std::int64_t i, std::int64_t j) {
      VecD dx = zero_vec();
      for (int c = 0; c < d; ++c)
        dx[c] = e.coords[j * d + c] - e.coords[i * d + c];
      e.torus.min_image(dx);
      double dist = std::sqrt(norm2(dx, d));
      if (dist > r_max || dist == 0.0) return;
      double rate = std::exp(-dist - std::abs(energy[i]) - std::abs(energy[j]) -
                             std::abs(energy[i] - energy[j]));
      if (rate < rate_floor) return;
      ei.push_back(static_cast<std::int32_t>(i));
      ej.push_back(static_cast<std::int32_t>(j));
      er.push_back(rate);
    };
    int bins = static_cast<int>(std::floor(L / r_max));
    if (bins >= 3 && npts > 64) {
      double bin_w = L / bins;
      std::int64_t nbins = 1;
      for (int c = 0; c < d; ++c) nbins *= bins;
      std::vector<std::vector<std::int32_t>> cell(nbins);
      auto bin_of = [&](std::int64_t i) {
        std::int64_t b = 0;
        for (int c = d - 1; c >= 0; --c) {
          int bc = static_cast<int>(e.coords[i * d + c] / bin_w);
          if (bc >= bins) bc = bins - 1;
          b = b * bins + bc;
        }
        return b;
      };
      for (std::int64_t i = 0; i < npts; ++i)
        cell[bin_of(i)].push_back(static_cast<std::int32_t>(i));
      // Enumerate each unordered bin pair once via the half-neighborhood.
      std::vector<std::array<int, kMaxDim>> half;
      std::array<int, kMaxDim> off{};
      std::function<void(int)> gen = [&](int k) {
        if (k == d) {
          bool positive = false, zero = true;
          for (int c = 0; c < d; ++c) {
            if (off[c] != 0) zero = false;
            if (off[c] > 0) {
              positive = true;
              break;
            }
            if (off[c] < 0) break;
          }
          if (zero || positive) half.push_back(off);
          return;
        }
        for (int v = -1; v <= 1; ++v) {
          off[k] = v;
          gen(k + 1);
        }
      };
      gen(0);
      std::array<int, kMaxDim> bc{};
      std::function<void(int)> walk = [&](int k) {
        if (k == d) {
          std::int64_t b = 0;
          for (int c = d - 1; c >= 0; --c) b = b * bins + bc[c];
          for (const auto& o : half) {
            std::array<int, kMaxDim> nb = bc;
            bool zero = true;
            for (int c = 0; c < d; ++c) {
              nb[c] = ((nb[c] + o[c]) % bins + bins) % bins;
              if (o[c] != 0) zero = false;
            }
            std::int64_t b2 = 0;
            for (int c = d - 1; c >= 0; --c) b2 = b2 * bins + nb[c];
            if (zero) {
              const auto& v = cell[b];
              for (std::size_t x = 0; x < v.size(); ++x)
                for (std::size_t y = x + 1; y < v.size(); ++y)
                  consider(v[x], v[y]);
            } else if (b2 != b) {
              for (std::int32_t x : cell[b])
                for (std::int32_t y : cell[b2]) consider(x, y);
            }
          }
          return;
        }
        for (bc[k] = 0; bc[k] < bins; ++bc[k]) walk(k + 1);
        bc[k] = 0;
      };
      walk(0);
    } else {
      for (std::int64_t i = 0; i < npts; ++i)
        for (std::int64_t j = i + 1; j < npts; ++j) consider(i, j);
    }

    e.intensity = static_cast<double>(npts) / std::pow(L, d);
    e.truncation.truncated = true;
    e.truncation.r_max = r_max;
    e.truncation.rate_floor = rate_floor;
    e.truncation.dropped_mass_bound =
        intensity * sphere_area(d) * envelope_tail(d, r_max);
    std::ostringstream tag;
    tag << "mott_ppp[d=" << d << ",L=" << L << ",m=" << intensity
        << ",energy=" << energy_law.describe() << ",Rmax=" << r_max << "]";
    e.model_tag = tag.str();
    e.ambient = AmbientLattice::Other;
    e.generation_retries = attempt;
    try {
      finalize_environment(e, ei, ej, er);
    } catch (const NumericalError&) {
      continue;  // e.g. every pair below the floor; retry with a fresh sample
    }
    return e;
  }
  throw NumericalError(
      "gen_mott_ppp: failed to draw a usable sample after retries");
}

Environment gen_percolation_cluster(PercLattice lattice, int d, int cells,
                                    double p, std::uint64_t seed) {
  if (!(p > 0.0 && p <= 1.0))
    throw ValidationError("gen_percolation_cluster: p in (0,1] required");
  CrystalSpec spec =
      lattice == PercLattice::Zd ? CrystalSpec::cubic(d) : CrystalSpec::hexagonal();
  if (lattice == PercLattice::Hexagonal) d = 2;
  if (cells < 2) throw ValidationError("gen_percolation_cluster: cells >= 2");

  // Build the full lattice with unit rates, then keep open sites.
  Environment full = gen_crystal_conductance(spec, cells, ScalarLaw::constant(1.0),
                                             seed);
  rng::Stream ro(rng::seed_derive(seed, "env.open", 0));
  std::vector<char> open(full.n());
  std::int64_t nopen = 0;
  for (std::int64_t i = 0; i < full.n(); ++i) {
    open[i] = p >= 1.0 || ro.u01() < p;
    nopen += open[i];
  }
  if (nopen == 0)
    throw NumericalError("gen_percolation_cluster: no open site on the torus");

  std::vector<std::int32_t> ei, ej;
  std::vector<double> er;
  for (std::int64_t k = 0; k < full.graph.num_edges(); ++k) {
    std::int32_t a = full.graph.e_i[k], b = full.graph.e_j[k];
    if (open[a] && open[b]) {
      ei.push_back(a);
      ej.push_back(b);
      er.push_back(1.0);
    }
  }
  if (er.empty())
    throw NumericalError("gen_percolation_cluster: open set has no edges");

  Environment e;
  e.geometry = full.geometry;
  e.cells = cells;
  e.torus = full.torus;
  e.seed = seed;
  e.coords = full.coords;
  std::ostringstream tag;
  tag << "percolation_cluster["
      << (lattice == PercLattice::Zd ? "zd" : "hexagonal") << ",d=" << d
      << ",cells=" << cells << ",p=" << p << "]";
  e.model_tag = tag.str();
  e.ambient = lattice == PercLattice::Hexagonal ? AmbientLattice::Hexagonal
              : d == 1                          ? AmbientLattice::Z1
              : d == 2                          ? AmbientLattice::Z2
              : d == 3                          ? AmbientLattice::Z3
                                                : AmbientLattice::Other;
  // finalize keeps the largest connected component of the open subgraph;
  // closed sites are isolated and dropped with it.
  finalize_environment(e, ei, ej, er);
  e.restricted_to_largest = true;
  double volume = 1.0;
  for (int k = 0; k < d; ++k) volume *= cells;
  volume *= std::abs(e.geometry.det);
  e.intensity = static_cast<double>(e.n()) / volume;
  return e;
}

}  // namespace sep::env
