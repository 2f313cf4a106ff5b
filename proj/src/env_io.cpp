#include "sepsim/env_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sepsim/errors.hpp"

namespace sep::env {

namespace {

constexpr const char* kMagic = "sepsim-environment v1";

std::string hexf(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hexf(const std::string& tok) {
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str())
    throw ValidationError("environment file: bad float token '" + tok + "'");
  return v;
}

std::string ambient_name(AmbientLattice a) {
  switch (a) {
    case AmbientLattice::Z1: return "z1";
    case AmbientLattice::Z2: return "z2";
    case AmbientLattice::Z3: return "z3";
    case AmbientLattice::Hexagonal: return "hexagonal";
    case AmbientLattice::Other: return "other";
  }
  return "other";
}

AmbientLattice ambient_from(const std::string& s) {
  if (s == "z1") return AmbientLattice::Z1;
  if (s == "z2") return AmbientLattice::Z2;
  if (s == "z3") return AmbientLattice::Z3;
  if (s == "hexagonal") return AmbientLattice::Hexagonal;
  return AmbientLattice::Other;
}

}  // namespace

void save_environment(const Environment& e, std::ostream& os) {
  const int d = e.dim();
  os << kMagic << "\n";
  os << "model " << e.model_tag << "\n";
  os << "d " << d << "\n";
  os << "kind "
     << (e.geometry.kind == GroupKind::Lattice ? "lattice" : "continuum")
     << "\n";
  os << "cells " << e.cells << "\n";
  os << "box_side " << hexf(e.box_side) << "\n";
  os << "V";
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) os << " " << hexf(e.geometry.V[i * kMaxDim + j]);
  os << "\n";
  os << "m " << hexf(e.intensity) << "\n";
  os << "seed " << e.seed << "\n";
  os << "ambient " << ambient_name(e.ambient) << "\n";
  os << "flags connected=" << (e.connected ? 1 : 0)
     << " restricted=" << (e.restricted_to_largest ? 1 : 0)
     << " retries=" << e.generation_retries << "\n";
  if (e.truncation.truncated) {
    os << "truncation " << hexf(e.truncation.r_max) << " "
       << hexf(e.truncation.rate_floor) << " "
       << hexf(e.truncation.dropped_mass_bound) << "\n";
  }
  os << "points " << e.n() << "\n";
  for (std::int64_t i = 0; i < e.n(); ++i) {
    os << i;
    for (int c = 0; c < d; ++c) os << " " << hexf(e.coords[i * d + c]);
    os << "\n";
  }
  os << "edges " << e.graph.num_edges() << "\n";
  for (std::int64_t k = 0; k < e.graph.num_edges(); ++k)
    os << e.graph.e_i[k] << " " << e.graph.e_j[k] << " "
       << hexf(e.graph.e_rate[k]) << "\n";
  os << "end\n";
}

void save_environment_file(const Environment& e, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot open for write: " + path);
  save_environment(e, f);
}

std::string environment_to_string(const Environment& e) {
  std::ostringstream os;
  save_environment(e, os);
  return os.str();
}

void finalize_environment(Environment& e, std::vector<std::int32_t>& ei,
                          std::vector<std::int32_t>& ej,
                          std::vector<double>& er);

Environment load_environment(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kMagic)
    throw ValidationError("environment file: bad magic header");
  Environment e;
  int d = 0;
  std::string kind = "lattice";
  std::vector<double> V;
  std::int64_t npts = 0, nedges = 0;
  std::vector<std::int32_t> ei, ej;
  std::vector<double> er;
  bool restricted = false;

  auto next_line = [&](const char* what) {
    if (!std::getline(is, line))
      throw ValidationError(std::string("environment file: truncated at ") +
                            what);
    return std::istringstream(line);
  };

  {
    auto ls = next_line("model");
    std::string key;
    ls >> key;
    if (key != "model") throw ValidationError("environment file: want model");
    std::getline(ls, e.model_tag);
    if (!e.model_tag.empty() && e.model_tag.front() == ' ')
      e.model_tag.erase(e.model_tag.begin());
  }
  {
    auto ls = next_line("d");
    std::string key;
    ls >> key >> d;
    if (key != "d" || d < 1 || d > kMaxDim)
      throw ValidationError("environment file: bad dimension");
  }
  {
    auto ls = next_line("kind");
    std::string key;
    ls >> key >> kind;
  }
  {
    auto ls = next_line("cells");
    std::string key;
    ls >> key >> e.cells;
  }
  {
    auto ls = next_line("box_side");
    std::string key, tok;
    ls >> key >> tok;
    e.box_side = parse_hexf(tok);
  }
  {
    auto ls = next_line("V");
    std::string key, tok;
    ls >> key;
    while (ls >> tok) V.push_back(parse_hexf(tok));
    if (static_cast<int>(V.size()) != d * d)
      throw ValidationError("environment file: basis size mismatch");
  }
  {
    auto ls = next_line("m");
    std::string key, tok;
    ls >> key >> tok;
    e.intensity = parse_hexf(tok);
  }
  {
    auto ls = next_line("seed");
    std::string key;
    ls >> key >> e.seed;
  }
  {
    auto ls = next_line("ambient");
    std::string key, amb;
    ls >> key >> amb;
    e.ambient = ambient_from(amb);
  }
  {
    auto ls = next_line("flags");
    std::string key, tok;
    ls >> key;
    while (ls >> tok) {
      if (tok.rfind("restricted=", 0) == 0)
        restricted = tok.back() == '1';
      else if (tok.rfind("retries=", 0) == 0)
        e.generation_retries = std::atoi(tok.c_str() + 8);
    }
  }
  // optional truncation, then points
  {
    auto ls = next_line("truncation/points");
    std::string key;
    ls >> key;
    if (key == "truncation") {
      std::string t1, t2, t3;
      ls >> t1 >> t2 >> t3;
      e.truncation.truncated = true;
      e.truncation.r_max = parse_hexf(t1);
      e.truncation.rate_floor = parse_hexf(t2);
      e.truncation.dropped_mass_bound = parse_hexf(t3);
      auto ls2 = next_line("points");
      ls2 >> key >> npts;
    } else {
      ls >> npts;
    }
    if (key != "points")
      throw ValidationError("environment file: want points section");
  }

  if (kind == "lattice") {
    e.geometry = GroupAction::lattice(d, V);
  } else {
    e.geometry = GroupAction::continuum(d);
  }
  std::array<double, kMaxDim * kMaxDim> box{};
  if (kind == "lattice") {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) box[i * d + j] = V[i * d + j] * e.cells;
  } else {
    for (int k = 0; k < d; ++k) box[k * d + k] = e.box_side;
  }
  e.torus = Torus::from_box(d, std::span<const double>(box.data(), d * d));

  e.coords.resize(npts * d);
  for (std::int64_t i = 0; i < npts; ++i) {
    auto ls = next_line("point row");
    std::int64_t idx;
    ls >> idx;
    std::string tok;
    for (int c = 0; c < d; ++c) {
      ls >> tok;
      e.coords[i * d + c] = parse_hexf(tok);
    }
  }
  {
    auto ls = next_line("edges");
    std::string key;
    ls >> key >> nedges;
    if (key != "edges")
      throw ValidationError("environment file: want edges section");
  }
  ei.reserve(nedges);
  ej.reserve(nedges);
  er.reserve(nedges);
  for (std::int64_t k = 0; k < nedges; ++k) {
    auto ls = next_line("edge row");
    std::int32_t a, b;
    std::string tok;
    ls >> a >> b >> tok;
    ei.push_back(a);
    ej.push_back(b);
    er.push_back(parse_hexf(tok));
  }
  finalize_environment(e, ei, ej, er);
  e.restricted_to_largest = restricted;
  return e;
}

Environment load_environment_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open environment file: " + path);
  return load_environment(f);
}

}  // namespace sep::env
