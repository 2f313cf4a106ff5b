#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
// End-to-end checks of the command line binary: the test runner exports
// SEPSIM_BIN with the path of the built executable.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "sepsim/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string bin() {
  const char* b = std::getenv("SEPSIM_BIN");
  REQUIRE(b != nullptr);
  return b;
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("sepsim-cli-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run(const std::string& cmd) {
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("validate_config flags out-of-range and unknown keys") {
  json bad = {{"env",
               {{"model", "percolation"},
                {"lattice", "zd"},
                {"d", 2},
                {"cells", 16},
                {"p", 1.3}}}};
  auto diags = sep::cli::validate_config("gen-env", bad);
  REQUIRE_FALSE(diags.empty());
  bool found = false;
  for (const auto& d : diags)
    if (d.find("percolation parameter out of [0,1]") != std::string::npos)
      found = true;
  CHECK(found);

  json unknown = {{"env",
                   {{"model", "zd_conductance"},
                    {"d", 1},
                    {"L", 8},
                    {"law", {{"kind", "constant"}, {"value", 1.0}}}}},
                  {"bogus", 1}};
  auto diags2 = sep::cli::validate_config("gen-env", unknown);
  REQUIRE_FALSE(diags2.empty());
  CHECK(diags2[0].find("unknown key 'bogus'") != std::string::npos);

  json good = {{"env",
                {{"model", "zd_conductance"},
                 {"d", 1},
                 {"L", 8},
                 {"law", {{"kind", "constant"}, {"value", 1.0}}}}}};
  CHECK(sep::cli::validate_config("gen-env", good).empty());

  json hydro_bad = {{"env",
                     {{"model", "zd_conductance"},
                      {"d", 1},
                      {"L", 64},
                      {"law", {{"kind", "constant"}, {"value", 1.0}}}}},
                    {"profile", {{"kind", "constant"}, {"value", 0.5}}},
                    {"eps", {0.001}}};
  auto diags3 = sep::cli::validate_config("hydro", hydro_bad);
  bool support = false;
  for (const auto& d : diags3)
    if (d.find("support inequality") != std::string::npos) support = true;
  CHECK(support);
}

TEST_CASE("gen-env is reproducible byte for byte") {
  auto dir = fresh_dir("genenv");
  write_file(dir / "cfg.json",
             R"({"env": {"model": "mott_ppp", "d": 1, "L": 30, "intensity": 1.0,
                  "energy_law": {"kind": "uniform", "a": -1, "b": 1},
                  "r_max": 8.0, "rate_floor": 0.0}, "seed": 42})");
  std::string base = bin() + " gen-env --config " + (dir / "cfg.json").string();
  CHECK(run(base + " --out " + (dir / "a").string()) == 0);
  CHECK(run(base + " --out " + (dir / "b").string()) == 0);
  CHECK(read_file(dir / "a" / "environment.txt") ==
        read_file(dir / "b" / "environment.txt"));
  CHECK(fs::exists(dir / "a" / "run-manifest.json"));

  // round trip through the env file interface
  write_file(dir / "cfg2.json",
             "{\"env\": {\"file\": \"" +
                 (dir / "a" / "environment.txt").string() + "\"}}");
  CHECK(run(bin() + " estimate-d --config " + (dir / "cfg2.json").string() +
            " --out " + (dir / "d").string()) == 0);
}

TEST_CASE("estimate-d reproduces the harmonic-mean oracle") {
  auto dir = fresh_dir("estd");
  write_file(dir / "cfg.json",
             R"({"env": {"model": "zd_conductance", "d": 1, "L": 64,
                  "law": {"kind": "cycle", "values": [1.0, 2.0]}},
                 "tol": 1e-12})");
  CHECK(run(bin() + " estimate-d --config " + (dir / "cfg.json").string() +
            " --out " + dir.string()) == 0);
  json rep = json::parse(read_file(dir / "d-report.json"));
  double d00 = rep.at("D").at(0).at(0).get<double>();
  CHECK(std::abs(d00 - 4.0 / 3.0) < 1e-8);
  CHECK(rep.at("schema_version").get<int>() >= 1);
}

TEST_CASE("bad configs exit with code 2") {
  auto dir = fresh_dir("bad");
  write_file(dir / "bad.json", R"({"env": {"model": "nonsense"}})");
  CHECK(run(bin() + " gen-env --config " + (dir / "bad.json").string() +
            " --out " + dir.string() + " 2>/dev/null") == 2);
  write_file(dir / "mangled.json", "{ not json");
  CHECK(run(bin() + " gen-env --config " + (dir / "mangled.json").string() +
            " 2>/dev/null") == 2);
  // validate-only prints diagnostics and exits zero
  write_file(dir / "p.json",
             R"({"env": {"model": "percolation", "lattice": "zd", "d": 2,
                  "cells": 16, "p": 1.3}})");
  CHECK(run(bin() + " gen-env --config " + (dir / "p.json").string() +
            " --validate-only > /dev/null") == 0);
  CHECK(run(bin() + " gen-env --config " + (dir / "p.json").string() +
            " --out " + dir.string() + " 2>/dev/null") == 2);
}

TEST_CASE("numerical failures exit 3 and clean partial outputs") {
  auto dir = fresh_dir("partial");
  // strict msd with a horizon far beyond the wrap guard
  write_file(dir / "cfg.json",
             R"({"env": {"model": "zd_conductance", "d": 1, "L": 32,
                  "law": {"kind": "constant", "value": 1.0}},
                 "msd": {"enabled": true, "t": 3000.0, "replicas": 1000,
                         "strict": true}})");
  std::string base = bin() + " estimate-d --config " +
                     (dir / "cfg.json").string();
  CHECK(run(base + " --out " + (dir / "gone").string() + " 2>/dev/null") == 3);
  CHECK_FALSE(fs::exists(dir / "gone" / "d-report.json"));
  CHECK(run(base + " --keep-partial --out " + (dir / "kept").string() +
            " 2>/dev/null") == 3);
  CHECK(fs::exists(dir / "kept" / "d-report.json"));
}

TEST_CASE("hydro with an empty profile writes all-zero deviations") {
  auto dir = fresh_dir("hydro0");
  write_file(dir / "cfg.json",
             R"({"env": {"model": "zd_conductance", "d": 1, "L": 512,
                  "law": {"kind": "constant", "value": 1.0}},
                 "profile": {"kind": "constant", "value": 0.0},
                 "eps": [0.0625], "T": 0.25, "time_points": 16,
                 "replicas": 3})");
  CHECK(run(bin() + " hydro --config " + (dir / "cfg.json").string() +
            " --out " + dir.string()) == 0);
  std::ifstream dev(dir / "deviations.csv");
  std::string line;
  std::getline(dev, line);  // header
  int rows = 0;
  while (std::getline(dev, line)) {
    auto last = line.rfind(',');
    CHECK(std::stod(line.substr(last + 1)) == 0.0);
    ++rows;
  }
  CHECK(rows == 3);
  CHECK(fs::exists(dir / "hydro-report.json"));
  CHECK(fs::exists(dir / "profile.csv"));
}

TEST_CASE("simulate-sep writes events, snapshots and the martingale path") {
  auto dir = fresh_dir("sep");
  write_file(dir / "cfg.json",
             R"({"env": {"model": "zd_conductance", "d": 1, "L": 32,
                  "law": {"kind": "constant", "value": 1.0}},
                 "T": 1.0, "init": {"kind": "bernoulli", "rho": 0.5},
                 "snapshot_times": [0.0, 0.5, 1.0],
                 "martingale": {"enabled": true, "radius": 1.0,
                                "eps": 0.25, "times": 8}})");
  CHECK(run(bin() + " simulate-sep --config " + (dir / "cfg.json").string() +
            " --out " + dir.string()) == 0);
  CHECK(fs::exists(dir / "events.csv"));
  CHECK(fs::exists(dir / "snapshots.csv"));
  CHECK(fs::exists(dir / "martingale.csv"));
  json manifest = json::parse(read_file(dir / "run-manifest.json"));
  CHECK(manifest.at("subcommand") == "simulate-sep");
  CHECK(manifest.at("outputs").size() >= 3);
}

TEST_CASE("duality and nagy subcommands complete with reports") {
  auto dir = fresh_dir("dn");
  write_file(dir / "dual.json",
             R"({"env": {"model": "zd_conductance", "d": 1, "L": 8,
                  "law": {"kind": "constant", "value": 1.0}},
                 "replicas": 2000, "init": {"kind": "single", "site": 0},
                 "cases": [{"x": 2, "t": 0.5}, {"x": 4, "t": 0.8}]})");
  CHECK(run(bin() + " duality-test --config " + (dir / "dual.json").string() +
            " --out " + (dir / "dual").string()) == 0);
  json rep = json::parse(read_file(dir / "dual" / "duality-report.json"));
  CHECK(rep.at("cases").size() == 2);

  write_file(dir / "nagy.json",
             R"({"instances": 4, "quad_tol": 1e-8, "t": 0.6})");
  CHECK(run(bin() + " nagy-test --config " + (dir / "nagy.json").string() +
            " --out " + (dir / "nagy").string()) == 0);
  json nrep = json::parse(read_file(dir / "nagy" / "nagy-report.json"));
  CHECK(nrep.at("worst_residual").get<double>() < 1e-6);
}
