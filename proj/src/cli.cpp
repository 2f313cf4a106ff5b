#include "sepsim/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "sepsim/env_io.hpp"
#include "sepsim/errors.hpp"
#include "sepsim/homogenization.hpp"
#include "sepsim/reports.hpp"
#include "sepsim/rng.hpp"
#include "sepsim/version.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sep::cli {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kSubcommands = {
    "gen-env", "estimate-d", "simulate-sep", "duality-test", "nagy-test",
    "hydro"};

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& where, std::vector<std::string>& diags) {
  if (!j.is_object()) {
    diags.push_back(where + ": expected an object");
    return;
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      diags.push_back(where + ": unknown key '" + it.key() + "'");
  }
}

double get_num(const json& j, const std::string& key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

void validate_law(const json& j, const std::string& where, bool positive,
                  std::vector<std::string>& diags) {
  if (!j.is_object() || !j.contains("kind")) {
    diags.push_back(where + ": law needs a 'kind'");
    return;
  }
  std::string kind = j.at("kind").get<std::string>();
  check_keys(j,
             {"kind", "value", "a", "b", "rate", "mu", "sigma", "v1", "v2",
              "p", "values", "weights"},
             where, diags);
  if (kind == "normal" && positive)
    diags.push_back(where + ": normal law is not a valid conductance law");
  if (kind == "uniform" && positive && get_num(j, "a", 1.0) <= 0)
    diags.push_back(where + ": uniform conductances need a > 0");
  if (kind == "constant" && positive && get_num(j, "value", 1.0) <= 0)
    diags.push_back(where + ": constant conductance must be positive");
}

void validate_env_block(const json& j, std::vector<std::string>& diags) {
  if (!j.is_object()) {
    diags.push_back("env: expected an object");
    return;
  }
  if (j.contains("file")) {
    check_keys(j, {"file"}, "env", diags);
    return;
  }
  if (!j.contains("model")) {
    diags.push_back("env: needs 'model' or 'file'");
    return;
  }
  std::string model = j.at("model").get<std::string>();
  if (model == "zd_conductance") {
    check_keys(j, {"model", "d", "L", "law", "seed"}, "env", diags);
    if (get_num(j, "L", 4) < 2) diags.push_back("env: L >= 2 required");
    if (j.contains("law")) validate_law(j.at("law"), "env.law", true, diags);
  } else if (model == "crystal") {
    check_keys(j,
               {"model", "preset", "basis", "cell_points", "edges", "cells",
                "law", "seed"},
               "env", diags);
    if (get_num(j, "cells", 4) < 2) diags.push_back("env: cells >= 2 required");
    if (j.contains("law")) validate_law(j.at("law"), "env.law", true, diags);
  } else if (model == "mott_ppp") {
    check_keys(j,
               {"model", "d", "L", "intensity", "energy_law", "r_max",
                "rate_floor", "seed"},
               "env", diags);
    if (get_num(j, "intensity", 1.0) <= 0)
      diags.push_back("env: intensity must be positive");
    if (get_num(j, "r_max", 19.0) <= 0)
      diags.push_back("env: r_max must be positive");
    if (j.contains("energy_law"))
      validate_law(j.at("energy_law"), "env.energy_law", false, diags);
  } else if (model == "percolation") {
    check_keys(j, {"model", "lattice", "d", "cells", "p", "seed"}, "env",
               diags);
    double p = get_num(j, "p", 1.0);
    if (!(p >= 0.0 && p <= 1.0))
      diags.push_back("env: percolation parameter out of [0,1]");
    else if (p == 0.0)
      diags.push_back("env: percolation parameter 0 has no open site");
  } else {
    diags.push_back("env: unknown model '" + model + "'");
  }
}

void validate_profile(const json& j, std::vector<std::string>& diags) {
  if (!j.is_object() || !j.contains("kind")) {
    diags.push_back("profile: needs a 'kind'");
    return;
  }
  check_keys(j,
             {"kind", "value", "axis", "threshold", "below", "above", "radius",
              "lo", "hi", "xs", "vals"},
             "profile", diags);
  for (const char* key : {"value", "below", "above", "lo", "hi"}) {
    if (j.contains(key)) {
      double v = j.at(key).get<double>();
      if (!(v >= 0.0 && v <= 1.0))
        diags.push_back(std::string("profile: '") + key +
                        "' must lie in [0,1]");
    }
  }
}

}  // namespace

std::vector<std::string> validate_config(const std::string& subcommand,
                                         const json& config) {
  std::vector<std::string> diags;
  if (std::find(kSubcommands.begin(), kSubcommands.end(), subcommand) ==
      kSubcommands.end()) {
    diags.push_back("unknown subcommand '" + subcommand + "'");
    return diags;
  }
  if (!config.is_object()) {
    diags.push_back("config: expected a JSON object");
    return diags;
  }
  const std::vector<std::string> common = {"seed", "out", "workers", "strict"};
  auto with_common = [&](std::vector<std::string> keys) {
    keys.insert(keys.end(), common.begin(), common.end());
    return keys;
  };

  if (subcommand == "gen-env") {
    check_keys(config, with_common({"env"}), "config", diags);
    if (config.contains("env")) validate_env_block(config.at("env"), diags);
    else diags.push_back("config: gen-env needs an 'env' block");
  } else if (subcommand == "estimate-d") {
    check_keys(config, with_common({"env", "tol", "msd", "sizes", "richardson"}),
               "config", diags);
    if (config.contains("env")) validate_env_block(config.at("env"), diags);
    else diags.push_back("config: estimate-d needs an 'env' block");
    if (config.contains("tol") && config.at("tol").get<double>() <= 0)
      diags.push_back("config: tol must be positive");
    if (config.contains("msd")) {
      check_keys(config.at("msd"), {"enabled", "t", "replicas", "strict"},
                 "msd", diags);
      if (get_num(config.at("msd"), "replicas", 10000) < 1000)
        diags.push_back("msd: replicas >= 1000 required");
    }
  } else if (subcommand == "simulate-sep") {
    check_keys(config,
               with_common({"env", "T", "t0", "rate_scale", "init",
                            "snapshot_times", "component_cap", "martingale"}),
               "config", diags);
    if (config.contains("env")) validate_env_block(config.at("env"), diags);
    else diags.push_back("config: simulate-sep needs an 'env' block");
    if (get_num(config, "T", 1.0) <= 0)
      diags.push_back("config: T must be positive");
  } else if (subcommand == "duality-test") {
    check_keys(config, with_common({"env", "replicas", "cases", "init"}),
               "config", diags);
    if (config.contains("env")) validate_env_block(config.at("env"), diags);
    else diags.push_back("config: duality-test needs an 'env' block");
    if (get_num(config, "replicas", 1000) < 100)
      diags.push_back("config: duality replicas >= 100 required");
    if (!config.contains("cases") || !config.at("cases").is_array() ||
        config.at("cases").empty())
      diags.push_back("config: duality-test needs a nonempty 'cases' array");
  } else if (subcommand == "nagy-test") {
    check_keys(config,
               with_common({"instances", "quad_tol", "t", "max_points",
                            "max_events"}),
               "config", diags);
    if (get_num(config, "quad_tol", 1e-8) < 1e-8)
      diags.push_back("config: quad_tol >= 1e-8 required");
    if (get_num(config, "max_points", 16) > 64)
      diags.push_back("config: nagy instances capped at 64 points");
  } else if (subcommand == "hydro") {
    check_keys(config,
               with_common({"env", "profile", "eps", "T", "time_points",
                            "replicas", "phi", "diffusion", "thresholds",
                            "component_cap", "profile_csv"}),
               "config", diags);
    if (config.contains("env")) validate_env_block(config.at("env"), diags);
    else diags.push_back("config: hydro needs an 'env' block");
    if (config.contains("profile")) validate_profile(config.at("profile"), diags);
    else diags.push_back("config: hydro needs a 'profile' block");
    if (!config.contains("eps") || !config.at("eps").is_array() ||
        config.at("eps").empty())
      diags.push_back("config: hydro needs a nonempty 'eps' array");
    // Support inequality needs the environment size; check when stated inline.
    if (config.contains("env") && config.at("env").is_object() &&
        config.at("env").contains("L") && config.contains("eps") &&
        config.at("eps").is_array()) {
      double L = config.at("env").at("L").get<double>();
      double r = 1.0;
      if (config.contains("phi") && config.at("phi").is_object())
        r = get_num(config.at("phi"), "radius", 1.0);
      double T = get_num(config, "T", 0.5);
      for (const auto& epsj : config.at("eps")) {
        double eps = epsj.get<double>();
        double need = r + 6.0 * std::sqrt(2.0 * T);  // lambda_max ~ 1 guess
        if (eps * L / 2.0 < need)
          diags.push_back(
              "config: support inequality r_supp + 6 sqrt(2 lambda_max T) <= "
              "eps L / 2 violated at eps = " +
              std::to_string(eps) + " (needs about " + std::to_string(need) +
              ", has " + std::to_string(eps * L / 2.0) + ")");
      }
    }
  }
  return diags;
}

env::ScalarLaw law_from_config(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") return env::ScalarLaw::constant(j.at("value"));
  if (kind == "uniform") return env::ScalarLaw::uniform(j.at("a"), j.at("b"));
  if (kind == "exponential") return env::ScalarLaw::exponential(j.at("rate"));
  if (kind == "lognormal")
    return env::ScalarLaw::lognormal(j.at("mu"), j.at("sigma"));
  if (kind == "two_point")
    return env::ScalarLaw::two_point(j.at("v1"), j.at("v2"), j.at("p"));
  if (kind == "table")
    return env::ScalarLaw::table(j.at("values").get<std::vector<double>>(),
                                 j.at("weights").get<std::vector<double>>());
  if (kind == "cycle")
    return env::ScalarLaw::cycle(j.at("values").get<std::vector<double>>());
  if (kind == "normal") return env::ScalarLaw::normal(j.at("mu"), j.at("sigma"));
  throw ValidationError("unknown law kind '" + kind + "'");
}

env::Environment environment_from_config(const json& j,
                                         std::uint64_t master_seed) {
  if (j.contains("file"))
    return env::load_environment_file(j.at("file").get<std::string>());
  std::string model = j.at("model").get<std::string>();
  std::uint64_t seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>()
                                          : master_seed;
  if (model == "zd_conductance") {
    return env::gen_zd_conductance(j.at("d").get<int>(), j.at("L").get<int>(),
                                   law_from_config(j.at("law")), seed);
  }
  if (model == "crystal") {
    env::CrystalSpec spec;
    if (j.contains("preset")) {
      std::string preset = j.at("preset").get<std::string>();
      if (preset == "hexagonal")
        spec = env::CrystalSpec::hexagonal();
      else if (preset == "cubic1" || preset == "cubic2" || preset == "cubic3")
        spec = env::CrystalSpec::cubic(preset.back() - '0');
      else
        throw ValidationError("unknown crystal preset '" + preset + "'");
    } else {
      auto basis = j.at("basis").get<std::vector<std::vector<double>>>();
      int d = static_cast<int>(basis.size());
      std::vector<double> flat;
      for (const auto& row : basis)
        for (double v : row) flat.push_back(v);
      spec.action = env::GroupAction::lattice(d, flat);
      for (const auto& cp : j.at("cell_points")) {
        VecD v = zero_vec();
        for (int c = 0; c < d; ++c) v[c] = cp.at(c).get<double>();
        spec.cell_points.push_back(v);
      }
      for (const auto& ed : j.at("edges")) {
        env::CrystalSpec::TemplateEdge t;
        t.a = ed.at(0).get<int>();
        t.b = ed.at(1).get<int>();
        for (int c = 0; c < d; ++c) t.offset[c] = ed.at(2 + c).get<int>();
        spec.edges.push_back(t);
      }
    }
    env::Environment e = env::gen_crystal_conductance(
        spec, j.at("cells").get<int>(), law_from_config(j.at("law")), seed);
    if (j.contains("preset") &&
        j.at("preset").get<std::string>() == "hexagonal")
      e.ambient = env::AmbientLattice::Hexagonal;
    return e;
  }
  if (model == "mott_ppp") {
    return env::gen_mott_ppp(
        j.at("d").get<int>(), j.at("L").get<double>(),
        j.at("intensity").get<double>(), law_from_config(j.at("energy_law")),
        j.contains("r_max") ? j.at("r_max").get<double>() : 19.0,
        j.contains("rate_floor") ? j.at("rate_floor").get<double>() : 0.0,
        seed);
  }
  if (model == "percolation") {
    std::string lat = j.at("lattice").get<std::string>();
    return env::gen_percolation_cluster(
        lat == "hexagonal" ? env::PercLattice::Hexagonal
                           : env::PercLattice::Zd,
        j.contains("d") ? j.at("d").get<int>() : 2, j.at("cells").get<int>(),
        j.at("p").get<double>(), seed);
  }
  throw ValidationError("unknown environment model '" + model + "'");
}

hydro::MacroProfile profile_from_config(const json& j, int dim,
                                        const SymMat& D) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant")
    return hydro::MacroProfile::constant(dim, j.at("value"), D);
  if (kind == "step") {
    int axis = j.contains("axis") ? j.at("axis").get<int>() : 0;
    VecD n = zero_vec();
    n[axis] = 1.0;
    return hydro::MacroProfile::step(
        dim, n, j.contains("threshold") ? j.at("threshold").get<double>() : 0.0,
        j.contains("below") ? j.at("below").get<double>() : 1.0,
        j.contains("above") ? j.at("above").get<double>() : 0.0, D);
  }
  if (kind == "bump")
    return hydro::MacroProfile::smooth_bump(
        dim, j.at("radius"), j.contains("lo") ? j.at("lo").get<double>() : 0.0,
        j.contains("hi") ? j.at("hi").get<double>() : 1.0, D);
  if (kind == "table")
    return hydro::MacroProfile::table(
        dim, j.contains("axis") ? j.at("axis").get<int>() : 0,
        j.at("xs").get<std::vector<double>>(),
        j.at("vals").get<std::vector<double>>(), D);
  throw ValidationError("unknown profile kind '" + kind + "'");
}

namespace {

struct OutputTracker {
  fs::path dir;
  std::vector<fs::path> written;
  bool keep_partial = false;

  std::string file(const std::string& name) {
    fs::path p = dir / name;
    written.push_back(p);
    return p.string();
  }
  void discard() {
    if (keep_partial) return;
    for (const auto& p : written) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }
};

excl::ParticleConfig init_from_config(const json& j, const env::Environment& e,
                                      std::uint64_t seed) {
  std::string kind = j.is_object() && j.contains("kind")
                         ? j.at("kind").get<std::string>()
                         : "bernoulli";
  if (kind == "full") return excl::ParticleConfig(e.n(), 1);
  if (kind == "empty") return excl::ParticleConfig(e.n(), 0);
  if (kind == "single") {
    excl::ParticleConfig c(e.n(), 0);
    std::int64_t site = j.contains("site") ? j.at("site").get<std::int64_t>() : 0;
    if (site < 0 || site >= e.n())
      throw ValidationError("init: site out of range");
    c.occ[site] = 1;
    return c;
  }
  if (kind == "alternating") {
    excl::ParticleConfig c(e.n(), 0);
    for (std::int64_t i = 0; i < e.n(); i += 2) c.occ[i] = 1;
    return c;
  }
  if (kind == "bernoulli") {
    double rho = j.is_object() && j.contains("rho")
                     ? j.at("rho").get<double>()
                     : 0.5;
    rng::Stream rs(rng::seed_derive(seed, "exclusion.init", 0));
    excl::ParticleConfig c(e.n(), 0);
    for (std::int64_t i = 0; i < e.n(); ++i) c.occ[i] = rs.u01() < rho;
    return c;
  }
  throw ValidationError("unknown init kind '" + kind + "'");
}

int run_gen_env([[maybe_unused]] const Flags& flags, const json& config, OutputTracker& out,
                std::uint64_t seed, json& manifest) {
  env::Environment e = environment_from_config(config.at("env"), seed);
  env::save_environment_file(e, out.file("environment.txt"));
  manifest["environment"] = reports::environment_summary_json(e);
  return 0;
}

int run_estimate_d([[maybe_unused]] const Flags& flags, const json& config, OutputTracker& out,
                   std::uint64_t seed, json& manifest) {
  env::Environment e = environment_from_config(config.at("env"), seed);
  homog::CorrectorOptions opts;
  opts.tol = config.contains("tol") ? config.at("tol").get<double>() : 1e-10;
  homog::EffectiveMatrix em = homog::effective_matrix(e, opts);
  json rep = reports::effective_matrix_json(em);
  rep["model"] = e.model_tag;
  rep["seed"] = e.seed;
  rep["environment"] = reports::environment_summary_json(e);
  std::string rep_path = out.file("d-report.json");
  reports::write_json_file(rep_path, rep);
  if (config.contains("msd") &&
      config.at("msd").value("enabled", false)) {
    const json& m = config.at("msd");
    homog::MsdEstimate est = homog::msd_diffusivity(
        e, m.value("t", 50.0), m.value("replicas", std::int64_t(10000)),
        rng::seed_derive(seed, "msd.replica", 0), m.value("strict", false));
    rep["msd"] = reports::msd_json(est);
    reports::write_msd_csv(out.file("msd.csv"), est);
    reports::write_json_file(rep_path, rep);
  }
  manifest["environment"] = reports::environment_summary_json(e);
  manifest["tol"] = opts.tol;
  return 0;
}

int run_simulate_sep([[maybe_unused]] const Flags& flags, const json& config,
                     OutputTracker& out, std::uint64_t seed, json& manifest) {
  env::Environment e = environment_from_config(config.at("env"), seed);
  double T = config.value("T", 1.0);
  double rate_scale = config.value("rate_scale", 1.0);
  double t0 = config.contains("t0")
                  ? config.at("t0").get<double>()
                  : std::min(excl::default_slab_width(e, rate_scale), T);
  excl::ClockSchedule clocks(e, T, t0, rng::seed_derive(seed, "clocks", 0),
                             rate_scale);
  excl::ParticleConfig xi = init_from_config(
      config.contains("init") ? config.at("init") : json::object(), e, seed);

  std::vector<double> snaps =
      config.contains("snapshot_times")
          ? config.at("snapshot_times").get<std::vector<double>>()
          : std::vector<double>{0.0, T / 2, T};
  std::sort(snaps.begin(), snaps.end());
  std::vector<excl::ParticleConfig> snapshots(snaps.size());
  excl::EvolveOptions opts;
  opts.component_cap = config.value("component_cap", std::int64_t(1000));
  opts.collect_log = true;
  opts.observe_times = snaps;
  opts.observer = [&](std::size_t k, double, const excl::ParticleConfig& c) {
    snapshots[k] = c;
  };
  excl::EvolveResult res = excl::evolve(e, clocks, xi, T, opts);
  reports::write_events_csv(out.file("events.csv"), res.log);
  reports::write_snapshots_csv(out.file("snapshots.csv"), snaps, snapshots);
  manifest["events"] = res.events_processed;
  manifest["halvings"] = res.max_halving_depth;
  manifest["t0"] = t0;
  manifest["particles"] = xi.count();

  if (config.contains("martingale") &&
      config.at("martingale").value("enabled", false)) {
    const json& mj = config.at("martingale");
    double radius = mj.value("radius", 1.0);
    double meps = mj.value("eps", 1.0);
    int ntimes = mj.value("times", 32);
    hydro::TestFunction u = hydro::bump(e.dim(), radius);
    std::vector<double> uvals(e.n());
    for (std::int64_t i = 0; i < e.n(); ++i) {
      VecD x = e.centered_point(i);
      for (int c = 0; c < e.dim(); ++c) x[c] *= meps;
      uvals[i] = u.value(x);
    }
    std::vector<double> times(ntimes);
    for (int k = 0; k < ntimes; ++k) times[k] = T * (k + 1) / ntimes;
    excl::MartingalePath mp =
        excl::dynkin_path(e, meps, clocks, xi, uvals, times);
    reports::write_martingale_csv(out.file("martingale.csv"), mp);
  }
  manifest["environment"] = reports::environment_summary_json(e);
  return 0;
}

int run_duality_test([[maybe_unused]] const Flags& flags, const json& config,
                     OutputTracker& out, std::uint64_t seed, json& manifest) {
  env::Environment e = environment_from_config(config.at("env"), seed);
  excl::ParticleConfig xi = init_from_config(
      config.contains("init") ? config.at("init") : json::object(), e, seed);
  std::int64_t replicas = config.value("replicas", std::int64_t(100000));
  json rows = json::array();
  bool all_finite = true;
  int idx = 0;
  for (const auto& c : config.at("cases")) {
    std::int64_t x = c.at("x").get<std::int64_t>();
    double t = c.at("t").get<double>();
    excl::DualityResult r = excl::duality_mc(
        e, xi, x, t, replicas, rng::seed_derive(seed, "duality.replica",
                                                1000000 + idx));
    json row = reports::duality_json(r);
    row["x"] = x;
    row["t"] = t;
    rows.push_back(row);
    all_finite = all_finite && std::isfinite(r.z);
    ++idx;
  }
  json rep = {{"schema_version", kSchemaVersion},
              {"replicas", replicas},
              {"cases", rows}};
  reports::write_json_file(out.file("duality-report.json"), rep);
  manifest["environment"] = reports::environment_summary_json(e);
  if (!all_finite) throw NumericalError("duality-test: non-finite statistic");
  return 0;
}

int run_nagy_test([[maybe_unused]] const Flags& flags, const json& config, OutputTracker& out,
                  std::uint64_t seed, json& manifest) {
  int instances = config.value("instances", 20);
  double quad_tol = config.value("quad_tol", 1e-8);
  double t = config.value("t", 1.0);
  int max_points = config.value("max_points", 16);
  json rows = json::array();
  double worst = 0.0;
  bool ok = true;
  for (int inst = 0; inst < instances; ++inst) {
    rng::Stream rs(rng::seed_derive(seed, "test", inst));
    int L = 5 + static_cast<int>(rs.below(std::max(1, max_points - 4)));
    env::Environment e = env::gen_zd_conductance(
        1, L, env::ScalarLaw::uniform(0.5, 1.5), seed + inst);
    excl::ParticleConfig xi(e.n(), 0);
    for (std::int64_t i = 0; i < e.n(); ++i) xi.occ[i] = rs.u01() < 0.5;
    double t0 = excl::default_slab_width(e, 1.0);
    excl::ClockSchedule clocks(e, t, std::min(t0, t),
                               rng::seed_derive(seed, "clocks", inst));
    std::int64_t x = static_cast<std::int64_t>(rs.below(e.n()));
    excl::NagyResult r = excl::nagy_check(e, clocks, xi, x, t, quad_tol);
    json row = reports::nagy_json(r);
    row["instance"] = inst;
    row["points"] = e.n();
    rows.push_back(row);
    worst = std::max(worst, r.residual);
    ok = ok && r.residual <= r.bound;
  }
  json rep = {{"schema_version", kSchemaVersion},
              {"instances", instances},
              {"quad_tol", quad_tol},
              {"worst_residual", worst},
              {"rows", rows}};
  reports::write_json_file(out.file("nagy-report.json"), rep);
  manifest["worst_residual"] = worst;
  if (!ok)
    throw NumericalError("nagy-test: residual above bound (worst " +
                         std::to_string(worst) + ")");
  return 0;
}

int run_hydro([[maybe_unused]] const Flags& flags, const json& config, OutputTracker& out,
              std::uint64_t seed, json& manifest) {
  env::Environment e = environment_from_config(config.at("env"), seed);
  const int d = e.dim();

  SymMat D = SymMat::identity(d);
  if (config.contains("diffusion") && config.at("diffusion").is_object()) {
    auto rows = config.at("diffusion").at("matrix")
                    .get<std::vector<std::vector<double>>>();
    D = SymMat::zero(d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) D.at(i, j) = rows[i][j];
  } else {
    homog::EffectiveMatrix em = homog::effective_matrix(e);
    D = em.D;
  }

  hydro::MacroProfile profile = profile_from_config(config.at("profile"), d, D);

  std::vector<hydro::TestFunction> phis;
  double radius = 1.0;
  if (config.contains("phi") && config.at("phi").is_object())
    radius = config.at("phi").value("radius", 1.0);
  phis.push_back(hydro::bump(d, radius));

  hydro::HydroConfig hc;
  hc.eps_grid = config.at("eps").get<std::vector<double>>();
  hc.horizon = config.value("T", 0.5);
  hc.time_points = config.value("time_points", 64);
  hc.replicas = config.value("replicas", std::int64_t(50));
  hc.seed = seed;
  if (config.contains("thresholds"))
    hc.thresholds = config.at("thresholds").get<std::vector<double>>();
  hc.component_cap = config.value("component_cap", std::int64_t(1000));

  hydro::HydroReport rep = hydro::hydro_experiment(e, profile, phis, hc);
  json repj = reports::hydro_report_json(rep);
  repj["diffusion"] = reports::matrix_json(D);
  repj["environment"] = reports::environment_summary_json(e);
  reports::write_json_file(out.file("hydro-report.json"), repj);
  reports::write_deviations_csv(out.file("deviations.csv"), rep);

  double xmax = 2.0 * radius;
  int nx = 101, nt = 9;
  if (config.contains("profile_csv")) {
    const json& pc = config.at("profile_csv");
    xmax = pc.value("x_max", xmax);
    nx = pc.value("nx", nx);
    nt = pc.value("nt", nt);
  }
  reports::write_profile_csv(out.file("profile.csv"), profile, -xmax, xmax, nx,
                             hc.horizon, nt);
  manifest["environment"] = reports::environment_summary_json(e);
  manifest["diffusion"] = reports::matrix_json(D);
  return 0;
}

}  // namespace

int run_subcommand(const Flags& flags, const json& config) {
  auto start = std::chrono::steady_clock::now();
  std::vector<std::string> diags = validate_config(flags.subcommand, config);
  if (flags.validate_only) {
    for (const auto& dmsg : diags) std::cout << dmsg << "\n";
    std::cout << (diags.empty() ? "config ok" : "config has issues") << "\n";
    return 0;
  }
  if (!diags.empty()) {
    for (const auto& dmsg : diags) std::cerr << "config error: " << dmsg << "\n";
    return 2;
  }

  std::uint64_t seed = flags.seed ? *flags.seed
                                  : config.value("seed", std::uint64_t(1));
  int workers = flags.workers ? *flags.workers : config.value("workers", 0);
#ifdef _OPENMP
  if (workers > 0) omp_set_num_threads(workers);
#endif

  std::string out_dir;
  if (flags.out)
    out_dir = *flags.out;
  else if (config.contains("out"))
    out_dir = config.at("out").get<std::string>();
  else if (const char* root = std::getenv("SEPSIM_OUT_ROOT"))
    out_dir = std::string(root) + "/" + flags.subcommand;
  else
    out_dir = "out/" + flags.subcommand;

  OutputTracker out;
  out.dir = out_dir;
  out.keep_partial = flags.keep_partial;
  std::error_code ec;
  fs::create_directories(out.dir, ec);
  if (ec) {
    std::cerr << "cannot create output directory " << out_dir << "\n";
    return 2;
  }

  json manifest = {{"schema_version", kSchemaVersion},
                   {"tool_version", kVersion},
                   {"subcommand", flags.subcommand},
                   {"seed", seed},
                   {"workers", workers},
                   {"strict", flags.strict},
                   {"config", config}};
  int code = 0;
  try {
    if (flags.subcommand == "gen-env")
      code = run_gen_env(flags, config, out, seed, manifest);
    else if (flags.subcommand == "estimate-d")
      code = run_estimate_d(flags, config, out, seed, manifest);
    else if (flags.subcommand == "simulate-sep")
      code = run_simulate_sep(flags, config, out, seed, manifest);
    else if (flags.subcommand == "duality-test")
      code = run_duality_test(flags, config, out, seed, manifest);
    else if (flags.subcommand == "nagy-test")
      code = run_nagy_test(flags, config, out, seed, manifest);
    else if (flags.subcommand == "hydro")
      code = run_hydro(flags, config, out, seed, manifest);
    else {
      std::cerr << "unknown subcommand " << flags.subcommand << "\n";
      return 2;
    }
  } catch (const ValidationError& ex) {
    std::cerr << "validation error: " << ex.what() << "\n";
    out.discard();
    return 2;
  } catch (const NumericalError& ex) {
    std::cerr << "numerical failure: " << ex.what() << "\n";
    out.discard();
    return 3;
  }

  auto stop = std::chrono::steady_clock::now();
  manifest["wall_time_s"] =
      std::chrono::duration<double>(stop - start).count();
  json outputs = json::array();
  for (const auto& p : out.written) outputs.push_back(p.filename().string());
  manifest["outputs"] = outputs;
  reports::write_json_file((out.dir / "run-manifest.json").string(), manifest);
  return code;
}

int run_main(int argc, char** argv) {
  CLI::App app{"simple exclusion process simulator and homogenization toolkit"};
  app.set_version_flag("--version", kVersion);
  Flags flags;
  app.require_subcommand(1);
  std::vector<CLI::App*> subs;
  for (const auto& name : kSubcommands) {
    CLI::App* sub = app.add_subcommand(name, name);
    sub->add_option("--config", flags.config_path, "JSON config path");
    sub->add_option("--seed", flags.seed, "master seed (overrides config)");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--workers", flags.workers, "worker threads");
    sub->add_flag("--strict", flags.strict, "strict numerical checks");
    sub->add_flag("--keep-partial", flags.keep_partial,
                  "keep partial outputs on failure");
    sub->add_flag("--validate-only", flags.validate_only,
                  "only validate the config and print diagnostics");
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  for (std::size_t k = 0; k < subs.size(); ++k)
    if (subs[k]->parsed()) flags.subcommand = kSubcommands[k];

  json config = json::object();
  if (!flags.config_path.empty()) {
    try {
      config = reports::read_json_file(flags.config_path);
    } catch (const ValidationError& ex) {
      std::cerr << ex.what() << "\n";
      return 2;
    }
  }
  return run_subcommand(flags, config);
}

}  // namespace sep::cli
