#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sepsim/environment.hpp"
#include "sepsim/hydrodynamics.hpp"

namespace sep::cli {

using nlohmann::json;

struct Flags {
  std::string subcommand;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  bool strict = false;
  bool keep_partial = false;
  bool validate_only = false;
};

// Pure config validation: returns human-readable diagnostics, empty when the
// config is well formed. Never touches the filesystem (beyond the already
// parsed JSON) or any RNG.
std::vector<std::string> validate_config(const std::string& subcommand,
                                         const json& config);

// Build an environment from its config block (model parameters or file).
env::Environment environment_from_config(const json& block,
                                         std::uint64_t master_seed);

env::ScalarLaw law_from_config(const json& block);
hydro::MacroProfile profile_from_config(const json& block, int dim,
                                        const SymMat& D);

// Execute one subcommand; returns the process exit code (0 ok, 2 validation
// error, 3 numerical failure). Report files land in the output directory.
int run_subcommand(const Flags& flags, const json& config);

// Full argv entry point.
int run_main(int argc, char** argv);

}  // namespace sep::cli
