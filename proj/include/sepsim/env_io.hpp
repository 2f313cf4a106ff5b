#pragma once

#include <iosfwd>
#include <string>

#include "sepsim/environment.hpp"

namespace sep::env {

// Canonical environment text format. Floats are serialized as hex-floats so a
// save/load round trip is lossless at full binary precision; the edge section
// is sorted by (min(i,j), max(i,j)).
void save_environment(const Environment& e, std::ostream& os);
void save_environment_file(const Environment& e, const std::string& path);
Environment load_environment(std::istream& is);
Environment load_environment_file(const std::string& path);

std::string environment_to_string(const Environment& e);

}  // namespace sep::env
