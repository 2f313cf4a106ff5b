#pragma once

#include <string>

#include "json.hpp"
#include "sepsim/exclusion.hpp"
#include "sepsim/homogenization.hpp"
#include "sepsim/hydrodynamics.hpp"
#include "sepsim/random_walk.hpp"

namespace sep::reports {

using nlohmann::json;

json matrix_json(const SymMat& m);
json eigen_json(const SymEigen& e);
json solve_report_json(const walk::SolveReport& rep);
json effective_matrix_json(const homog::EffectiveMatrix& em);
json msd_json(const homog::MsdEstimate& est);
json hydro_report_json(const hydro::HydroReport& rep);
json duality_json(const excl::DualityResult& res);
json nagy_json(const excl::NagyResult& res);
json environment_summary_json(const env::Environment& e);

// CSV exports named by the module interfaces.
void write_point_values_csv(const std::string& path, const env::Environment& e,
                            std::span<const double> values);
void write_msd_csv(const std::string& path, const homog::MsdEstimate& est);
void write_deviations_csv(const std::string& path,
                          const hydro::HydroReport& rep);
void write_profile_csv(const std::string& path,
                       const hydro::MacroProfile& profile, double x_min,
                       double x_max, int nx, double t_max, int nt);
void write_events_csv(const std::string& path,
                      std::span<const excl::EvolveLogEntry> log);
void write_martingale_csv(const std::string& path,
                          const excl::MartingalePath& mp);
void write_snapshots_csv(const std::string& path,
                         std::span<const double> times,
                         std::span<const excl::ParticleConfig> configs);

void write_json_file(const std::string& path, const json& j);
json read_json_file(const std::string& path);

}  // namespace sep::reports
