#include "sepsim/reports.hpp"

#include <fstream>
#include <iomanip>

#include "sepsim/errors.hpp"
#include "sepsim/version.hpp"

namespace sep::reports {

json matrix_json(const SymMat& m) {
  json rows = json::array();
  for (int i = 0; i < m.dim; ++i) {
    json row = json::array();
    for (int j = 0; j < m.dim; ++j) row.push_back(m.at(i, j));
    rows.push_back(row);
  }
  return rows;
}

json eigen_json(const SymEigen& e) {
  json values = json::array(), vectors = json::array();
  for (int k = 0; k < e.dim; ++k) {
    values.push_back(e.values[k]);
    json v = json::array();
    for (int c = 0; c < e.dim; ++c) v.push_back(e.vectors[k][c]);
    vectors.push_back(v);
  }
  return {{"values", values}, {"vectors", vectors}};
}

json solve_report_json(const walk::SolveReport& rep) {
  return {{"iterations", rep.iterations},
          {"relative_residual", rep.relative_residual},
          {"residual_history", rep.residual_history}};
}

json effective_matrix_json(const homog::EffectiveMatrix& em) {
  return {{"schema_version", kSchemaVersion},
          {"D", matrix_json(em.D)},
          {"eigen", eigen_json(em.eigen)},
          {"rank_threshold", em.rank_threshold},
          {"positive_rank", em.positive_rank},
          {"direction_energies", em.direction_energies},
          {"residuals", em.residuals},
          {"iterations", em.iterations},
          {"box_side", em.box_side}};
}

json msd_json(const homog::MsdEstimate& est) {
  return {{"schema_version", kSchemaVersion},
          {"estimate", matrix_json(est.estimate)},
          {"std_error", matrix_json(est.std_error)},
          {"t", est.t},
          {"replicas", est.replicas},
          {"expected_jumps", est.expected_jumps},
          {"wrap_warning", est.wrap_warning}};
}

json hydro_report_json(const hydro::HydroReport& rep) {
  json cells = json::array();
  for (const auto& c : rep.cells) {
    cells.push_back({{"eps", c.eps},
                     {"phi_index", c.phi_index},
                     {"median_sup", c.median_sup},
                     {"mean_sup", c.mean_sup},
                     {"exceedance", c.exceedance}});
  }
  return {{"schema_version", kSchemaVersion},
          {"eps_grid", rep.config.eps_grid},
          {"horizon", rep.config.horizon},
          {"time_points", rep.config.time_points},
          {"replicas", rep.config.replicas},
          {"seed", rep.config.seed},
          {"thresholds", rep.config.thresholds},
          {"quadrature_error", rep.quadrature_error},
          {"cells", cells}};
}

json duality_json(const excl::DualityResult& res) {
  return {{"mc_mean", res.mc_mean},
          {"std_error", res.std_error},
          {"kernel_value", res.kernel_value},
          {"z", res.z}};
}

json nagy_json(const excl::NagyResult& res) {
  return {{"lhs", res.lhs},
          {"rhs", res.rhs},
          {"residual", res.residual},
          {"bound", res.bound}};
}

json environment_summary_json(const env::Environment& e) {
  return {{"model", e.model_tag},
          {"dim", e.dim()},
          {"points", e.n()},
          {"edges", e.graph.num_edges()},
          {"intensity", e.intensity},
          {"seed", e.seed},
          {"connected", e.connected},
          {"restricted_to_largest", e.restricted_to_largest},
          {"generation_retries", e.generation_retries},
          {"truncated", e.truncation.truncated},
          {"dropped_mass_bound", e.truncation.dropped_mass_bound}};
}

namespace {
std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot open for write: " + path);
  f << std::setprecision(17);
  return f;
}
}  // namespace

void write_point_values_csv(const std::string& path, const env::Environment& e,
                            std::span<const double> values) {
  auto f = open_out(path);
  f << "point";
  for (int c = 0; c < e.dim(); ++c) f << ",x" << c;
  f << ",value\n";
  for (std::int64_t i = 0; i < e.n(); ++i) {
    f << i;
    for (int c = 0; c < e.dim(); ++c) f << "," << e.coords[i * e.dim() + c];
    f << "," << values[i] << "\n";
  }
}

void write_msd_csv(const std::string& path, const homog::MsdEstimate& est) {
  auto f = open_out(path);
  f << "t,entry,estimate,stderr\n";
  for (int i = 0; i < est.estimate.dim; ++i)
    for (int j = 0; j < est.estimate.dim; ++j)
      f << est.t << "," << i << j << "," << est.estimate.at(i, j) << ","
        << est.std_error.at(i, j) << "\n";
}

void write_deviations_csv(const std::string& path,
                          const hydro::HydroReport& rep) {
  auto f = open_out(path);
  f << "eps,phi_index,replica,sup_deviation\n";
  for (const auto& c : rep.cells)
    for (std::size_t r = 0; r < c.sup_deviation.size(); ++r)
      f << c.eps << "," << c.phi_index << "," << r << ","
        << c.sup_deviation[r] << "\n";
}

void write_profile_csv(const std::string& path,
                       const hydro::MacroProfile& profile, double x_min,
                       double x_max, int nx, double t_max, int nt) {
  auto f = open_out(path);
  f << "x,t,rho\n";
  for (int kt = 0; kt < nt; ++kt) {
    double t = nt > 1 ? t_max * kt / (nt - 1) : 0.0;
    for (int kx = 0; kx < nx; ++kx) {
      double x = x_min + (x_max - x_min) * kx / (nx - 1);
      VecD xx = zero_vec();
      xx[0] = x;
      f << x << "," << t << "," << hydro::heat_solution(profile, xx, t)
        << "\n";
    }
  }
}

void write_events_csv(const std::string& path,
                      std::span<const excl::EvolveLogEntry> log) {
  auto f = open_out(path);
  f << "time,i,j,swapped\n";
  for (const auto& ev : log)
    f << ev.time << "," << ev.i << "," << ev.j << "," << (ev.swapped ? 1 : 0)
      << "\n";
}

void write_martingale_csv(const std::string& path,
                          const excl::MartingalePath& mp) {
  auto f = open_out(path);
  f << "t,M,bracket\n";
  for (std::size_t k = 0; k < mp.times.size(); ++k)
    f << mp.times[k] << "," << mp.martingale[k] << "," << mp.bracket[k] << "\n";
}

void write_snapshots_csv(const std::string& path,
                         std::span<const double> times,
                         std::span<const excl::ParticleConfig> configs) {
  auto f = open_out(path);
  f << "time,point,occupied\n";
  for (std::size_t k = 0; k < times.size(); ++k)
    for (std::int64_t i = 0; i < configs[k].size(); ++i)
      f << times[k] << "," << i << "," << int(configs[k].occ[i]) << "\n";
}

void write_json_file(const std::string& path, const json& j) {
  auto f = open_out(path);
  f << j.dump(2) << "\n";
}

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open: " + path);
  json j;
  try {
    f >> j;
  } catch (const std::exception& ex) {
    throw ValidationError("bad JSON in " + path + ": " + ex.what());
  }
  return j;
}

}  // namespace sep::reports
