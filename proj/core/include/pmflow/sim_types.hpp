#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pmflow/features.hpp"

namespace pmflow {

// Live fields of one simulation. Face arrays are indexed like
// FaceGrid::interior; b* arrays like FaceGrid::outflow (outward positive).
struct SimulationState {
  std::vector<double> p;             // [Pa]
  std::vector<double> Sw;            // current inner iterate S^k
  std::vector<double> Sw_prev1;      // S^{k-1}
  std::vector<double> Sw_prev2;      // S^{k-2}
  std::vector<double> Sw_step_start; // S^n
  std::vector<double> u_t, u_w, u_nw;    // interior face velocities [m/s]
  std::vector<double> bu_t, bu_w, bu_nw; // outflow boundary face velocities
  double t = 0.0;
  double dt = 0.0;
};

struct SolverConfig {
  double outer_tol_mass = 1e-3; // relative mass-balance criterion
  double outer_tol_dsat = 1e-2; // ||dS||_inf criterion
  int max_outer = 30;
  int max_inner = 10;
  double beta = 0.4;      // relaxation history exponent
  double omega_min = 0.1;
  double omega_max = 1.0;
  double cg_tol = 1e-10;
  int cg_max_iter = 0; // 0: automatic

  void validate() const;
};

// One row per outer nonlinear iteration; the exchange record consumed by
// datagen and the CLI.
struct IterationRecord {
  int step = 0;
  int outer = 0; // 1-based within the step
  double omega0 = 1.0;
  int inner = 0;
  double residual_before = 0.0;
  double residual_after = 0.0;
  bool converged = false;
  double mass_error = 0.0;
  double ds_inf = 0.0;
  FeatureVector features;
  // Online-learning event fired by this iteration's outcome report, if any.
  bool update_occurred = false;
  int update_index = 0;
  double update_rmse_before = 0.0;
  double update_rmse_after = 0.0;
};

struct StepSummary {
  int index = 0;
  double t_end = 0.0;
  double dt = 0.0;
  int outer = 0;
  int inner_total = 0;
  bool converged = false;
  double mass_error = 0.0;
  double ds_inf = 0.0;
  double sw_min = 0.0;
  double sw_max = 0.0;
};

struct Schedule {
  double end_time = 0.0; // [s]
  double dt0 = 0.0;      // [s]
  int max_steps = 1000;
  double dt_max_factor = 4.0;    // cap relative to dt0
  double dt_min_factor = 1.0 / 64.0;
  int easy_outer_threshold = 3;  // a step is "easy" at <= this many outers
  int grow_after = 5;            // consecutive easy steps before growth
  double grow_factor = 1.25;
  double halve_factor = 0.5;     // applied after a non-converged step

  void validate() const;
};

struct SimulationReport {
  std::vector<StepSummary> steps; // accepted steps only
  std::vector<IterationRecord> records; // includes rejected attempts
  int rejected_steps = 0;
  long total_outer = 0;
  long total_inner = 0;
  double total_metric = 0.0; // outer + inner/3
  double wall_seconds = 0.0;
  bool all_converged = true;
  std::vector<double> final_p;
  std::vector<double> final_sw;
};

// records.csv: fixed columns then the 17 feature columns (docs/file_formats.md).
std::string records_csv_header();
void write_records_csv(const std::vector<IterationRecord>& records,
                       const std::filesystem::path& path);

// report.json: step summaries, totals, final fields.
void write_report_json(const SimulationReport& report, const std::string& label,
                       const std::filesystem::path& path);

} // namespace pmflow
