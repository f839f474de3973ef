#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pmflow/mlcore.hpp"
#include "pmflow/model.hpp"
#include "pmflow/sim_types.hpp"

namespace pmflow {

// Perturbation ranges around the layered water-flood case. Permeabilities and
// the kz/kx ratio are drawn log-uniformly, everything else uniformly; a range
// with min == max yields exactly that value (so all-degenerate ranges
// reproduce build_test_case_1 bit for bit).
struct ScenarioRanges {
  double kx_upper_md_min = 1.0, kx_upper_md_max = 1000.0; // log-uniform [mD]
  double kx_lower_md_min = 1.0, kx_lower_md_max = 1000.0; // log-uniform [mD]
  double kz_ratio_min = 0.01, kz_ratio_max = 1.0;          // log-uniform kz/kx
  double phi_upper_min = 0.05, phi_upper_max = 0.35;
  double phi_lower_min = 0.05, phi_lower_max = 0.35;
  double visc_ratio_min = 1.0, visc_ratio_max = 20.0; // mu_nw / mu_w
  double pe_min = 0.0, pe_max = 5000.0;               // entry pressure [Pa]
  double n_exp_min = 1.0, n_exp_max = 3.0;            // relperm exponent
  double krw_end_min = 0.5, krw_end_max = 1.0;
  double krnw_end_min = 0.5, krnw_end_max = 1.0;
  double g_mag_min = 0.0, g_mag_max = 9.81;     // [m/s^2]
  double tilt_deg_min = 0.0, tilt_deg_max = 30; // gravity tilt into +x
  double cfl_target_min = 0.1, cfl_target_max = 20.0; // sets dt
  double omega_min = 0.1, omega_max = 1.0; // fixed omega used during the run

  // Resolution of the scenario grid over the base case's 100 m x 40 m slice.
  // Defaults are a coarse analog sized for bulk generation; degenerate ranges
  // use the base case's own 50 x 20.
  int nx = 20, nz = 8;

  void validate() const;

  // Degenerate ranges pinned to the layered base case.
  static ScenarioRanges degenerate_base_case();
};

struct Scenario {
  // Raw draws, in sampling order (coverage checks read these).
  double kx_upper_md = 0, kx_lower_md = 0, kz_ratio = 0;
  double phi_upper = 0, phi_lower = 0, visc_ratio = 0, pe = 0, n_exp = 0;
  double krw_end = 0, krnw_end = 0, g_mag = 0, tilt_deg = 0;
  double cfl_target = 0, omega_fixed = 0;

  ReservoirModel model;
  double dt = 0; // dt0 placing the inlet-cell CFL at cfl_target
};

Scenario sample_scenario(const ScenarioRanges& ranges, std::uint64_t seed);

// Reads ranges from a JSON file: each range key maps to [min, max] (e.g.
// "kx_upper_md": [1, 1000]), "nx"/"nz" to integers. Missing keys keep their
// defaults; unknown keys are an error.
ScenarioRanges load_scenario_ranges(const std::filesystem::path& path);

struct DatagenOptions {
  int n_sims = 200;
  int n_steps = 12; // fixed-dt schedule length per scenario run
  double train_fraction = 0.8;
  std::uint64_t seed = 7;
  unsigned n_threads = 0; // 0: hardware concurrency
  ScenarioRanges ranges;
};

struct DatagenSummary {
  int n_sims = 0;
  int n_skipped = 0; // scenarios whose run threw (logged, not fatal)
  long n_rows = 0;
  long n_train_rows = 0;
  long n_test_rows = 0;
  std::vector<std::filesystem::path> sim_files;
  std::filesystem::path train_path;
  std::filesystem::path test_path;
};

// Runs every scenario with its fixed omega, harvests one TrainingSample per
// outer nonlinear iteration, writes one CSV per simulation under
// out_dir/sims/ plus a coverage summary.json.
DatagenSummary generate_dataset(const DatagenOptions& opts,
                                const std::filesystem::path& out_dir);

// Simulation-atomic shuffled split of out_dir/sims/*.csv into train.csv and
// test.csv (rows of one simulation never straddle the split).
std::pair<std::filesystem::path, std::filesystem::path>
split_dataset(const std::filesystem::path& out_dir, double fraction,
              std::uint64_t seed);

std::string dataset_csv_header();
std::string dataset_csv_rows(std::span<const TrainingSample> samples);
std::vector<TrainingSample> read_dataset_csv(const std::filesystem::path& path);

} // namespace pmflow
