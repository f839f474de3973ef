#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <pmflow/controller.hpp>
#include <pmflow/model.hpp>
#include <pmflow/rng.hpp>
#include <pmflow/solver.hpp>

namespace pmtest {

// Unique scratch directory removed on scope exit.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("pmflow_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

inline bool approx_rel(double a, double b, double rel) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) <= rel * scale;
}

// Two-cell 1D bar with unit geometry, no gravity, no capillarity. Tests
// assign permeability/fluids as needed.
inline pmflow::ReservoirModel two_cell_bar() {
  pmflow::ReservoirModel m = pmflow::build_grid(2, 1, 1, 1.0, 1.0, 1.0);
  m.gravity = {0.0, 0.0, 0.0};
  m.rock_fluid.pe = 0.0;
  m.bc.inflow_flux = 0.0;
  m.bc.outflow_pressure = 0.0;
  return m;
}

// Test-case-1 state evolved over a few fixed steps with a converging fixed
// relaxation; gives feature tests a state with real velocity/saturation
// structure.
struct EvolvedCase {
  pmflow::ReservoirModel model = pmflow::build_test_case_1();
  pmflow::FaceGrid faces{model};
  pmflow::FeatureExtractor extractor{model, faces};
  pmflow::SimulationState state;
  double residual = 0.0;
  double residual_old = 0.0;
  int inner_prev = 0;

  explicit EvolvedCase(int n_steps, double dt = 1.8e4) {
    state = pmflow::make_initial_state(model, faces);
    pmflow::FixedOmegaController controller(0.35);
    pmflow::SolverConfig cfg;
    std::vector<pmflow::IterationRecord> records;
    for (int s = 0; s < n_steps; ++s) {
      state.dt = dt;
      pmflow::advance_timestep(model, faces, extractor, state, controller, cfg, s,
                               records, residual, inner_prev);
      state.t += dt;
    }
    if (!records.empty()) {
      residual = records.back().residual_after;
      residual_old = records.back().residual_before;
    }
  }
};

} // namespace pmtest
