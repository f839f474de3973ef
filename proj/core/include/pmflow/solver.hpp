#pragma once

#include <vector>

#include "pmflow/controller.hpp"
#include "pmflow/linalg.hpp"
#include "pmflow/model.hpp"
#include "pmflow/sim_types.hpp"

namespace pmflow {

// Initial state: pressure at the outflow value, saturation at Swi.
SimulationState make_initial_state(const ReservoirModel& m, const FaceGrid& faces);

struct PressureSystem {
  SparseMatrix A;
  std::vector<double> rhs;
};

// TPFA pressure equation with phase-potential-upwinded mobilities frozen at
// the current state; capillary and gravity terms on the right-hand side.
PressureSystem assemble_pressure(const ReservoirModel& m, const FaceGrid& faces,
                                 const SimulationState& state);

void solve_pressure(const ReservoirModel& m, const FaceGrid& faces,
                    SimulationState& state, const SolverConfig& cfg);

// Phase Darcy velocities on every face from the current pressure/saturation,
// upwinded per phase potential; u_t = u_w + u_nw.
void compute_velocities(const ReservoirModel& m, const FaceGrid& faces,
                        SimulationState& state);

// One Picard-linearized implicit-Euler transport solve: advective and
// gravity/capillary fluxes frozen at the current iterate, an SPD implicit
// capillary stabilization applied as deferred correction. Returns the
// unrelaxed candidate S-tilde.
std::vector<double> transport_solve(const ReservoirModel& m, const FaceGrid& faces,
                                    const SimulationState& state, double dt,
                                    const SolverConfig& cfg);

// Normalized L2 imbalance of the wetting transport equation at the current
// state (the "residual" feature).
double transport_residual_norm(const ReservoirModel& m, const FaceGrid& faces,
                               const SimulationState& state);

// S = omega S~ + (1-omega) S^{k-1} + (1-omega)^{beta+1} omega (S^{k-2} - S^{k-1}),
// clamped to [0,1].
std::vector<double> apply_relaxation(const std::vector<double>& s_tilde,
                                     const std::vector<double>& s_prev1,
                                     const std::vector<double>& s_prev2, double omega,
                                     double beta);

// Aitken update from the last two inner residuals R^k = S~^k - S^{k-1};
// returns omega_prev on insufficient history or zero denominator.
double inner_relaxation_update(const std::vector<double>& r_prev,
                               const std::vector<double>& r_cur, double omega_prev,
                               double omega_min, double omega_max);

struct InnerResult {
  int count = 0;
  double ds_inf = 0.0; // last ||S^k - S^{k-1}||_inf
};

// Saturation/velocity fixed-point loop: transport -> relaxation -> velocity
// until ||dS||_inf < outer_tol_dsat or max_inner.
InnerResult inner_loop(const ReservoirModel& m, const FaceGrid& faces,
                       SimulationState& state, double omega0, const SolverConfig& cfg);

struct ConvergenceVerdict {
  double mass_error = 0.0; // relative wetting-mass imbalance over the step
  double ds_inf = 0.0;     // vs the previous outer iterate
  bool converged = false;
};

ConvergenceVerdict check_convergence(const ReservoirModel& m, const FaceGrid& faces,
                                     const SimulationState& state,
                                     const std::vector<double>& sw_prev_outer,
                                     const SolverConfig& cfg);

struct StepResult {
  bool converged = false;
  int outer = 0;
  int inner_total = 0;
  double mass_error = 0.0;
  double ds_inf = 0.0;
};

// One time step: pressure -> velocities -> controller -> inner loop ->
// convergence check, up to max_outer. Non-convergence is accepted and
// flagged; the caller halves dt. Appends one IterationRecord per outer
// iteration and reports every outcome to the controller.
StepResult advance_timestep(const ReservoirModel& m, const FaceGrid& faces,
                            const FeatureExtractor& extractor, SimulationState& state,
                            RelaxationController& controller, const SolverConfig& cfg,
                            int step_index, std::vector<IterationRecord>& records,
                            double& residual_prev, int& inner_prev);

SimulationReport run_simulation(const ReservoirModel& m, RelaxationController& controller,
                                const Schedule& schedule, const SolverConfig& cfg = {});

} // namespace pmflow
