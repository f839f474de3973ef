#include "pmflow/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace pmflow {

void SolverConfig::validate() const {
  if (outer_tol_mass <= 0 || outer_tol_dsat <= 0 || cg_tol <= 0)
    throw std::invalid_argument("SolverConfig: tolerances must be positive");
  if (max_outer < 1 || max_inner < 1)
    throw std::invalid_argument("SolverConfig: iteration caps must be >= 1");
  if (!(omega_min > 0) || omega_min > omega_max || omega_max > 1.0)
    throw std::invalid_argument("SolverConfig: need 0 < omega_min <= omega_max <= 1");
  if (beta < 0) throw std::invalid_argument("SolverConfig: beta must be >= 0");
}

void Schedule::validate() const {
  if (end_time < 0) throw std::invalid_argument("Schedule: end_time must be >= 0");
  if (end_time > 0 && dt0 <= 0)
    throw std::invalid_argument("Schedule: dt0 must be positive");
  if (max_steps < 0) throw std::invalid_argument("Schedule: max_steps must be >= 0");
  if (grow_factor < 1.0 || halve_factor <= 0 || halve_factor >= 1.0)
    throw std::invalid_argument("Schedule: bad dt adaptation factors");
}

SimulationState make_initial_state(const ReservoirModel& m, const FaceGrid& faces) {
  SimulationState s;
  const std::size_t n = static_cast<std::size_t>(m.n_cells());
  s.p.assign(n, m.bc.outflow_pressure);
  s.Sw.assign(n, m.rock_fluid.swi);
  s.Sw_prev1 = s.Sw;
  s.Sw_prev2 = s.Sw;
  s.Sw_step_start = s.Sw;
  s.u_t.assign(faces.interior.size(), 0.0);
  s.u_w.assign(faces.interior.size(), 0.0);
  s.u_nw.assign(faces.interior.size(), 0.0);
  s.bu_t.assign(faces.outflow.size(), 0.0);
  s.bu_w.assign(faces.outflow.size(), 0.0);
  s.bu_nw.assign(faces.outflow.size(), 0.0);
  return s;
}

namespace {

struct FaceMobility {
  double lw;  // upwinded wetting mobility
  double lnw; // upwinded non-wetting mobility
};

// Phase-potential upwinding of mobilities across an interior face.
FaceMobility upwind_mobilities(const ReservoirModel& m, const SimulationState& st,
                               const FaceGrid::Face& f) {
  const auto& rf = m.rock_fluid;
  const auto& fl = m.fluid;
  const double dp = st.p[f.a] - st.p[f.b];
  const double dphi_w = dp - fl.rho_w * f.dgpot;
  const double pc_a = capillary_pressure(st.Sw[f.a], rf);
  const double pc_b = capillary_pressure(st.Sw[f.b], rf);
  const double dphi_nw = dp + (pc_a - pc_b) - fl.rho_nw * f.dgpot;
  const double sw_up_w = dphi_w >= 0.0 ? st.Sw[f.a] : st.Sw[f.b];
  const double sw_up_nw = dphi_nw >= 0.0 ? st.Sw[f.a] : st.Sw[f.b];
  return {mobility_w(sw_up_w, rf, fl), mobility_nw(sw_up_nw, rf, fl)};
}

} // namespace

PressureSystem assemble_pressure(const ReservoirModel& m, const FaceGrid& faces,
                                 const SimulationState& state) {
  const int n = m.n_cells();
  if (faces.outflow.empty())
    throw std::invalid_argument("assemble_pressure: no pressure boundary (singular)");

  std::vector<Triplet> trip;
  trip.reserve(faces.interior.size() * 4 + static_cast<std::size_t>(n));
  std::vector<double> rhs(static_cast<std::size_t>(n), 0.0);

  const auto& rf = m.rock_fluid;
  const auto& fl = m.fluid;

  for (const auto& f : faces.interior) {
    const FaceMobility mob = upwind_mobilities(m, state, f);
    const double lt = mob.lw + mob.lnw;
    const double c = f.tran * lt;
    trip.push_back({f.a, f.a, c});
    trip.push_back({f.b, f.b, c});
    trip.push_back({f.a, f.b, -c});
    trip.push_back({f.b, f.a, -c});

    // Known contributions of the total flux a->b:
    //   T lnw (pc_a - pc_b) - T (lw rho_w + lnw rho_nw) dgpot
    const double pc_a = capillary_pressure(state.Sw[f.a], rf);
    const double pc_b = capillary_pressure(state.Sw[f.b], rf);
    const double known = f.tran * mob.lnw * (pc_a - pc_b) -
                         f.tran * (mob.lw * fl.rho_w + mob.lnw * fl.rho_nw) * f.dgpot;
    rhs[f.a] -= known;
    rhs[f.b] += known;
  }

  for (const auto& bf : faces.inflow) rhs[bf.cell] += m.bc.inflow_flux * bf.area;

  for (const auto& bf : faces.outflow) {
    // Open boundary at fixed pressure; phase mobilities from the interior
    // cell, capillary pressure taken zero at the face.
    const double lw = mobility_w(state.Sw[bf.cell], rf, fl);
    const double lnw = mobility_nw(state.Sw[bf.cell], rf, fl);
    const double lt = lw + lnw;
    trip.push_back({bf.cell, bf.cell, bf.tran * lt});
    rhs[bf.cell] += bf.tran * lt * m.bc.outflow_pressure +
                    bf.tran * (lw * fl.rho_w + lnw * fl.rho_nw) * bf.dgpot_face;
  }

  return {SparseMatrix::from_triplets(n, trip, /*symmetric=*/true), std::move(rhs)};
}

void solve_pressure(const ReservoirModel& m, const FaceGrid& faces,
                    SimulationState& state, const SolverConfig& cfg) {
  PressureSystem sys = assemble_pressure(m, faces, state);
  CgOptions opts;
  opts.tol = cfg.cg_tol;
  opts.max_iter = cfg.cg_max_iter;
  opts.x0 = &state.p;
  state.p = solve_cg(sys.A, sys.rhs, opts).x;
}

void compute_velocities(const ReservoirModel& m, const FaceGrid& faces,
                        SimulationState& state) {
  const auto& rf = m.rock_fluid;
  const auto& fl = m.fluid;
  for (std::size_t i = 0; i < faces.interior.size(); ++i) {
    const auto& f = faces.interior[i];
    const double dp = state.p[f.a] - state.p[f.b];
    const double pc_a = capillary_pressure(state.Sw[f.a], rf);
    const double pc_b = capillary_pressure(state.Sw[f.b], rf);
    const double dphi_w = dp - fl.rho_w * f.dgpot;
    const double dphi_nw = dp + (pc_a - pc_b) - fl.rho_nw * f.dgpot;
    const double lw = mobility_w(dphi_w >= 0.0 ? state.Sw[f.a] : state.Sw[f.b], rf, fl);
    const double lnw =
        mobility_nw(dphi_nw >= 0.0 ? state.Sw[f.a] : state.Sw[f.b], rf, fl);
    state.u_w[i] = f.tran * lw * dphi_w / f.area;
    state.u_nw[i] = f.tran * lnw * dphi_nw / f.area;
    state.u_t[i] = state.u_w[i] + state.u_nw[i];
  }
  for (std::size_t i = 0; i < faces.outflow.size(); ++i) {
    const auto& bf = faces.outflow[i];
    const double dp = state.p[bf.cell] - m.bc.outflow_pressure;
    const double lw = mobility_w(state.Sw[bf.cell], rf, fl);
    const double lnw = mobility_nw(state.Sw[bf.cell], rf, fl);
    state.bu_w[i] = bf.tran * lw * (dp - fl.rho_w * bf.dgpot_face) / bf.area;
    state.bu_nw[i] = bf.tran * lnw * (dp - fl.rho_nw * bf.dgpot_face) / bf.area;
    state.bu_t[i] = state.bu_w[i] + state.bu_nw[i];
  }
}

namespace {

// Explicit wetting flux across interior face f at the current iterate:
// fractional-flow advection plus the gravity/capillary cross term.
double wetting_face_flux(const ReservoirModel& m, const SimulationState& st,
                         const FaceGrid::Face& f, double u_total) {
  const auto& rf = m.rock_fluid;
  const auto& fl = m.fluid;
  const double U = u_total * f.area;
  const double fw =
      fractional_flow(U >= 0.0 ? st.Sw[f.a] : st.Sw[f.b], rf, fl);

  // psi = pc + (rho_nw - rho_w) gpot drives the wetting phase toward higher
  // capillary pressure and upward against the denser phase.
  const double drho = fl.rho_nw - fl.rho_w;
  const double dpsi = (capillary_pressure(st.Sw[f.b], rf) -
                       capillary_pressure(st.Sw[f.a], rf)) +
                      drho * f.dgpot;
  const double sw_up = dpsi > 0.0 ? st.Sw[f.a] : st.Sw[f.b];
  const double w = fractional_flow(sw_up, rf, fl) * mobility_nw(sw_up, rf, fl);
  return fw * U + f.tran * w * dpsi;
}

// Implicit capillary stabilization coefficient (>= 0) for face f.
double capillary_diffusion_coeff(const ReservoirModel& m, const SimulationState& st,
                                 const FaceGrid::Face& f) {
  const auto& rf = m.rock_fluid;
  const auto& fl = m.fluid;
  if (rf.pe == 0.0) return 0.0;
  const double drho = fl.rho_nw - fl.rho_w;
  const double dpsi = (capillary_pressure(st.Sw[f.b], rf) -
                       capillary_pressure(st.Sw[f.a], rf)) +
                      drho * f.dgpot;
  const double sw_up = dpsi > 0.0 ? st.Sw[f.a] : st.Sw[f.b];
  const double w = fractional_flow(sw_up, rf, fl) * mobility_nw(sw_up, rf, fl);
  const double slope =
      0.5 * (-dpc_dsw(st.Sw[f.a], rf) - dpc_dsw(st.Sw[f.b], rf));
  return f.tran * w * std::max(slope, 0.0);
}

} // namespace

std::vector<double> transport_solve(const ReservoirModel& m, const FaceGrid& faces,
                                    const SimulationState& state, double dt,
                                    const SolverConfig& cfg) {
  if (!(dt > 0)) throw std::invalid_argument("transport_solve: dt must be positive");
  const int n = m.n_cells();
  const double vol = m.cell_volume();

  std::vector<Triplet> trip;
  std::vector<double> rhs(static_cast<std::size_t>(n), 0.0);
  trip.reserve(faces.interior.size() * 4 + static_cast<std::size_t>(n));

  for (int c = 0; c < n; ++c) {
    const double acc = m.phi[c] * vol / dt;
    trip.push_back({c, c, acc});
    rhs[c] = acc * state.Sw_step_start[c];
  }

  for (const auto& bf : faces.inflow) rhs[bf.cell] += m.bc.inflow_flux * bf.area;

  for (std::size_t i = 0; i < faces.interior.size(); ++i) {
    const auto& f = faces.interior[i];
    const double flux = wetting_face_flux(m, state, f, state.u_t[i]);
    rhs[f.a] -= flux;
    rhs[f.b] += flux;

    const double D = capillary_diffusion_coeff(m, state, f);
    if (D > 0.0) {
      trip.push_back({f.a, f.a, D});
      trip.push_back({f.b, f.b, D});
      trip.push_back({f.a, f.b, -D});
      trip.push_back({f.b, f.a, -D});
      // Deferred correction: the implicit diffusion acts on the *change*
      // from the current iterate, vanishing at the fixed point.
      const double dc = D * (state.Sw[f.a] - state.Sw[f.b]);
      rhs[f.a] += dc;
      rhs[f.b] -= dc;
    }
  }

  for (std::size_t i = 0; i < faces.outflow.size(); ++i) {
    const auto& bf = faces.outflow[i];
    rhs[bf.cell] -= state.bu_w[i] * bf.area;
  }

  const SparseMatrix A = SparseMatrix::from_triplets(n, trip, /*symmetric=*/true);
  CgOptions opts;
  opts.tol = cfg.cg_tol;
  opts.max_iter = cfg.cg_max_iter;
  opts.x0 = &state.Sw;
  return solve_cg(A, rhs, opts).x;
}

double transport_residual_norm(const ReservoirModel& m, const FaceGrid& faces,
                               const SimulationState& state) {
  const int n = m.n_cells();
  const double vol = m.cell_volume();
  const double dt = state.dt;
  if (!(dt > 0)) return 0.0;

  std::vector<double> r(static_cast<std::size_t>(n), 0.0);
  for (int c = 0; c < n; ++c)
    r[c] = m.phi[c] * vol * (state.Sw[c] - state.Sw_step_start[c]) / dt;

  for (std::size_t i = 0; i < faces.interior.size(); ++i) {
    const auto& f = faces.interior[i];
    const double flux = wetting_face_flux(m, state, f, state.u_t[i]);
    r[f.a] += flux;
    r[f.b] -= flux;
  }
  for (const auto& bf : faces.inflow) r[bf.cell] -= m.bc.inflow_flux * bf.area;
  for (std::size_t i = 0; i < faces.outflow.size(); ++i)
    r[faces.outflow[i].cell] += state.bu_w[i] * faces.outflow[i].area;

  double inj_rate = 0.0;
  for (const auto& bf : faces.inflow) inj_rate += m.bc.inflow_flux * bf.area;
  const double inj_volume = inj_rate * dt;
  return norm2(r) * dt / std::max(inj_volume, 1e-30);
}

std::vector<double> apply_relaxation(const std::vector<double>& s_tilde,
                                     const std::vector<double>& s_prev1,
                                     const std::vector<double>& s_prev2, double omega,
                                     double beta) {
  if (s_tilde.size() != s_prev1.size() || s_tilde.size() != s_prev2.size())
    throw std::invalid_argument("apply_relaxation: array size mismatch");
  if (!(omega >= 0.0) || omega > 1.0)
    throw std::invalid_argument("apply_relaxation: omega must be in [0,1]");
  const double hist = std::pow(1.0 - omega, beta + 1.0) * omega;
  std::vector<double> out(s_tilde.size());
  for (std::size_t i = 0; i < s_tilde.size(); ++i) {
    const double s = omega * s_tilde[i] + (1.0 - omega) * s_prev1[i] +
                     hist * (s_prev2[i] - s_prev1[i]);
    out[i] = std::clamp(s, 0.0, 1.0);
  }
  return out;
}

double inner_relaxation_update(const std::vector<double>& r_prev,
                               const std::vector<double>& r_cur, double omega_prev,
                               double omega_min, double omega_max) {
  if (r_prev.size() != r_cur.size())
    throw std::invalid_argument("inner_relaxation_update: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < r_prev.size(); ++i) {
    const double d = r_cur[i] - r_prev[i];
    num += r_prev[i] * d;
    den += d * d;
  }
  if (den == 0.0) return omega_prev;
  return std::clamp(-omega_prev * num / den, omega_min, omega_max);
}

InnerResult inner_loop(const ReservoirModel& m, const FaceGrid& faces,
                       SimulationState& state, double omega0, const SolverConfig& cfg) {
  state.Sw_prev1 = state.Sw;
  state.Sw_prev2 = state.Sw;

  double omega = std::clamp(omega0, cfg.omega_min, cfg.omega_max);
  std::vector<double> r_prev;
  InnerResult result;

  for (int k = 1; k <= cfg.max_inner; ++k) {
    std::vector<double> s_tilde = transport_solve(m, faces, state, state.dt, cfg);
    std::vector<double> r_cur(s_tilde.size());
    for (std::size_t i = 0; i < s_tilde.size(); ++i) r_cur[i] = s_tilde[i] - state.Sw[i];

    if (k > 1)
      omega = inner_relaxation_update(r_prev, r_cur, omega, cfg.omega_min, cfg.omega_max);

    std::vector<double> s_new =
        apply_relaxation(s_tilde, state.Sw, state.Sw_prev2, omega, cfg.beta);

    double ds = 0.0;
    for (std::size_t i = 0; i < s_new.size(); ++i)
      ds = std::max(ds, std::abs(s_new[i] - state.Sw[i]));

    state.Sw_prev2 = state.Sw_prev1;
    state.Sw_prev1 = state.Sw;
    state.Sw = std::move(s_new);
    compute_velocities(m, faces, state);

    r_prev = std::move(r_cur);
    result.count = k;
    result.ds_inf = ds;
    if (ds < cfg.outer_tol_dsat) break;
  }
  return result;
}

ConvergenceVerdict check_convergence(const ReservoirModel& m, const FaceGrid& faces,
                                     const SimulationState& state,
                                     const std::vector<double>& sw_prev_outer,
                                     const SolverConfig& cfg) {
  ConvergenceVerdict v;
  const double vol = m.cell_volume();

  double mass_in = 0.0;
  for (const auto& bf : faces.inflow) mass_in += m.bc.inflow_flux * bf.area * state.dt;
  double mass_out = 0.0;
  for (std::size_t i = 0; i < faces.outflow.size(); ++i)
    mass_out += state.bu_w[i] * faces.outflow[i].area * state.dt;
  double accum = 0.0;
  for (int c = 0; c < m.n_cells(); ++c)
    accum += m.phi[c] * vol * (state.Sw[c] - state.Sw_step_start[c]);

  v.mass_error = std::abs(mass_in - mass_out - accum) / std::max(mass_in, 1e-30);
  for (std::size_t i = 0; i < state.Sw.size(); ++i)
    v.ds_inf = std::max(v.ds_inf, std::abs(state.Sw[i] - sw_prev_outer[i]));
  v.converged = v.mass_error < cfg.outer_tol_mass && v.ds_inf < cfg.outer_tol_dsat;
  return v;
}

StepResult advance_timestep(const ReservoirModel& m, const FaceGrid& faces,
                            const FeatureExtractor& extractor, SimulationState& state,
                            RelaxationController& controller, const SolverConfig& cfg,
                            int step_index, std::vector<IterationRecord>& records,
                            double& residual_prev, int& inner_prev) {
  state.Sw_step_start = state.Sw;
  StepResult result;

  for (int outer = 1; outer <= cfg.max_outer; ++outer) {
    solve_pressure(m, faces, state, cfg);
    compute_velocities(m, faces, state);

    const double residual_before = transport_residual_norm(m, faces, state);
    const FeatureVector feats =
        extractor.extract(state, residual_before, residual_prev, inner_prev);
    const double omega0 = controller.select_omega(feats);

    const std::vector<double> sw_prev_outer = state.Sw;
    const InnerResult inner = inner_loop(m, faces, state, omega0, cfg);
    const double residual_after = transport_residual_norm(m, faces, state);
    const ConvergenceVerdict verdict =
        check_convergence(m, faces, state, sw_prev_outer, cfg);

    IterationRecord rec;
    rec.step = step_index;
    rec.outer = outer;
    rec.omega0 = omega0;
    rec.inner = inner.count;
    rec.residual_before = residual_before;
    rec.residual_after = residual_after;
    rec.converged = verdict.converged;
    rec.mass_error = verdict.mass_error;
    rec.ds_inf = verdict.ds_inf;
    rec.features = feats;
    if (auto ev = controller.report_outcome(feats, omega0, inner.count)) {
      rec.update_occurred = true;
      rec.update_index = ev->update_index;
      rec.update_rmse_before = ev->rmse_before;
      rec.update_rmse_after = ev->rmse_after;
    }
    records.push_back(std::move(rec));

    residual_prev = residual_before;
    inner_prev = inner.count;
    result.outer = outer;
    result.inner_total += inner.count;
    result.mass_error = verdict.mass_error;
    result.ds_inf = verdict.ds_inf;
    if (verdict.converged) {
      result.converged = true;
      break;
    }
  }
  return result;
}

SimulationReport run_simulation(const ReservoirModel& m, RelaxationController& controller,
                                const Schedule& schedule, const SolverConfig& cfg) {
  m.validate();
  cfg.validate();
  schedule.validate();

  const auto t_start = std::chrono::steady_clock::now();
  const FaceGrid faces(m);
  const FeatureExtractor extractor(m, faces);
  SimulationState state = make_initial_state(m, faces);

  SimulationReport report;
  double dt_candidate = schedule.dt0;
  const double dt_max = schedule.dt0 * schedule.dt_max_factor;
  const double dt_min = schedule.dt0 * schedule.dt_min_factor;
  int easy_streak = 0;
  double residual_prev = 0.0;
  int inner_prev = 0;

  for (int attempt = 0; attempt < schedule.max_steps; ++attempt) {
    const double remaining = schedule.end_time - state.t;
    if (remaining <= schedule.end_time * 1e-12) break;
    state.dt = std::min(dt_candidate, remaining);

    const int step_label = static_cast<int>(report.steps.size());
    const SimulationState saved = state;
    const double saved_residual_prev = residual_prev;
    const int saved_inner_prev = inner_prev;

    const StepResult sr = advance_timestep(m, faces, extractor, state, controller, cfg,
                                           step_label, report.records, residual_prev,
                                           inner_prev);
    report.total_outer += sr.outer;
    report.total_inner += sr.inner_total;

    const bool at_floor = state.dt <= dt_min * (1.0 + 1e-9);
    if (!sr.converged && !at_floor) {
      // Reject: roll back and retry the same interval with a smaller step.
      // The attempt's iteration records are kept (failed steps carry the
      // most informative training labels).
      const double attempted_dt = state.dt;
      state = saved;
      residual_prev = saved_residual_prev;
      inner_prev = saved_inner_prev;
      dt_candidate = std::max(attempted_dt * schedule.halve_factor, dt_min);
      easy_streak = 0;
      ++report.rejected_steps;
      continue;
    }

    state.t += state.dt;

    StepSummary ss;
    ss.index = step_label;
    ss.t_end = state.t;
    ss.dt = state.dt;
    ss.outer = sr.outer;
    ss.inner_total = sr.inner_total;
    ss.converged = sr.converged;
    ss.mass_error = sr.mass_error;
    ss.ds_inf = sr.ds_inf;
    ss.sw_min = *std::min_element(state.Sw.begin(), state.Sw.end());
    ss.sw_max = *std::max_element(state.Sw.begin(), state.Sw.end());
    report.steps.push_back(ss);

    if (!sr.converged) {
      report.all_converged = false;
      easy_streak = 0;
    } else if (sr.outer <= schedule.easy_outer_threshold) {
      if (++easy_streak >= schedule.grow_after) {
        dt_candidate = std::min(dt_candidate * schedule.grow_factor, dt_max);
        easy_streak = 0;
      }
    } else {
      easy_streak = 0;
    }
  }

  report.total_metric = total_iteration_metric(report.records);
  report.final_p = state.p;
  report.final_sw = state.Sw;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

} // namespace pmflow
