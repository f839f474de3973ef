#include "pmflow/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pmflow/sim_types.hpp"

namespace pmflow {

namespace {
constexpr double kVelEps = 1e-30;

int axis_of(FaceSide side) {
  switch (side) {
    case FaceSide::XMin:
    case FaceSide::XMax: return 0;
    case FaceSide::YMin:
    case FaceSide::YMax: return 1;
    default: return 2;
  }
}
} // namespace

FeatureExtractor::FeatureExtractor(const ReservoirModel& model, const FaceGrid& faces)
    : model_(model), faces_(faces) {
  const double lx = model.nx * model.dx;
  const double lz = model.nz * model.dz;
  const double mean_kx =
      std::accumulate(model.kx.begin(), model.kx.end(), 0.0) / model.kx.size();
  const double mean_kz =
      std::accumulate(model.kz.begin(), model.kz.end(), 0.0) / model.kz.size();
  aspect_ratio_ = (lx / lz) * std::sqrt(mean_kz / mean_kx);

  max_fw_slope_ = max_fw_slope(model.rock_fluid, model.fluid);
  shock_sat_ = welge_shock_saturation(model.rock_fluid, model.fluid);
  const double lt_shock = total_mobility(shock_sat_, model.rock_fluid, model.fluid);
  const double lt_init =
      total_mobility(model.rock_fluid.swi, model.rock_fluid, model.fluid);
  shock_mobility_ratio_ = lt_shock / lt_init;

  inj_flux_ = model.bc.inflow_flux;
  main_axis_ = axis_of(model.bc.inflow_face);
}

CflResult FeatureExtractor::cfl_field(const SimulationState& state) const {
  CflResult r;
  r.field.assign(static_cast<std::size_t>(model_.n_cells()), 0.0);
  for (std::size_t i = 0; i < faces_.interior.size(); ++i) {
    const auto& f = faces_.interior[i];
    const double U = state.u_t[i] * f.area;
    if (U > 0)
      r.field[f.a] += U;
    else
      r.field[f.b] -= U;
  }
  for (std::size_t i = 0; i < faces_.outflow.size(); ++i) {
    const double U = state.bu_t[i] * faces_.outflow[i].area;
    if (U > 0) r.field[faces_.outflow[i].cell] += U;
  }
  const double vol = model_.cell_volume();
  for (int c = 0; c < model_.n_cells(); ++c) {
    r.field[c] *= state.dt / (model_.phi[c] * vol);
    r.max = std::max(r.max, r.field[c]);
  }
  return r;
}

ShockFrontCfl FeatureExtractor::shock_front_cfl(const CflResult& cfl) const {
  ShockFrontCfl s;
  if (cfl.max <= 0.0) return s;
  s.max = cfl.max * max_fw_slope_;
  s.number_ratio = s.max / std::max(cfl.max, kVelEps);
  return s;
}

std::pair<double, double>
FeatureExtractor::mobility_features(const SimulationState& state) const {
  double sum = 0.0;
  for (int c = 0; c < model_.n_cells(); ++c)
    sum += total_mobility(state.Sw[c], model_.rock_fluid, model_.fluid);
  const double avg = sum / model_.n_cells() * model_.fluid.mu_nw;
  return {avg, shock_mobility_ratio_};
}

std::pair<double, double>
FeatureExtractor::capillary_numbers(const SimulationState& state) const {
  double sum_long = 0.0, sum_trans = 0.0;
  std::size_t n_long = 0, n_trans = 0;
  for (std::size_t i = 0; i < faces_.interior.size(); ++i) {
    const auto& f = faces_.interior[i];
    const bool longitudinal = f.axis == main_axis_;
    (longitudinal ? n_long : n_trans)++;
    const double un = std::abs(state.u_t[i]);
    if (un < kVelEps) continue;
    const double lt = 0.5 * (total_mobility(state.Sw[f.a], model_.rock_fluid, model_.fluid) +
                             total_mobility(state.Sw[f.b], model_.rock_fluid, model_.fluid));
    const double k_face = f.tran * f.dist / f.area;
    const double dpc = std::abs(capillary_pressure(state.Sw[f.b], model_.rock_fluid) -
                                capillary_pressure(state.Sw[f.a], model_.rock_fluid));
    const double n_cap = lt * k_face * dpc / (un * f.dist);
    (longitudinal ? sum_long : sum_trans) += n_cap;
  }
  return {n_long ? sum_long / n_long : 0.0, n_trans ? sum_trans / n_trans : 0.0};
}

std::array<double, 3>
FeatureExtractor::buoyancy_numbers(const SimulationState& state) const {
  const auto& g = model_.gravity;
  const double gmag = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
  const double drho = std::abs(model_.fluid.rho_nw - model_.fluid.rho_w);
  if (gmag == 0.0 || drho == 0.0) return {0.0, 0.0, 0.0};

  double sum_all = 0.0, sum_long = 0.0, sum_trans = 0.0;
  std::size_t n_all = faces_.interior.size(), n_long = 0, n_trans = 0;
  for (std::size_t i = 0; i < faces_.interior.size(); ++i) {
    const auto& f = faces_.interior[i];
    const bool longitudinal = f.axis == main_axis_;
    (longitudinal ? n_long : n_trans)++;
    const double un = std::abs(state.u_t[i]);
    if (un < kVelEps) continue;
    const double lt = 0.5 * (total_mobility(state.Sw[f.a], model_.rock_fluid, model_.fluid) +
                             total_mobility(state.Sw[f.b], model_.rock_fluid, model_.fluid));
    const double k_face = f.tran * f.dist / f.area;
    // |z-hat . n-hat| for an axis-aligned face normal.
    const double align = std::abs(g[f.axis]) / gmag;
    const double n_b = drho * gmag * lt * k_face * align / un;
    sum_all += n_b;
    (longitudinal ? sum_long : sum_trans) += n_b;
  }
  return {n_all ? sum_all / n_all : 0.0, n_long ? sum_long / n_long : 0.0,
          n_trans ? sum_trans / n_trans : 0.0};
}

double FeatureExtractor::artificial_diffusion_number(const SimulationState& state,
                                                     const CflResult& cfl) const {
  // Cell-centered speed from the average of available face velocities per axis.
  const int n = model_.n_cells();
  std::vector<std::array<double, 3>> vsum(static_cast<std::size_t>(n), {0, 0, 0});
  std::vector<std::array<int, 3>> vcount(static_cast<std::size_t>(n), {0, 0, 0});
  for (std::size_t i = 0; i < faces_.interior.size(); ++i) {
    const auto& f = faces_.interior[i];
    const double u = std::abs(state.u_t[i]);
    vsum[f.a][f.axis] += u;
    vcount[f.a][f.axis]++;
    vsum[f.b][f.axis] += u;
    vcount[f.b][f.axis]++;
  }
  for (std::size_t i = 0; i < faces_.outflow.size(); ++i) {
    const auto& bf = faces_.outflow[i];
    vsum[bf.cell][bf.axis] += std::abs(state.bu_t[i]);
    vcount[bf.cell][bf.axis]++;
  }

  double sum = 0.0;
  for (int c = 0; c < n; ++c) {
    double speed2 = 0.0;
    for (int axis = 0; axis < 3; ++axis)
      if (vcount[c][axis] > 0) {
        const double u = vsum[c][axis] / vcount[c][axis];
        speed2 += u * u;
      }
    const double speed = std::sqrt(speed2);
    const double d = std::max(0.0, 0.5 * speed * model_.dx * (1.0 - cfl.field[c]));
    sum += d * state.dt / (model_.phi[c] * model_.dx * model_.dx);
  }
  return sum / n;
}

FeatureVector FeatureExtractor::extract(const SimulationState& state, double residual,
                                        double residual_old, int inner_prev) const {
  FeatureVector f;
  const CflResult cfl = cfl_field(state);
  const ShockFrontCfl sf = shock_front_cfl(cfl);
  const auto [avg_mob, mob_ratio] = mobility_features(state);
  const auto [cap_long, cap_trans] = capillary_numbers(state);
  const auto buoy = buoyancy_numbers(state);

  double vel_sum = 0.0;
  for (double u : state.u_t) vel_sum += std::abs(u);
  const double avg_vel = state.u_t.empty()
                             ? 0.0
                             : vel_sum / state.u_t.size() / std::max(inj_flux_, kVelEps);

  f[kEffectiveAspectRatio] = aspect_ratio_;
  f[kAvgDarcyVelocity] = avg_vel;
  f[kAvgTotalMobility] = avg_mob;
  f[kMaxCfl] = cfl.max;
  f[kMaxShockFrontCfl] = sf.max;
  f[kShockFrontNumberRatio] = sf.number_ratio;
  f[kAvgShockFrontMobilityRatio] = mob_ratio;
  f[kAvgLongCapillary] = cap_long;
  f[kAvgTransCapillary] = cap_trans;
  f[kAvgBuoyancy] = buoy[0];
  f[kAvgLongBuoyancy] = buoy[1];
  f[kAvgTransBuoyancy] = buoy[2];
  f[kAvgArtificialDiffusion] = artificial_diffusion_number(state, cfl);
  f[kResidual] = residual;
  f[kResidualOld] = residual_old;
  f[kResidualRatio] = residual_old > 0.0 ? residual / residual_old : 1.0;
  f[kInnerItersPrev] = inner_prev;

  for (int i = 0; i < kFeatureCount; ++i)
    if (!std::isfinite(f[i])) throw FeatureError(kFeatureNames[i]);
  return f;
}

} // namespace pmflow
