#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pmflow/model.hpp"

namespace pmflow {

struct SimulationState;

inline constexpr int kFeatureCount = 17;

// Frozen feature order; CSV headers and model predictor indices follow it.
// Index 17 (one past the end) is the relaxation omega in training matrices.
enum FeatureIndex : int {
  kEffectiveAspectRatio = 0,
  kAvgDarcyVelocity,
  kAvgTotalMobility,
  kMaxCfl,
  kMaxShockFrontCfl,
  kShockFrontNumberRatio,
  kAvgShockFrontMobilityRatio,
  kAvgLongCapillary,
  kAvgTransCapillary,
  kAvgBuoyancy,
  kAvgLongBuoyancy,
  kAvgTransBuoyancy,
  kAvgArtificialDiffusion,
  kResidual,
  kResidualOld,
  kResidualRatio,
  kInnerItersPrev,
};

inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {
    "effective_aspect_ratio",
    "avg_darcy_velocity",
    "avg_total_mobility",
    "max_cfl",
    "max_shock_front_cfl",
    "shock_front_number_ratio",
    "avg_shock_front_mobility_ratio",
    "avg_long_capillary",
    "avg_trans_capillary",
    "avg_buoyancy",
    "avg_long_buoyancy",
    "avg_trans_buoyancy",
    "avg_artificial_diffusion",
    "residual",
    "residual_old",
    "residual_ratio",
    "inner_iters_prev",
};

struct FeatureVector {
  std::array<double, kFeatureCount> v{};

  double& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
};

struct FeatureError : std::runtime_error {
  explicit FeatureError(const std::string& feature)
      : std::runtime_error("non-finite feature: " + feature) {}
};

struct CflResult {
  std::vector<double> field; // per cell
  double max = 0.0;
};

struct ShockFrontCfl {
  double max = 0.0;
  double number_ratio = 0.0; // max shock-front CFL / max CFL
};

// Per-outer-iteration extraction of the dimensionless feature set. Model
// constants (aspect ratio, Welge shock saturation, max fw slope) are
// computed once at construction.
class FeatureExtractor {
public:
  FeatureExtractor(const ReservoirModel& model, const FaceGrid& faces);

  CflResult cfl_field(const SimulationState& state) const;
  ShockFrontCfl shock_front_cfl(const CflResult& cfl) const;
  std::pair<double, double> mobility_features(const SimulationState& state) const;
  std::pair<double, double> capillary_numbers(const SimulationState& state) const;
  std::array<double, 3> buoyancy_numbers(const SimulationState& state) const;
  double artificial_diffusion_number(const SimulationState& state,
                                     const CflResult& cfl) const;

  FeatureVector extract(const SimulationState& state, double residual,
                        double residual_old, int inner_prev) const;

  double shock_saturation() const { return shock_sat_; }
  double fw_slope_max() const { return max_fw_slope_; }

private:
  const ReservoirModel& model_;
  const FaceGrid& faces_;
  double aspect_ratio_;
  double max_fw_slope_;
  double shock_sat_;
  double shock_mobility_ratio_;
  double inj_flux_;
  int main_axis_;
};

} // namespace pmflow
