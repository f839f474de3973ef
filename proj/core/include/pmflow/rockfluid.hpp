#pragma once

namespace pmflow {

// Brooks-Corey closure parameters (relative permeability + capillary
// pressure). One set per model; see Table "Case" presets in model.hpp.
struct BrooksCoreyParams {
  double krw_end = 1.0;  // wetting endpoint relperm
  double krnw_end = 1.0; // non-wetting endpoint relperm
  double n_exp = 2.0;    // Corey exponent
  double swi = 0.2;      // immobile wetting fraction
  double snwi = 0.3;     // immobile non-wetting fraction
  double pe = 1000.0;    // entry capillary pressure [Pa]
  double a_cap = 1.0;    // capillary exponent

  void validate() const;
};

struct FluidProps {
  double mu_w = 1e-3;   // [Pa s]
  double mu_nw = 5e-3;  // [Pa s]
  double rho_w = 1000;  // [kg/m3]
  double rho_nw = 1300; // [kg/m3]

  void validate() const;
};

// Se = clamp((Sw - Swi)/(1 - Swi - Snwi), 0, 1)
double effective_saturation(double sw, const BrooksCoreyParams& p);

struct RelPerm {
  double krw;
  double krnw;
};
RelPerm relperm(double sw, const BrooksCoreyParams& p);

// pc = pe * max(Se, 1e-3)^(-a_cap); the floor keeps the inlet finite while
// Se -> 0 transients pass through.
double capillary_pressure(double sw, const BrooksCoreyParams& p);

// d pc / d Sw (<= 0); zero on the clamped/floored branches.
double dpc_dsw(double sw, const BrooksCoreyParams& p);

double mobility_w(double sw, const BrooksCoreyParams& p, const FluidProps& f);
double mobility_nw(double sw, const BrooksCoreyParams& p, const FluidProps& f);
double total_mobility(double sw, const BrooksCoreyParams& p, const FluidProps& f);

// fw = (krw/mu_w) / lambda_t
double fractional_flow(double sw, const BrooksCoreyParams& p, const FluidProps& f);

// Max of dfw/dSw by centered finite differences over an n-point sweep.
double max_fw_slope(const BrooksCoreyParams& p, const FluidProps& f, int n_points = 1001);

// Welge tangent construction: the post-shock saturation S* maximizing
// (fw(S) - fw(Swi)) / (S - Swi) over the mobile range.
double welge_shock_saturation(const BrooksCoreyParams& p, const FluidProps& f,
                              int n_points = 4001);

} // namespace pmflow
