#include "pmflow/rockfluid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pmflow {

namespace {
constexpr double kSeFloor = 1e-3;
}

void BrooksCoreyParams::validate() const {
  if (swi < 0.0 || snwi < 0.0 || swi + snwi >= 1.0)
    throw std::invalid_argument("BrooksCoreyParams: need 0 <= Swi, Snwi and Swi+Snwi < 1");
  if (krw_end <= 0.0 || krw_end > 1.0 || krnw_end <= 0.0 || krnw_end > 1.0)
    throw std::invalid_argument("BrooksCoreyParams: endpoint relperms must be in (0,1]");
  if (n_exp <= 0.0 || a_cap <= 0.0)
    throw std::invalid_argument("BrooksCoreyParams: exponents must be positive");
  if (pe < 0.0) throw std::invalid_argument("BrooksCoreyParams: pe must be >= 0");
}

void FluidProps::validate() const {
  if (mu_w <= 0.0 || mu_nw <= 0.0)
    throw std::invalid_argument("FluidProps: viscosities must be positive");
  if (rho_w <= 0.0 || rho_nw <= 0.0)
    throw std::invalid_argument("FluidProps: densities must be positive");
}

double effective_saturation(double sw, const BrooksCoreyParams& p) {
  const double mobile = 1.0 - p.swi - p.snwi;
  return std::clamp((sw - p.swi) / mobile, 0.0, 1.0);
}

RelPerm relperm(double sw, const BrooksCoreyParams& p) {
  const double se = effective_saturation(sw, p);
  return {p.krw_end * std::pow(se, p.n_exp), p.krnw_end * std::pow(1.0 - se, p.n_exp)};
}

double capillary_pressure(double sw, const BrooksCoreyParams& p) {
  if (p.pe == 0.0) return 0.0;
  const double se = std::max(effective_saturation(sw, p), kSeFloor);
  return p.pe * std::pow(se, -p.a_cap);
}

double dpc_dsw(double sw, const BrooksCoreyParams& p) {
  if (p.pe == 0.0) return 0.0;
  const double mobile = 1.0 - p.swi - p.snwi;
  const double se = (sw - p.swi) / mobile;
  if (se <= kSeFloor || se >= 1.0) return 0.0;
  return -p.a_cap * p.pe * std::pow(se, -p.a_cap - 1.0) / mobile;
}

double mobility_w(double sw, const BrooksCoreyParams& p, const FluidProps& f) {
  return relperm(sw, p).krw / f.mu_w;
}

double mobility_nw(double sw, const BrooksCoreyParams& p, const FluidProps& f) {
  return relperm(sw, p).krnw / f.mu_nw;
}

double total_mobility(double sw, const BrooksCoreyParams& p, const FluidProps& f) {
  const RelPerm kr = relperm(sw, p);
  return kr.krw / f.mu_w + kr.krnw / f.mu_nw;
}

double fractional_flow(double sw, const BrooksCoreyParams& p, const FluidProps& f) {
  const RelPerm kr = relperm(sw, p);
  const double lw = kr.krw / f.mu_w;
  const double lnw = kr.krnw / f.mu_nw;
  const double lt = lw + lnw;
  if (lt <= 0.0) return 0.0;
  return lw / lt;
}

double max_fw_slope(const BrooksCoreyParams& p, const FluidProps& f, int n_points) {
  if (n_points < 3) throw std::invalid_argument("max_fw_slope: need at least 3 points");
  const double h = 1.0 / (n_points - 1);
  double prev = fractional_flow(0.0, p, f);
  double cur = fractional_flow(h, p, f);
  double best = 0.0;
  for (int i = 1; i + 1 < n_points; ++i) {
    const double next = fractional_flow((i + 1) * h, p, f);
    best = std::max(best, (next - prev) / (2.0 * h));
    prev = cur;
    cur = next;
  }
  return best;
}

double welge_shock_saturation(const BrooksCoreyParams& p, const FluidProps& f,
                              int n_points) {
  if (n_points < 2) throw std::invalid_argument("welge_shock_saturation: bad resolution");
  const double s_max = 1.0 - p.snwi;
  const double fw_i = fractional_flow(p.swi, p, f);
  double best_slope = -1.0;
  double best_s = s_max;
  for (int i = 1; i <= n_points; ++i) {
    const double s = p.swi + (s_max - p.swi) * static_cast<double>(i) / n_points;
    const double slope = (fractional_flow(s, p, f) - fw_i) / (s - p.swi);
    if (slope > best_slope) {
      best_slope = slope;
      best_s = s;
    }
  }
  return best_s;
}

} // namespace pmflow
