#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include <pmflow/rockfluid.hpp>

using namespace pmflow;

namespace {

const BrooksCoreyParams kP; // defaults: endpoints 1, n=2, swi=0.2, snwi=0.3
const FluidProps kF;        // mu ratio 5, rho 1000/1300

} // namespace

TEST_SUITE("rockfluid") {

TEST_CASE("effective saturation maps the mobile range onto [0,1]") {
  CHECK(effective_saturation(0.20, kP) == doctest::Approx(0.0));
  CHECK(effective_saturation(0.70, kP) == doctest::Approx(1.0));
  CHECK(effective_saturation(0.45, kP) == doctest::Approx(0.5));
  // Clamped outside the mobile range.
  CHECK(effective_saturation(0.05, kP) == doctest::Approx(0.0));
  CHECK(effective_saturation(0.95, kP) == doctest::Approx(1.0));
}

TEST_CASE("corey relative permeabilities") {
  const RelPerm mid = relperm(0.45, kP);
  CHECK(mid.krw == doctest::Approx(0.25));
  CHECK(mid.krnw == doctest::Approx(0.25));
  CHECK(relperm(0.20, kP).krw == doctest::Approx(0.0));
  CHECK(relperm(0.20, kP).krnw == doctest::Approx(1.0));
  CHECK(relperm(0.70, kP).krw == doctest::Approx(1.0));
  CHECK(relperm(0.70, kP).krnw == doctest::Approx(0.0));

  BrooksCoreyParams scaled = kP;
  scaled.krw_end = 0.3;
  scaled.krnw_end = 0.8;
  scaled.n_exp = 3.0;
  const RelPerm r = relperm(0.45, scaled);
  CHECK(r.krw == doctest::Approx(0.3 * 0.125));
  CHECK(r.krnw == doctest::Approx(0.8 * 0.125));
}

TEST_CASE("capillary pressure with entry-pressure floor") {
  CHECK(capillary_pressure(0.45, kP) == doctest::Approx(1000.0 / 0.5));
  CHECK(capillary_pressure(0.70, kP) == doctest::Approx(1000.0));
  // Below the 1e-3 effective-saturation floor pc saturates.
  CHECK(capillary_pressure(0.20, kP) == doctest::Approx(1000.0 * 1e3));
  CHECK(capillary_pressure(0.0, kP) == doctest::Approx(1000.0 * 1e3));

  BrooksCoreyParams p2 = kP;
  p2.a_cap = 2.0;
  CHECK(capillary_pressure(0.45, p2) == doctest::Approx(1000.0 * 4.0));
}

TEST_CASE("capillary derivative matches the closed form and vanishes when floored") {
  // d pc / d Sw = -a pe Se^(-a-1) / (1 - swi - snwi)
  CHECK(dpc_dsw(0.45, kP) == doctest::Approx(-1000.0 * 4.0 / 0.5));
  CHECK(dpc_dsw(0.10, kP) == doctest::Approx(0.0));
  CHECK(dpc_dsw(0.90, kP) == doctest::Approx(0.0));

  // Finite-difference cross-check away from the clamps.
  const double h = 1e-7;
  const double fd =
      (capillary_pressure(0.5 + h, kP) - capillary_pressure(0.5 - h, kP)) / (2 * h);
  CHECK(dpc_dsw(0.5, kP) == doctest::Approx(fd).epsilon(1e-5));
}

TEST_CASE("mobilities and fractional flow") {
  CHECK(mobility_w(0.45, kP, kF) == doctest::Approx(0.25 / 1e-3));
  CHECK(mobility_nw(0.45, kP, kF) == doctest::Approx(0.25 / 5e-3));
  CHECK(total_mobility(0.45, kP, kF) ==
        doctest::Approx(0.25 / 1e-3 + 0.25 / 5e-3));
  CHECK(fractional_flow(0.45, kP, kF) == doctest::Approx(250.0 / 300.0));
  CHECK(fractional_flow(0.20, kP, kF) == doctest::Approx(0.0));
  CHECK(fractional_flow(0.70, kP, kF) == doctest::Approx(1.0));
}

TEST_CASE("fractional flow is monotone nondecreasing in saturation") {
  double prev = -1.0;
  for (int i = 0; i <= 500; ++i) {
    const double sw = i / 500.0;
    const double fw = fractional_flow(sw, kP, kF);
    CHECK(fw >= prev - 1e-14);
    CHECK(fw >= 0.0);
    CHECK(fw <= 1.0);
    prev = fw;
  }
}

TEST_CASE("max fractional-flow slope matches a dense scan") {
  // Reference: centered differences on a much finer grid.
  const int n = 200001;
  const double lo = kP.swi, hi = 1.0 - kP.snwi;
  const double h = (hi - lo) / (n - 1);
  double ref = 0.0;
  for (int i = 1; i + 1 < n; ++i) {
    const double sw = lo + i * h;
    const double slope =
        (fractional_flow(sw + h, kP, kF) - fractional_flow(sw - h, kP, kF)) / (2 * h);
    ref = std::max(ref, slope);
  }
  CHECK(max_fw_slope(kP, kF) == doctest::Approx(ref).epsilon(2e-3));
  CHECK(max_fw_slope(kP, kF, 4001) == doctest::Approx(ref).epsilon(5e-4));
}

TEST_CASE("welge shock saturation matches the closed form") {
  // For equal unit endpoints and n=2 the tangency condition reduces to
  // Se* = sqrt(r / (1 + r)) with r = mu_w / mu_nw.
  const double r = kF.mu_w / kF.mu_nw;
  const double se_star = std::sqrt(r / (1.0 + r));
  const double sw_star = kP.swi + se_star * (1.0 - kP.swi - kP.snwi);
  CHECK(welge_shock_saturation(kP, kF) == doctest::Approx(sw_star).epsilon(1e-3));

  // A more viscous displaced phase pushes the shock saturation down.
  FluidProps thick = kF;
  thick.mu_nw = 50e-3;
  CHECK(welge_shock_saturation(kP, thick) < welge_shock_saturation(kP, kF));
}

TEST_CASE("parameter validation") {
  BrooksCoreyParams p = kP;
  p.swi = 0.8;
  p.snwi = 0.3; // mobile range empty
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = kP;
  p.n_exp = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  FluidProps f = kF;
  f.mu_w = 0.0;
  CHECK_THROWS_AS(f.validate(), std::invalid_argument);
}

} // TEST_SUITE
