#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include <pmflow/model.hpp>

#include "test_util.hpp"

using namespace pmflow;

TEST_SUITE("model") {

TEST_CASE("build_grid fills placeholder properties") {
  const ReservoirModel m = build_grid(3, 4, 5, 1.0, 2.0, 3.0);
  CHECK(m.n_cells() == 60);
  CHECK(m.cell_volume() == doctest::Approx(6.0));
  for (int c = 0; c < m.n_cells(); ++c) {
    CHECK(m.kx[c] == doctest::Approx(100.0 * kMilliDarcy));
    CHECK(m.phi[c] == doctest::Approx(0.2));
  }
  CHECK_THROWS_AS(build_grid(0, 1, 1, 1, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(1, 1, 1, 1, -1, 1), std::invalid_argument);
}

TEST_CASE("index and ijk are inverse over the whole grid") {
  const ReservoirModel m = build_grid(3, 4, 5, 1.0, 1.0, 1.0);
  int c = 0;
  for (int k = 0; k < m.nz; ++k)
    for (int j = 0; j < m.ny; ++j)
      for (int i = 0; i < m.nx; ++i, ++c) {
        CHECK(m.index(i, j, k) == c);
        const auto back = m.ijk(c);
        CHECK(back[0] == i);
        CHECK(back[1] == j);
        CHECK(back[2] == k);
      }
}

TEST_CASE("gravity potential per unit density") {
  ReservoirModel m = build_grid(2, 1, 3, 1.0, 1.0, 2.0);
  // Default gravity points down z: gpot = 9.81 z.
  CHECK(m.gpot(m.index(0, 0, 0)) == doctest::Approx(9.81 * 1.0));
  CHECK(m.gpot(m.index(0, 0, 2)) == doctest::Approx(9.81 * 5.0));
  m.gravity = {-2.0, 0.0, 0.0};
  CHECK(m.gpot(m.index(1, 0, 0)) == doctest::Approx(2.0 * 1.5));
}

TEST_CASE("face transmissibility is harmonic mean times area over distance") {
  ReservoirModel m = build_grid(2, 1, 2, 2.0, 3.0, 4.0);
  m.kx[0] = 2e-13;
  m.kx[1] = 1e-13;
  m.kz[0] = 5e-14;
  m.kz[2] = 5e-14;

  const double harm_x = 2.0 * 2e-13 * 1e-13 / (3e-13);
  CHECK(face_transmissibility(m, 0, 1) ==
        doctest::Approx(harm_x * (3.0 * 4.0) / 2.0).epsilon(1e-14));
  // z neighbors use kz; symmetric in argument order.
  CHECK(face_transmissibility(m, 0, 2) ==
        doctest::Approx(5e-14 * (2.0 * 3.0) / 4.0).epsilon(1e-14));
  CHECK(face_transmissibility(m, 1, 0) == doctest::Approx(face_transmissibility(m, 0, 1)));

  CHECK_THROWS_AS(face_transmissibility(m, 0, 3), std::invalid_argument); // diagonal
  CHECK_THROWS_AS(face_transmissibility(m, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(face_transmissibility(m, 0, 5), std::out_of_range);
}

TEST_CASE("face grid enumerates interior and boundary faces") {
  ReservoirModel m = build_grid(3, 1, 2, 2.0, 1.0, 1.5);
  m.bc.inflow_flux = 1e-6;
  const FaceGrid faces(m);

  // (nx-1)*ny*nz x-faces plus nx*ny*(nz-1) z-faces.
  CHECK(faces.interior.size() == 2 * 2 + 3);
  CHECK(faces.inflow.size() == 2);  // XMin: ny*nz
  CHECK(faces.outflow.size() == 2); // XMax

  for (const auto& f : faces.interior) {
    const auto a = m.ijk(f.a);
    const auto b = m.ijk(f.b);
    CHECK(b[f.axis] == a[f.axis] + 1); // b is the +axis neighbor
    CHECK(f.tran == doctest::Approx(face_transmissibility(m, f.a, f.b)));
    CHECK(f.dgpot == doctest::Approx(m.gpot(f.b) - m.gpot(f.a)));
    if (f.axis == 0) {
      CHECK(f.area == doctest::Approx(1.0 * 1.5));
      CHECK(f.dist == doctest::Approx(2.0));
    } else {
      CHECK(f.axis == 2);
      CHECK(f.area == doctest::Approx(2.0 * 1.0));
      CHECK(f.dist == doctest::Approx(1.5));
    }
  }

  for (const auto& f : faces.inflow) {
    CHECK(m.ijk(f.cell)[0] == 0);
    CHECK(f.axis == 0);
    // Half-cell transmissibility 2 k A / d.
    CHECK(f.tran == doctest::Approx(2.0 * m.kx[f.cell] * (1.0 * 1.5) / 2.0));
    // Gravity is vertical, the face center is level with the cell center.
    CHECK(f.dgpot_face == doctest::Approx(0.0));
  }
  for (const auto& f : faces.outflow) CHECK(m.ijk(f.cell)[0] == m.nx - 1);
}

TEST_CASE("boundary face gravity offset follows a tilted gravity vector") {
  ReservoirModel m = build_grid(2, 1, 1, 2.0, 1.0, 1.0);
  m.gravity = {-3.0, 0.0, -9.81};
  const FaceGrid faces(m);
  REQUIRE(faces.inflow.size() == 1);
  REQUIRE(faces.outflow.size() == 1);
  // gpot(x,z) = 3x + 9.81z; inflow face sits at x=0, its cell center at x=1.
  CHECK(faces.inflow[0].dgpot_face == doctest::Approx(-3.0));
  // Outflow face at x=4 vs cell center x=3.
  CHECK(faces.outflow[0].dgpot_face == doctest::Approx(3.0));
}

TEST_CASE("test case 1 is the two-layer slice") {
  const ReservoirModel m = build_test_case_1();
  CHECK(m.nx == 50);
  CHECK(m.ny == 1);
  CHECK(m.nz == 20);
  CHECK(m.nx * m.dx == doctest::Approx(100.0));
  CHECK(m.nz * m.dz == doctest::Approx(40.0));

  const int lower = m.index(10, 0, 3);
  const int upper = m.index(10, 0, 16);
  CHECK(m.kx[lower] == doctest::Approx(100.0 * kMilliDarcy));
  CHECK(m.phi[lower] == doctest::Approx(0.20));
  CHECK(m.kx[upper] == doctest::Approx(200.0 * kMilliDarcy));
  CHECK(m.phi[upper] == doctest::Approx(0.10));
  CHECK(m.kz[upper] == doctest::Approx(0.1 * m.kx[upper]));

  CHECK(m.fluid.mu_nw / m.fluid.mu_w == doctest::Approx(5.0));
  CHECK(m.fluid.rho_nw - m.fluid.rho_w == doctest::Approx(300.0));
  CHECK(m.bc.inflow_flux == doctest::Approx(1e-5));
  CHECK(m.bc.outflow_pressure == doctest::Approx(1e5));
  CHECK(m.rock_fluid.swi == doctest::Approx(0.20));
  CHECK(m.rock_fluid.snwi == doctest::Approx(0.30));
}

TEST_CASE("test case 2 is the four-quadrant slice") {
  const ReservoirModel m = build_test_case_2();
  auto kx_md = [&](int i, int k) { return m.kx[m.index(i, 0, k)] / kMilliDarcy; };
  CHECK(kx_md(5, 15) == doctest::Approx(200.0));  // upper left
  CHECK(kx_md(40, 15) == doctest::Approx(20.0));  // upper right
  CHECK(kx_md(5, 3) == doctest::Approx(10.0));    // lower left
  CHECK(kx_md(40, 3) == doctest::Approx(100.0));  // lower right
  const int c = m.index(40, 0, 15);
  CHECK(m.kz[c] == doctest::Approx(m.kx[c]));
  CHECK(m.phi[c] == doctest::Approx(0.20));
}

TEST_CASE("layered 3d case alternates shale and sandstone") {
  const ReservoirModel m = build_layered_3d();
  CHECK(m.nx == 20);
  CHECK(m.ny == 10);
  CHECK(m.nz == 8);
  CHECK(m.kx[m.index(0, 0, 0)] == doctest::Approx(1.0 * kMilliDarcy));
  CHECK(m.phi[m.index(0, 0, 0)] == doctest::Approx(0.20));
  CHECK(m.kx[m.index(0, 0, 1)] == doctest::Approx(1000.0 * kMilliDarcy));
  CHECK(m.phi[m.index(0, 0, 1)] == doctest::Approx(0.10));
  CHECK(m.rock_fluid.pe == doctest::Approx(1e4));
  CHECK(m.rock_fluid.krw_end == doctest::Approx(0.3));
  CHECK(m.bc.inflow_flux == doctest::Approx(2e-6));
}

TEST_CASE("validate rejects inconsistent models") {
  ReservoirModel m = build_grid(2, 1, 1, 1.0, 1.0, 1.0);
  m.kx.pop_back();
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);

  m = build_grid(2, 1, 1, 1.0, 1.0, 1.0);
  m.phi[0] = 1.5;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);

  m = build_grid(2, 1, 1, 1.0, 1.0, 1.0);
  m.bc.inflow_face = m.bc.outflow_face;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);

  m = build_grid(2, 1, 1, 1.0, 1.0, 1.0);
  m.bc.inflow_flux = -1.0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("model json round trip preserves every field") {
  pmtest::TempDir dir("model");
  const ReservoirModel m = build_test_case_2();
  const auto path = dir / "model.json";
  save_model(m, path);
  const ReservoirModel r = load_model(path);

  CHECK(r.nx == m.nx);
  CHECK(r.ny == m.ny);
  CHECK(r.nz == m.nz);
  CHECK(r.dx == m.dx);
  CHECK(r.dz == m.dz);
  CHECK(r.kx == m.kx);
  CHECK(r.ky == m.ky);
  CHECK(r.kz == m.kz);
  CHECK(r.phi == m.phi);
  CHECK(r.fluid.mu_nw == m.fluid.mu_nw);
  CHECK(r.fluid.rho_nw == m.fluid.rho_nw);
  CHECK(r.rock_fluid.pe == m.rock_fluid.pe);
  CHECK(r.rock_fluid.n_exp == m.rock_fluid.n_exp);
  CHECK(r.bc.inflow_face == m.bc.inflow_face);
  CHECK(r.bc.inflow_flux == m.bc.inflow_flux);
  CHECK(r.bc.outflow_pressure == m.bc.outflow_pressure);
  CHECK(r.gravity == m.gravity);

  CHECK_THROWS(load_model(dir / "missing.json"));
}

} // TEST_SUITE
