#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "pmflow/rockfluid.hpp"

namespace pmflow {

inline constexpr double kMilliDarcy = 9.869233e-16; // [m2]

enum class FaceSide { XMin, XMax, YMin, YMax, ZMin, ZMax };

// Injection of the wetting phase at a fixed Darcy flux on one outer face,
// fixed pressure on another, no-flow elsewhere.
struct BoundaryConditions {
  FaceSide inflow_face = FaceSide::XMin;
  double inflow_flux = 0.0; // [m/s], wetting phase; >= 0 (0 = quiescent)
  FaceSide outflow_face = FaceSide::XMax;
  double outflow_pressure = 1e5; // [Pa]

  void validate() const;
};

// Structured Cartesian grid with per-cell properties. Immutable once built.
struct ReservoirModel {
  int nx = 0, ny = 0, nz = 0;
  double dx = 0, dy = 0, dz = 0;       // cell sizes [m]
  std::vector<double> kx, ky, kz;      // per-cell permeability [m2]
  std::vector<double> phi;             // per-cell porosity
  FluidProps fluid;
  BrooksCoreyParams rock_fluid;
  BoundaryConditions bc;
  std::array<double, 3> gravity = {0.0, 0.0, -9.81}; // [m/s2]

  int n_cells() const { return nx * ny * nz; }
  int index(int i, int j, int k) const { return i + nx * (j + ny * k); }
  std::array<int, 3> ijk(int cell) const {
    return {cell % nx, (cell / nx) % ny, cell / (nx * ny)};
  }
  std::array<double, 3> cell_center(int cell) const {
    const auto c = ijk(cell);
    return {(c[0] + 0.5) * dx, (c[1] + 0.5) * dy, (c[2] + 0.5) * dz};
  }
  double cell_volume() const { return dx * dy * dz; }
  // Gravity potential per unit density: phase potential is p + rho * gpot.
  double gpot(int cell) const {
    const auto x = cell_center(cell);
    return -(gravity[0] * x[0] + gravity[1] * x[1] + gravity[2] * x[2]);
  }

  void validate() const;
};

// Skeleton with uniform placeholder properties (100 mD isotropic, phi 0.2).
ReservoirModel build_grid(int nx, int ny, int nz, double dx, double dy, double dz);

// Two-layer 2D slice (x horizontal, z vertical, 50x1x20 over 100 m x 40 m):
// upper layer phi 0.10 / 200 mD, lower phi 0.20 / 100 mD, kz = 0.1 kx,
// displaced fluid 5x more viscous, density contrast +300 kg/m3.
ReservoirModel build_test_case_1();

// Four-quadrant 2D slice: kx = 200/20 mD in the upper row (left/right),
// 10/100 mD in the lower row; kz = kx; phi 0.20 everywhere.
ReservoirModel build_test_case_2();

// 20x10x8 3D grid of alternating 1 mD (phi 0.20) / 1000 mD (phi 0.10)
// layers with the high-entry-pressure rock-fluid preset.
ReservoirModel build_layered_3d();

// Harmonic-mean two-point transmissibility between adjacent cells:
// harm(k_a, k_b) * area / center-distance. Throws for non-adjacent cells.
double face_transmissibility(const ReservoirModel& m, int cell_a, int cell_b);

// Precomputed face topology used by the solver and feature extraction.
struct FaceGrid {
  struct Face {
    int a, b;     // cell indices, b is the +axis neighbor of a
    int axis;     // 0=x, 1=y, 2=z
    double area;  // [m2]
    double dist;  // center distance [m]
    double tran;  // transmissibility [m3]
    double dgpot; // gpot(b) - gpot(a) [m2/s2]
  };
  // Outer boundary face on the inflow/outflow side.
  struct BFace {
    int cell;
    int axis;
    double area;
    double tran;       // half-cell transmissibility 2 k A / d
    double dgpot_face; // gpot(face center) - gpot(cell center)
  };

  std::vector<Face> interior;
  std::vector<BFace> inflow;
  std::vector<BFace> outflow;

  explicit FaceGrid(const ReservoirModel& m);
};

// Model import/export (JSON; schema in docs/file_formats.md).
void save_model(const ReservoirModel& m, const std::filesystem::path& path);
ReservoirModel load_model(const std::filesystem::path& path);

} // namespace pmflow
