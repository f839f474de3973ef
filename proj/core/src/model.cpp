#include "pmflow/model.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "pmflow/io_util.hpp"

namespace pmflow {

using nlohmann::json;

void BoundaryConditions::validate() const {
  if (inflow_face == outflow_face)
    throw std::invalid_argument("BoundaryConditions: inflow and outflow faces coincide");
  if (!(inflow_flux >= 0.0) || !std::isfinite(inflow_flux))
    throw std::invalid_argument("BoundaryConditions: inflow flux must be >= 0");
  if (!std::isfinite(outflow_pressure))
    throw std::invalid_argument("BoundaryConditions: outflow pressure must be finite");
}

void ReservoirModel::validate() const {
  if (nx <= 0 || ny <= 0 || nz <= 0)
    throw std::invalid_argument("ReservoirModel: cell counts must be positive");
  if (dx <= 0 || dy <= 0 || dz <= 0)
    throw std::invalid_argument("ReservoirModel: cell sizes must be positive");
  const std::size_t n = static_cast<std::size_t>(n_cells());
  if (kx.size() != n || ky.size() != n || kz.size() != n || phi.size() != n)
    throw std::invalid_argument("ReservoirModel: property array size mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(kx[i] > 0) || !(ky[i] > 0) || !(kz[i] > 0))
      throw std::invalid_argument("ReservoirModel: permeabilities must be positive");
    if (!(phi[i] > 0) || !(phi[i] < 1))
      throw std::invalid_argument("ReservoirModel: porosity must be in (0,1)");
  }
  fluid.validate();
  rock_fluid.validate();
  bc.validate();
}

ReservoirModel build_grid(int nx, int ny, int nz, double dx, double dy, double dz) {
  if (nx <= 0 || ny <= 0 || nz <= 0 || dx <= 0 || dy <= 0 || dz <= 0)
    throw std::invalid_argument("build_grid: non-positive dimension");
  ReservoirModel m;
  m.nx = nx;
  m.ny = ny;
  m.nz = nz;
  m.dx = dx;
  m.dy = dy;
  m.dz = dz;
  const std::size_t n = static_cast<std::size_t>(m.n_cells());
  m.kx.assign(n, 100.0 * kMilliDarcy);
  m.ky.assign(n, 100.0 * kMilliDarcy);
  m.kz.assign(n, 100.0 * kMilliDarcy);
  m.phi.assign(n, 0.2);
  return m;
}

namespace {

BrooksCoreyParams table2_cases_1_2() {
  BrooksCoreyParams p;
  p.krw_end = 1.0;
  p.krnw_end = 1.0;
  p.n_exp = 2.0;
  p.swi = 0.20;
  p.snwi = 0.30;
  p.pe = 1000.0;
  p.a_cap = 1.0;
  return p;
}

BrooksCoreyParams table2_case_4() {
  BrooksCoreyParams p;
  p.krw_end = 0.3;
  p.krnw_end = 0.8;
  p.n_exp = 2.0;
  p.swi = 0.20;
  p.snwi = 0.20;
  p.pe = 10000.0;
  p.a_cap = 1.0;
  return p;
}

FluidProps ratio5_fluids() {
  FluidProps f;
  f.mu_w = 1.0e-3;
  f.mu_nw = 5.0e-3; // displaced fluid 5x more viscous
  f.rho_w = 1000.0;
  f.rho_nw = 1300.0;
  return f;
}

} // namespace

ReservoirModel build_test_case_1() {
  ReservoirModel m = build_grid(50, 1, 20, 2.0, 1.0, 2.0);
  for (int k = 0; k < m.nz; ++k) {
    const bool upper = k >= m.nz / 2;
    const double kh = (upper ? 200.0 : 100.0) * kMilliDarcy;
    const double por = upper ? 0.10 : 0.20;
    for (int i = 0; i < m.nx; ++i) {
      const int c = m.index(i, 0, k);
      m.kx[c] = kh;
      m.ky[c] = kh;
      m.kz[c] = 0.1 * kh;
      m.phi[c] = por;
    }
  }
  m.fluid = ratio5_fluids();
  m.rock_fluid = table2_cases_1_2();
  m.bc.inflow_face = FaceSide::XMin;
  m.bc.inflow_flux = 1.0e-5;
  m.bc.outflow_face = FaceSide::XMax;
  m.bc.outflow_pressure = 1.0e5;
  m.gravity = {0.0, 0.0, -9.81};
  m.validate();
  return m;
}

ReservoirModel build_test_case_2() {
  ReservoirModel m = build_grid(50, 1, 20, 2.0, 1.0, 2.0);
  for (int k = 0; k < m.nz; ++k) {
    const bool upper = k >= m.nz / 2;
    for (int i = 0; i < m.nx; ++i) {
      const bool left = i < m.nx / 2;
      const double kh =
          (upper ? (left ? 200.0 : 20.0) : (left ? 10.0 : 100.0)) * kMilliDarcy;
      const int c = m.index(i, 0, k);
      m.kx[c] = kh;
      m.ky[c] = kh;
      m.kz[c] = kh;
      m.phi[c] = 0.20;
    }
  }
  m.fluid = ratio5_fluids();
  m.rock_fluid = table2_cases_1_2();
  m.bc.inflow_face = FaceSide::XMin;
  m.bc.inflow_flux = 1.0e-5;
  m.bc.outflow_face = FaceSide::XMax;
  m.bc.outflow_pressure = 1.0e5;
  m.gravity = {0.0, 0.0, -9.81};
  m.validate();
  return m;
}

ReservoirModel build_layered_3d() {
  ReservoirModel m = build_grid(20, 10, 8, 10.0, 10.0, 5.0);
  for (int k = 0; k < m.nz; ++k) {
    const bool sandstone = (k % 2) == 1;
    const double kh = (sandstone ? 1000.0 : 1.0) * kMilliDarcy;
    const double por = sandstone ? 0.10 : 0.20;
    for (int j = 0; j < m.ny; ++j)
      for (int i = 0; i < m.nx; ++i) {
        const int c = m.index(i, j, k);
        m.kx[c] = kh;
        m.ky[c] = kh;
        m.kz[c] = kh;
        m.phi[c] = por;
      }
  }
  m.fluid = ratio5_fluids();
  m.rock_fluid = table2_case_4();
  m.bc.inflow_face = FaceSide::XMin;
  m.bc.inflow_flux = 2.0e-6;
  m.bc.outflow_face = FaceSide::XMax;
  m.bc.outflow_pressure = 1.0e5;
  m.gravity = {0.0, 0.0, -9.81};
  m.validate();
  return m;
}

namespace {

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

struct FaceGeom {
  int axis;
  double area;
  double dist;
};

FaceGeom face_geom(const ReservoirModel& m, int axis) {
  switch (axis) {
    case 0: return {0, m.dy * m.dz, m.dx};
    case 1: return {1, m.dx * m.dz, m.dy};
    default: return {2, m.dx * m.dy, m.dz};
  }
}

const std::vector<double>& perm_along(const ReservoirModel& m, int axis) {
  return axis == 0 ? m.kx : (axis == 1 ? m.ky : m.kz);
}

} // namespace

double face_transmissibility(const ReservoirModel& m, int cell_a, int cell_b) {
  if (cell_a < 0 || cell_b < 0 || cell_a >= m.n_cells() || cell_b >= m.n_cells())
    throw std::out_of_range("face_transmissibility: cell index out of range");
  const auto a = m.ijk(cell_a);
  const auto b = m.ijk(cell_b);
  int axis = -1;
  for (int d = 0; d < 3; ++d) {
    const int diff = std::abs(a[d] - b[d]);
    if (diff == 0) continue;
    if (diff != 1 || axis != -1)
      throw std::invalid_argument("face_transmissibility: cells not adjacent");
    axis = d;
  }
  if (axis == -1) throw std::invalid_argument("face_transmissibility: cells identical");
  const FaceGeom g = face_geom(m, axis);
  const auto& k = perm_along(m, axis);
  return harmonic(k[cell_a], k[cell_b]) * g.area / g.dist;
}

FaceGrid::FaceGrid(const ReservoirModel& m) {
  for (int k = 0; k < m.nz; ++k)
    for (int j = 0; j < m.ny; ++j)
      for (int i = 0; i < m.nx; ++i) {
        const int c = m.index(i, j, k);
        const int nbr[3] = {i + 1 < m.nx ? m.index(i + 1, j, k) : -1,
                            j + 1 < m.ny ? m.index(i, j + 1, k) : -1,
                            k + 1 < m.nz ? m.index(i, j, k + 1) : -1};
        for (int axis = 0; axis < 3; ++axis) {
          if (nbr[axis] < 0) continue;
          const FaceGeom g = face_geom(m, axis);
          const int b = nbr[axis];
          interior.push_back({c, b, axis, g.area, g.dist,
                              face_transmissibility(m, c, b),
                              m.gpot(b) - m.gpot(c)});
        }
      }

  auto add_boundary = [&](FaceSide side, std::vector<BFace>& out) {
    const int axis = side == FaceSide::XMin || side == FaceSide::XMax ? 0
                     : side == FaceSide::YMin || side == FaceSide::YMax ? 1
                                                                        : 2;
    const bool low = side == FaceSide::XMin || side == FaceSide::YMin ||
                     side == FaceSide::ZMin;
    const FaceGeom g = face_geom(m, axis);
    const auto& k = perm_along(m, axis);
    for (int kk = 0; kk < m.nz; ++kk)
      for (int jj = 0; jj < m.ny; ++jj)
        for (int ii = 0; ii < m.nx; ++ii) {
          const bool on_face = axis == 0 ? (low ? ii == 0 : ii == m.nx - 1)
                               : axis == 1 ? (low ? jj == 0 : jj == m.ny - 1)
                                           : (low ? kk == 0 : kk == m.nz - 1);
          if (!on_face) continue;
          const int c = m.index(ii, jj, kk);
          // Face center sits half a cell away from the center along the axis.
          const double offset = (low ? -0.5 : 0.5) * g.dist;
          const double dgpot = -m.gravity[axis] * offset;
          out.push_back({c, axis, g.area, 2.0 * k[c] * g.area / g.dist, dgpot});
        }
  };
  add_boundary(m.bc.inflow_face, inflow);
  add_boundary(m.bc.outflow_face, outflow);
}

namespace {

const char* face_name(FaceSide s) {
  switch (s) {
    case FaceSide::XMin: return "x_min";
    case FaceSide::XMax: return "x_max";
    case FaceSide::YMin: return "y_min";
    case FaceSide::YMax: return "y_max";
    case FaceSide::ZMin: return "z_min";
    default: return "z_max";
  }
}

FaceSide face_from_name(const std::string& s) {
  if (s == "x_min") return FaceSide::XMin;
  if (s == "x_max") return FaceSide::XMax;
  if (s == "y_min") return FaceSide::YMin;
  if (s == "y_max") return FaceSide::YMax;
  if (s == "z_min") return FaceSide::ZMin;
  if (s == "z_max") return FaceSide::ZMax;
  throw std::runtime_error("model file: unknown face side '" + s + "'");
}

} // namespace

void save_model(const ReservoirModel& m, const std::filesystem::path& path) {
  json j;
  j["format"] = "pmflow-model";
  j["version"] = 1;
  j["nx"] = m.nx;
  j["ny"] = m.ny;
  j["nz"] = m.nz;
  j["dx"] = m.dx;
  j["dy"] = m.dy;
  j["dz"] = m.dz;
  j["kx"] = m.kx;
  j["ky"] = m.ky;
  j["kz"] = m.kz;
  j["phi"] = m.phi;
  j["fluid"] = {{"mu_w", m.fluid.mu_w},
                {"mu_nw", m.fluid.mu_nw},
                {"rho_w", m.fluid.rho_w},
                {"rho_nw", m.fluid.rho_nw}};
  j["rock_fluid"] = {{"krw_end", m.rock_fluid.krw_end},
                     {"krnw_end", m.rock_fluid.krnw_end},
                     {"n_exp", m.rock_fluid.n_exp},
                     {"swi", m.rock_fluid.swi},
                     {"snwi", m.rock_fluid.snwi},
                     {"pe", m.rock_fluid.pe},
                     {"a_cap", m.rock_fluid.a_cap}};
  j["bc"] = {{"inflow_face", face_name(m.bc.inflow_face)},
             {"inflow_flux", m.bc.inflow_flux},
             {"outflow_face", face_name(m.bc.outflow_face)},
             {"outflow_pressure", m.bc.outflow_pressure}};
  j["gravity"] = m.gravity;
  write_text_file(path, j.dump(2) + "\n");
}

ReservoirModel load_model(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error("model file " + path.string() + ": " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "pmflow-model")
      throw std::runtime_error("not a pmflow-model file");
    if (j.at("version").get<int>() != 1)
      throw std::runtime_error("unsupported model file version");
    ReservoirModel m;
    m.nx = j.at("nx").get<int>();
    m.ny = j.at("ny").get<int>();
    m.nz = j.at("nz").get<int>();
    m.dx = j.at("dx").get<double>();
    m.dy = j.at("dy").get<double>();
    m.dz = j.at("dz").get<double>();
    m.kx = j.at("kx").get<std::vector<double>>();
    m.ky = j.at("ky").get<std::vector<double>>();
    m.kz = j.at("kz").get<std::vector<double>>();
    m.phi = j.at("phi").get<std::vector<double>>();
    const auto& jf = j.at("fluid");
    m.fluid.mu_w = jf.at("mu_w").get<double>();
    m.fluid.mu_nw = jf.at("mu_nw").get<double>();
    m.fluid.rho_w = jf.at("rho_w").get<double>();
    m.fluid.rho_nw = jf.at("rho_nw").get<double>();
    const auto& jr = j.at("rock_fluid");
    m.rock_fluid.krw_end = jr.at("krw_end").get<double>();
    m.rock_fluid.krnw_end = jr.at("krnw_end").get<double>();
    m.rock_fluid.n_exp = jr.at("n_exp").get<double>();
    m.rock_fluid.swi = jr.at("swi").get<double>();
    m.rock_fluid.snwi = jr.at("snwi").get<double>();
    m.rock_fluid.pe = jr.at("pe").get<double>();
    m.rock_fluid.a_cap = jr.at("a_cap").get<double>();
    const auto& jb = j.at("bc");
    m.bc.inflow_face = face_from_name(jb.at("inflow_face").get<std::string>());
    m.bc.inflow_flux = jb.at("inflow_flux").get<double>();
    m.bc.outflow_face = face_from_name(jb.at("outflow_face").get<std::string>());
    m.bc.outflow_pressure = jb.at("outflow_pressure").get<double>();
    m.gravity = j.at("gravity").get<std::array<double, 3>>();
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw std::runtime_error("model file " + path.string() + ": " + e.what());
  }
}

} // namespace pmflow
