#include "pmflow/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "pmflow/controller.hpp"
#include "pmflow/io_util.hpp"
#include "pmflow/parallel.hpp"
#include "pmflow/rng.hpp"
#include "pmflow/solver.hpp"

namespace pmflow {

namespace {

void check_range(double lo, double hi, const char* what) {
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw std::invalid_argument(std::string("invalid scenario range: ") + what);
}

double draw_uniform(Rng& rng, double lo, double hi) {
  return lo == hi ? lo : rng.uniform(lo, hi);
}

double draw_log_uniform(Rng& rng, double lo, double hi) {
  return lo == hi ? lo : std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

} // namespace

void ScenarioRanges::validate() const {
  check_range(kx_upper_md_min, kx_upper_md_max, "kx_upper_md");
  check_range(kx_lower_md_min, kx_lower_md_max, "kx_lower_md");
  check_range(kz_ratio_min, kz_ratio_max, "kz_ratio");
  check_range(phi_upper_min, phi_upper_max, "phi_upper");
  check_range(phi_lower_min, phi_lower_max, "phi_lower");
  check_range(visc_ratio_min, visc_ratio_max, "visc_ratio");
  check_range(pe_min, pe_max, "pe");
  check_range(n_exp_min, n_exp_max, "n_exp");
  check_range(krw_end_min, krw_end_max, "krw_end");
  check_range(krnw_end_min, krnw_end_max, "krnw_end");
  check_range(g_mag_min, g_mag_max, "g_mag");
  check_range(tilt_deg_min, tilt_deg_max, "tilt_deg");
  check_range(cfl_target_min, cfl_target_max, "cfl_target");
  check_range(omega_min, omega_max, "omega");
  if (kx_upper_md_min <= 0 || kx_lower_md_min <= 0 || kz_ratio_min <= 0)
    throw std::invalid_argument("permeability ranges must be positive");
  if (phi_upper_min <= 0.02 || phi_upper_max >= 0.4 || phi_lower_min <= 0.02 ||
      phi_lower_max >= 0.4)
    throw std::invalid_argument("porosity ranges must lie in (0.02, 0.4)");
  if (visc_ratio_min <= 0) throw std::invalid_argument("viscosity ratio must be positive");
  if (pe_min < 0) throw std::invalid_argument("entry pressure must be >= 0");
  if (n_exp_min < 1) throw std::invalid_argument("relperm exponent must be >= 1");
  if (krw_end_min <= 0 || krw_end_max > 1 || krnw_end_min <= 0 || krnw_end_max > 1)
    throw std::invalid_argument("relperm endpoints must lie in (0, 1]");
  if (g_mag_min < 0) throw std::invalid_argument("gravity magnitude must be >= 0");
  if (cfl_target_min <= 0) throw std::invalid_argument("cfl target must be positive");
  if (omega_min < 0.1 || omega_max > 1.0)
    throw std::invalid_argument("omega range must lie in [0.1, 1]");
  if (nx < 2 || nz < 2) throw std::invalid_argument("scenario grid must be >= 2x2");
}

ScenarioRanges ScenarioRanges::degenerate_base_case() {
  ScenarioRanges r;
  r.kx_upper_md_min = r.kx_upper_md_max = 200.0;
  r.kx_lower_md_min = r.kx_lower_md_max = 100.0;
  r.kz_ratio_min = r.kz_ratio_max = 0.1;
  r.phi_upper_min = r.phi_upper_max = 0.10;
  r.phi_lower_min = r.phi_lower_max = 0.20;
  r.visc_ratio_min = r.visc_ratio_max = 5.0;
  r.pe_min = r.pe_max = 1000.0;
  r.n_exp_min = r.n_exp_max = 2.0;
  r.krw_end_min = r.krw_end_max = 1.0;
  r.krnw_end_min = r.krnw_end_max = 1.0;
  r.g_mag_min = r.g_mag_max = 9.81;
  r.tilt_deg_min = r.tilt_deg_max = 0.0;
  r.cfl_target_min = r.cfl_target_max = 2.0;
  r.omega_min = r.omega_max = 1.0;
  r.nx = 50;
  r.nz = 20;
  return r;
}

Scenario sample_scenario(const ScenarioRanges& ranges, std::uint64_t seed) {
  ranges.validate();
  Rng rng(seed);

  Scenario s;
  s.kx_upper_md = draw_log_uniform(rng, ranges.kx_upper_md_min, ranges.kx_upper_md_max);
  s.kx_lower_md = draw_log_uniform(rng, ranges.kx_lower_md_min, ranges.kx_lower_md_max);
  s.kz_ratio = draw_log_uniform(rng, ranges.kz_ratio_min, ranges.kz_ratio_max);
  s.phi_upper = draw_uniform(rng, ranges.phi_upper_min, ranges.phi_upper_max);
  s.phi_lower = draw_uniform(rng, ranges.phi_lower_min, ranges.phi_lower_max);
  s.visc_ratio = draw_uniform(rng, ranges.visc_ratio_min, ranges.visc_ratio_max);
  s.pe = draw_uniform(rng, ranges.pe_min, ranges.pe_max);
  s.n_exp = draw_uniform(rng, ranges.n_exp_min, ranges.n_exp_max);
  s.krw_end = draw_uniform(rng, ranges.krw_end_min, ranges.krw_end_max);
  s.krnw_end = draw_uniform(rng, ranges.krnw_end_min, ranges.krnw_end_max);
  s.g_mag = draw_uniform(rng, ranges.g_mag_min, ranges.g_mag_max);
  s.tilt_deg = draw_uniform(rng, ranges.tilt_deg_min, ranges.tilt_deg_max);
  s.cfl_target = draw_uniform(rng, ranges.cfl_target_min, ranges.cfl_target_max);
  s.omega_fixed = draw_uniform(rng, ranges.omega_min, ranges.omega_max);

  ReservoirModel m = build_test_case_1();
  if (ranges.nx != m.nx || ranges.nz != m.nz) {
    const double lx = m.nx * m.dx;
    const double lz = m.nz * m.dz;
    m.nx = ranges.nx;
    m.nz = ranges.nz;
    m.dx = lx / m.nx;
    m.dz = lz / m.nz;
    const auto n = static_cast<std::size_t>(m.n_cells());
    m.kx.assign(n, 0.0);
    m.ky.assign(n, 0.0);
    m.kz.assign(n, 0.0);
    m.phi.assign(n, 0.0);
  }
  for (int k = 0; k < m.nz; ++k) {
    const bool upper = k >= m.nz / 2;
    const double kh = (upper ? s.kx_upper_md : s.kx_lower_md) * kMilliDarcy;
    const double por = upper ? s.phi_upper : s.phi_lower;
    for (int i = 0; i < m.nx; ++i) {
      const int c = m.index(i, 0, k);
      m.kx[c] = kh;
      m.ky[c] = kh;
      m.kz[c] = s.kz_ratio * kh;
      m.phi[c] = por;
    }
  }
  m.fluid.mu_nw = s.visc_ratio * m.fluid.mu_w;
  m.rock_fluid.pe = s.pe;
  m.rock_fluid.n_exp = s.n_exp;
  m.rock_fluid.krw_end = s.krw_end;
  m.rock_fluid.krnw_end = s.krnw_end;
  const double tilt = s.tilt_deg * std::acos(-1.0) / 180.0;
  m.gravity = {s.g_mag * std::sin(tilt), 0.0, -s.g_mag * std::cos(tilt)};
  // Keep bit-exactness of the base case when nothing is tilted.
  if (s.tilt_deg == 0.0) m.gravity = {0.0, 0.0, -s.g_mag};
  m.validate();
  s.model = std::move(m);

  // dt putting the shock-front CFL at the target. The front propagates at
  // the inlet throughput velocity scaled by the steepest fractional-flow
  // slope, which is what the transport solve's stiffness tracks.
  const double phi_min = std::min(s.phi_upper, s.phi_lower);
  const double slope = max_fw_slope(s.model.rock_fluid, s.model.fluid);
  s.dt = s.cfl_target * phi_min * s.model.dx /
         (s.model.bc.inflow_flux * std::max(slope, 1.0));
  return s;
}

ScenarioRanges load_scenario_ranges(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const auto j = nlohmann::json::parse(text);
  if (!j.is_object()) throw std::runtime_error("ranges file must be a JSON object");

  ScenarioRanges r;
  const std::vector<std::tuple<const char*, double*, double*>> ranges = {
      {"kx_upper_md", &r.kx_upper_md_min, &r.kx_upper_md_max},
      {"kx_lower_md", &r.kx_lower_md_min, &r.kx_lower_md_max},
      {"kz_ratio", &r.kz_ratio_min, &r.kz_ratio_max},
      {"phi_upper", &r.phi_upper_min, &r.phi_upper_max},
      {"phi_lower", &r.phi_lower_min, &r.phi_lower_max},
      {"visc_ratio", &r.visc_ratio_min, &r.visc_ratio_max},
      {"pe", &r.pe_min, &r.pe_max},
      {"n_exp", &r.n_exp_min, &r.n_exp_max},
      {"krw_end", &r.krw_end_min, &r.krw_end_max},
      {"krnw_end", &r.krnw_end_min, &r.krnw_end_max},
      {"g_mag", &r.g_mag_min, &r.g_mag_max},
      {"tilt_deg", &r.tilt_deg_min, &r.tilt_deg_max},
      {"cfl_target", &r.cfl_target_min, &r.cfl_target_max},
      {"omega", &r.omega_min, &r.omega_max},
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "nx") {
      r.nx = value.get<int>();
      continue;
    }
    if (key == "nz") {
      r.nz = value.get<int>();
      continue;
    }
    bool known = false;
    for (const auto& [name, lo, hi] : ranges) {
      if (key != name) continue;
      if (!value.is_array() || value.size() != 2)
        throw std::runtime_error("range '" + key + "' must be [min, max]");
      *lo = value[0].get<double>();
      *hi = value[1].get<double>();
      known = true;
      break;
    }
    if (!known) throw std::runtime_error("unknown ranges key '" + key + "'");
  }
  r.validate();
  return r;
}

std::string dataset_csv_header() {
  std::string h;
  for (const char* name : kFeatureNames) {
    h += name;
    h += ',';
  }
  h += "omega,inner_iters";
  return h;
}

std::string dataset_csv_rows(std::span<const TrainingSample> samples) {
  std::string out;
  for (const auto& s : samples) {
    for (int i = 0; i < kFeatureCount; ++i) {
      out += format_double(s.features[i]);
      out += ',';
    }
    out += format_double(s.omega);
    out += ',';
    out += format_double(s.inner_iters);
    out += '\n';
  }
  return out;
}

std::vector<TrainingSample> read_dataset_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const auto lines = split_lines(text);
  if (lines.empty()) throw std::runtime_error("empty dataset file: " + path.string());
  if (lines[0] != dataset_csv_header())
    throw std::runtime_error("unexpected dataset header in " + path.string());

  std::vector<TrainingSample> samples;
  samples.reserve(lines.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto fields = split_csv_line(lines[li]);
    if (fields.size() != kFeatureCount + 2)
      throw std::runtime_error("bad dataset row " + std::to_string(li) + " in " +
                               path.string());
    TrainingSample s;
    for (int i = 0; i < kFeatureCount; ++i)
      s.features[i] = parse_double(fields[static_cast<std::size_t>(i)]);
    s.omega = parse_double(fields[kFeatureCount]);
    s.inner_iters = parse_double(fields[kFeatureCount + 1]);
    if (!(s.omega > 0.0) || s.omega > 1.0 || s.inner_iters < 1)
      throw std::runtime_error("invalid sample at row " + std::to_string(li) + " in " +
                               path.string());
    samples.push_back(s);
  }
  return samples;
}

namespace {

std::filesystem::path sim_file_path(const std::filesystem::path& out_dir, int i) {
  char name[32];
  std::snprintf(name, sizeof name, "sim_%04d.csv", i);
  return out_dir / "sims" / name;
}

struct SimHarvest {
  std::vector<TrainingSample> rows;
  Scenario scenario;
  bool failed = false;
  std::string error;
};

} // namespace

DatagenSummary generate_dataset(const DatagenOptions& opts,
                                const std::filesystem::path& out_dir) {
  if (opts.n_sims < 1) throw std::invalid_argument("n_sims must be >= 1");
  if (opts.n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
  opts.ranges.validate();

  std::vector<SimHarvest> harvests(static_cast<std::size_t>(opts.n_sims));
  unsigned n_threads = opts.n_threads;
  if (n_threads == 0) n_threads = std::thread::hardware_concurrency();

  parallel_for(static_cast<std::size_t>(opts.n_sims), n_threads, [&](std::size_t i) {
    SimHarvest& h = harvests[i];
    h.scenario = sample_scenario(opts.ranges, Rng::derive(opts.seed, i));
    try {
      // Fixed time-step runs: the sampled dt (and its CFL regime) must
      // survive the whole run, so non-converged steps are kept rather than
      // retried at a halved dt.
      Schedule sched;
      sched.dt0 = h.scenario.dt;
      sched.end_time = h.scenario.dt * opts.n_steps;
      sched.max_steps = opts.n_steps;
      sched.dt_max_factor = 1.0;
      sched.dt_min_factor = 1.0;
      FixedOmegaController controller(h.scenario.omega_fixed);
      const SolverConfig solver_cfg;
      const SimulationReport report =
          run_simulation(h.scenario.model, controller, sched, solver_cfg);

      std::vector<bool> step_ok(report.steps.size(), false);
      for (const auto& st : report.steps)
        step_ok[static_cast<std::size_t>(st.index)] = st.converged;

      h.rows.reserve(report.records.size());
      for (const auto& r : report.records) {
        TrainingSample s;
        s.features = r.features;
        s.omega = r.omega0;
        // Iterations of a step that never met the outer criteria get the
        // inner cap as their label: stagnating choices often report tiny
        // per-outer inner counts, and the cap is what they actually cost.
        const bool ok = r.step >= 0 &&
                        static_cast<std::size_t>(r.step) < step_ok.size() &&
                        step_ok[static_cast<std::size_t>(r.step)];
        s.inner_iters = ok ? r.inner : solver_cfg.max_inner;
        h.rows.push_back(s);
      }
    } catch (const std::exception& e) {
      h.failed = true;
      h.error = e.what();
    }
  });

  DatagenSummary summary;
  summary.n_sims = opts.n_sims;

  const std::string header = dataset_csv_header();
  std::vector<std::string> skipped;
  for (int i = 0; i < opts.n_sims; ++i) {
    const SimHarvest& h = harvests[static_cast<std::size_t>(i)];
    if (h.failed || h.rows.empty()) {
      ++summary.n_skipped;
      skipped.push_back("sim " + std::to_string(i) + ": " +
                        (h.failed ? h.error : "no rows"));
      continue;
    }
    const auto path = sim_file_path(out_dir, i);
    write_text_file(path, header + "\n" + dataset_csv_rows(h.rows));
    summary.sim_files.push_back(path);
    summary.n_rows += static_cast<long>(h.rows.size());
  }

  // Coverage of the raw draws, for the range-assertion checks.
  nlohmann::ordered_json cov;
  const auto record_cov = [&](const char* name, auto getter) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& h : harvests) {
      lo = std::min(lo, getter(h.scenario));
      hi = std::max(hi, getter(h.scenario));
    }
    cov[name] = {{"min", lo}, {"max", hi}};
  };
  record_cov("kx_upper_md", [](const Scenario& s) { return s.kx_upper_md; });
  record_cov("kx_lower_md", [](const Scenario& s) { return s.kx_lower_md; });
  record_cov("kz_ratio", [](const Scenario& s) { return s.kz_ratio; });
  record_cov("phi_upper", [](const Scenario& s) { return s.phi_upper; });
  record_cov("phi_lower", [](const Scenario& s) { return s.phi_lower; });
  record_cov("visc_ratio", [](const Scenario& s) { return s.visc_ratio; });
  record_cov("pe", [](const Scenario& s) { return s.pe; });
  record_cov("n_exp", [](const Scenario& s) { return s.n_exp; });
  record_cov("krw_end", [](const Scenario& s) { return s.krw_end; });
  record_cov("krnw_end", [](const Scenario& s) { return s.krnw_end; });
  record_cov("g_mag", [](const Scenario& s) { return s.g_mag; });
  record_cov("tilt_deg", [](const Scenario& s) { return s.tilt_deg; });
  record_cov("cfl_target", [](const Scenario& s) { return s.cfl_target; });
  record_cov("omega_fixed", [](const Scenario& s) { return s.omega_fixed; });

  nlohmann::ordered_json j;
  j["format"] = "pmflow-datagen-summary";
  j["version"] = 1;
  j["n_sims"] = summary.n_sims;
  j["n_skipped"] = summary.n_skipped;
  j["n_rows"] = summary.n_rows;
  j["seed"] = opts.seed;
  j["n_steps"] = opts.n_steps;
  j["grid"] = {{"nx", opts.ranges.nx}, {"nz", opts.ranges.nz}};
  j["skipped"] = skipped;
  j["coverage"] = std::move(cov);
  write_text_file(out_dir / "summary.json", j.dump(1, '\t') + "\n");

  const auto [train, test] = split_dataset(out_dir, opts.train_fraction, opts.seed);
  summary.train_path = train;
  summary.test_path = test;
  summary.n_train_rows = static_cast<long>(read_dataset_csv(train).size());
  summary.n_test_rows = static_cast<long>(read_dataset_csv(test).size());
  return summary;
}

std::pair<std::filesystem::path, std::filesystem::path>
split_dataset(const std::filesystem::path& out_dir, double fraction,
              std::uint64_t seed) {
  if (!(fraction > 0.0) || !(fraction < 1.0))
    throw std::invalid_argument("split fraction must be in (0, 1)");

  std::vector<std::filesystem::path> files;
  const auto sims_dir = out_dir / "sims";
  if (std::filesystem::is_directory(sims_dir))
    for (const auto& e : std::filesystem::directory_iterator(sims_dir))
      if (e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.size() < 2)
    throw std::runtime_error("split needs at least 2 simulations, found " +
                             std::to_string(files.size()));

  std::vector<std::size_t> order(files.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(Rng::derive(seed, 0x5911)); // split shuffle stream, disjoint from sim seeds
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    const std::size_t j = i + rng.next_below(order.size() - i);
    std::swap(order[i], order[j]);
  }

  const auto n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(fraction * static_cast<double>(files.size()))),
      1, files.size() - 1);

  const std::string header = dataset_csv_header();
  const auto concat = [&](std::span<const std::size_t> idx) {
    std::vector<std::size_t> sorted(idx.begin(), idx.end());
    std::sort(sorted.begin(), sorted.end()); // stable file order within a split
    std::string out = header + "\n";
    for (std::size_t i : sorted) {
      const std::string text = read_text_file(files[i]);
      const auto lines = split_lines(text);
      if (lines.empty() || lines[0] != header)
        throw std::runtime_error("unexpected header in " + files[i].string());
      for (std::size_t li = 1; li < lines.size(); ++li)
        if (!lines[li].empty()) {
          out += lines[li];
          out += '\n';
        }
    }
    return out;
  };

  const auto train_path = out_dir / "train.csv";
  const auto test_path = out_dir / "test.csv";
  write_text_file(train_path, concat({order.data(), n_train}));
  write_text_file(test_path, concat({order.data() + n_train, order.size() - n_train}));
  return {train_path, test_path};
}

} // namespace pmflow
