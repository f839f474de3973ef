#include "pmflow/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "pmflow/io_util.hpp"
#include "pmflow/linalg.hpp"
#include "pmflow/solver.hpp"
#include "pmflow/svg.hpp"

namespace pmflow {

namespace {

// usage(1) for bad arguments, data(2) for bad inputs/files, solver(3) for
// numerical failures.
template <typename Fn>
int guarded(std::ostream& log, Fn&& fn) {
  try {
    fn();
    return kExitOk;
  } catch (const std::invalid_argument& e) {
    log << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CgError& e) {
    log << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const FeatureError& e) {
    log << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitData;
  }
}

std::string csv_escape_none(const std::string& s) { return s; } // labels are [-a-z0-9.]

} // namespace

StrategySpec parse_strategy(const std::string& token) {
  StrategySpec spec;
  const auto colon = token.find(':');
  spec.name = token.substr(0, colon);
  const std::string arg =
      colon == std::string::npos ? std::string() : token.substr(colon + 1);

  const bool takes_omega = spec.name == "fixed";
  const bool takes_window = spec.name == "ml-online" || spec.name == "ml-boosting" ||
                            spec.name == "ml-bagging";
  if (spec.name != "no-relax" && spec.name != "cfl" && spec.name != "ml-frozen" &&
      spec.name != "fixed-sweep" && !takes_omega && !takes_window)
    throw std::invalid_argument("unknown strategy: " + token);
  if (!arg.empty() && !takes_omega && !takes_window)
    throw std::invalid_argument("strategy takes no argument: " + token);

  if (takes_omega) {
    if (arg.empty()) throw std::invalid_argument("fixed strategy needs an omega: " + token);
    spec.omega = parse_double(arg);
    if (!(spec.omega > 0.0) || spec.omega > 1.0)
      throw std::invalid_argument("fixed omega out of (0, 1]: " + token);
  }
  if (takes_window && !arg.empty()) {
    spec.window = parse_int(arg);
    if (spec.window < 1) throw std::invalid_argument("window must be >= 1: " + token);
  }
  return spec;
}

std::unique_ptr<RelaxationController>
make_controller(const StrategySpec& spec, const std::filesystem::path& model_path,
                std::uint64_t seed) {
  if (spec.name == "no-relax") return std::make_unique<NoRelaxationController>();
  if (spec.name == "fixed") return std::make_unique<FixedOmegaController>(spec.omega);
  if (spec.name == "cfl") return std::make_unique<CflDynamicController>();

  if (spec.name != "ml-frozen" && spec.name != "ml-online" &&
      spec.name != "ml-boosting" && spec.name != "ml-bagging")
    throw std::invalid_argument("unknown strategy: " + spec.name);

  if (model_path.empty())
    throw std::runtime_error("strategy " + spec.name + " requires --model");
  TreeEnsemble ensemble = load_ensemble(model_path);

  if (spec.name == "ml-frozen")
    return std::make_unique<MlSurrogateController>(std::move(ensemble));

  OnlineConfig online;
  online.window = spec.window;
  online.seed = seed;
  if (spec.name == "ml-online")
    online.strategy = ensemble.mode == EnsembleMode::Boosted ? OnlineStrategy::Boosting
                                                             : OnlineStrategy::Bagging;
  else if (spec.name == "ml-boosting")
    online.strategy = OnlineStrategy::Boosting;
  else
    online.strategy = OnlineStrategy::Bagging;

  if (online.strategy == OnlineStrategy::Boosting &&
      ensemble.mode != EnsembleMode::Boosted)
    throw std::runtime_error("ml-boosting needs a boosted model file");
  if (online.strategy == OnlineStrategy::Bagging &&
      ensemble.mode != EnsembleMode::Bagging)
    throw std::runtime_error("ml-bagging needs a bagging model file");
  return std::make_unique<MlSurrogateController>(std::move(ensemble), online);
}

std::string strategy_label(const RelaxationController& controller,
                           const StrategySpec& spec) {
  std::string label = controller.name();
  if (label.rfind("ml-", 0) == 0 && label != "ml-frozen")
    label += "-W" + std::to_string(spec.window);
  return label;
}

ReservoirModel model_for_case(int case_id) {
  switch (case_id) {
    case 1: return build_test_case_1();
    case 2: return build_test_case_2();
    case 3: return build_layered_3d();
    default: throw std::invalid_argument("unknown case id: " + std::to_string(case_id));
  }
}

Schedule default_schedule(int case_id) {
  Schedule s;
  switch (case_id) {
    case 1:
    case 2:
      s.dt0 = 2.0e4;
      s.end_time = 8.0e5; // ~0.5 pore volumes at the case-1 inflow rate
      break;
    case 3:
      s.dt0 = 1.8e5;
      s.end_time = 7.2e6;
      break;
    default:
      throw std::invalid_argument("unknown case id: " + std::to_string(case_id));
  }
  s.max_steps = 400;
  return s;
}

Schedule bench_schedule(int case_id) {
  Schedule s;
  switch (case_id) {
    case 1:
    case 2:
      s.dt0 = 1.8e4;
      s.end_time = 4.5e5;
      break;
    case 3:
      s.dt0 = 1.8e5;
      s.end_time = 4.5e6;
      break;
    default:
      throw std::invalid_argument("unknown case id: " + std::to_string(case_id));
  }
  s.max_steps = 2000;
  s.dt_max_factor = 1.0;
  s.dt_min_factor = 1.0;
  return s;
}

int cmd_datagen(const DatagenCmd& cmd, std::ostream& log) {
  return guarded(log, [&] {
    if (cmd.out.empty()) throw std::invalid_argument("datagen needs --out");
    DatagenOptions opts = cmd.opts;
    if (!cmd.ranges_file.empty()) opts.ranges = load_scenario_ranges(cmd.ranges_file);
    const DatagenSummary s = generate_dataset(opts, cmd.out);
    log << "datagen: " << s.n_sims - s.n_skipped << "/" << s.n_sims
        << " simulations, " << s.n_rows << " rows (" << s.n_train_rows << " train / "
        << s.n_test_rows << " test)";
    if (s.n_skipped > 0) log << ", " << s.n_skipped << " skipped";
    log << '\n'
        << "train: " << s.train_path.string() << '\n'
        << "test:  " << s.test_path.string() << '\n';
  });
}

int cmd_train(const TrainCmd& cmd, std::ostream& log) {
  return guarded(log, [&] {
    if (cmd.kind != "forest" && cmd.kind != "boosted")
      throw std::invalid_argument("model kind must be forest or boosted");
    if (cmd.model_out.empty()) throw std::invalid_argument("train needs --out");

    const auto train = read_dataset_csv(cmd.train_csv);
    const auto test = read_dataset_csv(cmd.test_csv);

    TreeEnsemble ensemble;
    if (cmd.kind == "forest")
      ensemble = fit_forest(train, cmd.forest, cmd.seed);
    else
      ensemble = fit_boosted(train, cmd.boosted, cmd.seed);

    const double rmse_train = rmse(ensemble, train);
    const double rmse_test = rmse(ensemble, test);
    const auto importance = feature_importance(ensemble);

    save_ensemble(ensemble, cmd.model_out);

    nlohmann::ordered_json j;
    j["format"] = "pmflow-train-report";
    j["version"] = 1;
    j["kind"] = cmd.kind;
    j["seed"] = cmd.seed;
    j["n_train"] = train.size();
    j["n_test"] = test.size();
    j["rmse_train"] = rmse_train;
    j["rmse_test"] = rmse_test;
    auto imp = nlohmann::ordered_json::array();
    for (int i = 0; i < kPredictorCount; ++i) {
      const char* name = i < kFeatureCount ? kFeatureNames[static_cast<std::size_t>(i)]
                                           : "omega";
      imp.push_back({{"predictor", name}, {"importance", importance[static_cast<std::size_t>(i)]}});
    }
    j["feature_importance"] = std::move(imp);
    write_text_file(cmd.model_out.parent_path() / "train_report.json",
                    j.dump(1, '\t') + "\n");

    log << "train: " << cmd.kind << " on " << train.size() << " rows, rmse train "
        << format_double(rmse_train) << " / test " << format_double(rmse_test) << '\n';

    std::vector<int> rank(static_cast<std::size_t>(kPredictorCount));
    for (int i = 0; i < kPredictorCount; ++i) rank[static_cast<std::size_t>(i)] = i;
    std::sort(rank.begin(), rank.end(), [&](int a, int b) {
      return importance[static_cast<std::size_t>(a)] > importance[static_cast<std::size_t>(b)];
    });
    log << "top importances:";
    for (int i = 0; i < 5 && i < kPredictorCount; ++i) {
      const int p = rank[static_cast<std::size_t>(i)];
      log << ' '
          << (p < kFeatureCount ? kFeatureNames[static_cast<std::size_t>(p)] : "omega")
          << '=' << format_double(importance[static_cast<std::size_t>(p)]);
    }
    log << '\n' << "model: " << cmd.model_out.string() << '\n';
  });
}

namespace {

void write_simulation_artifacts(const std::filesystem::path& dir,
                                const std::string& label,
                                const SimulationReport& report) {
  write_report_json(report, label, dir / "report.json");
  write_records_csv(report.records, dir / "records.csv");

  std::string trace = "iteration,omega\n";
  for (std::size_t i = 0; i < report.records.size(); ++i)
    trace += std::to_string(i + 1) + "," + format_double(report.records[i].omega0) + "\n";
  write_text_file(dir / "curves" / "relaxation_trace.csv", trace);

  // Work done through the end of each accepted step; rejected attempts are
  // charged to the step that eventually accepts their interval.
  std::vector<double> cum_by_step(report.steps.size(), 0.0);
  double cum = 0.0;
  for (const auto& r : report.records) {
    cum += 1.0 + r.inner / 3.0;
    if (r.step >= 0 && static_cast<std::size_t>(r.step) < cum_by_step.size())
      cum_by_step[static_cast<std::size_t>(r.step)] = cum;
  }
  std::string curve = "step,cumulative_metric\n";
  for (std::size_t s = 0; s < cum_by_step.size(); ++s)
    curve += std::to_string(s + 1) + "," + format_double(cum_by_step[s]) + "\n";
  write_text_file(dir / "curves" / "cumulative_iterations.csv", curve);

  std::string updates = "update_index,rmse_before,rmse_after\n";
  bool any_update = false;
  for (const auto& r : report.records)
    if (r.update_occurred) {
      any_update = true;
      updates += std::to_string(r.update_index) + "," +
                 format_double(r.update_rmse_before) + "," +
                 format_double(r.update_rmse_after) + "\n";
    }
  if (any_update) write_text_file(dir / "curves" / "update_rmse.csv", updates);
}

nlohmann::ordered_json schedule_json(const Schedule& s) {
  return {{"end_time", s.end_time},
          {"dt0", s.dt0},
          {"max_steps", s.max_steps},
          {"dt_max_factor", s.dt_max_factor},
          {"dt_min_factor", s.dt_min_factor},
          {"easy_outer_threshold", s.easy_outer_threshold},
          {"grow_after", s.grow_after},
          {"grow_factor", s.grow_factor},
          {"halve_factor", s.halve_factor}};
}

} // namespace

int cmd_simulate(const SimulateCmd& cmd, std::ostream& log) {
  return guarded(log, [&] {
    if (cmd.out.empty()) throw std::invalid_argument("simulate needs --out");
    const ReservoirModel model = model_for_case(cmd.case_id);
    const Schedule schedule =
        cmd.schedule ? *cmd.schedule : default_schedule(cmd.case_id);
    const StrategySpec spec = parse_strategy(cmd.strategy);
    if (spec.name == "fixed-sweep")
      throw std::invalid_argument("fixed-sweep is a bench-only strategy");
    const auto controller = make_controller(spec, cmd.model, cmd.seed);
    const std::string label = strategy_label(*controller, spec);

    const SimulationReport report =
        run_simulation(model, *controller, schedule, cmd.solver);
    write_simulation_artifacts(cmd.out, label, report);

    nlohmann::ordered_json manifest;
    manifest["format"] = "pmflow-manifest";
    manifest["version"] = 1;
    manifest["tool_version"] = kPmflowVersion;
    manifest["command"] = "simulate";
    manifest["case"] = cmd.case_id;
    manifest["strategy"] = label;
    manifest["model"] = cmd.model.string();
    manifest["seed"] = cmd.seed;
    manifest["schedule"] = schedule_json(schedule);
    write_text_file(cmd.out / "manifest.json", manifest.dump(1, '\t') + "\n");

    log << "simulate: " << label << " case " << cmd.case_id << ", "
        << report.steps.size() << " steps, metric "
        << format_double(report.total_metric) << " (outer " << report.total_outer
        << ", inner " << report.total_inner << ")"
        << (report.all_converged ? "" : ", NOT all converged") << '\n'
        << "report: " << (cmd.out / "report.json").string() << '\n';
  });
}

int cmd_bench(const BenchCmd& cmd, std::ostream& log) {
  return guarded(log, [&] {
    if (cmd.out.empty()) throw std::invalid_argument("bench needs --out");

    std::vector<StrategySpec> specs;
    for (const auto& token : cmd.strategies) {
      const StrategySpec spec = parse_strategy(token);
      if (spec.name == "fixed-sweep") {
        for (double w : default_omega_grid()) {
          StrategySpec f;
          f.name = "fixed";
          f.omega = w;
          specs.push_back(f);
        }
      } else {
        specs.push_back(spec);
      }
    }
    if (specs.size() < 2)
      throw std::invalid_argument("bench needs at least 2 strategies");

    const ReservoirModel model = model_for_case(cmd.case_id);
    const Schedule schedule =
        cmd.schedule ? *cmd.schedule : bench_schedule(cmd.case_id);

    std::vector<BenchRow> rows;
    nlohmann::ordered_json errors = nlohmann::ordered_json::object();
    for (const auto& spec : specs) {
      BenchRow row;
      row.strategy = spec.name;
      try {
        const auto controller = make_controller(spec, cmd.model, cmd.seed);
        row.strategy = strategy_label(*controller, spec);
        const SimulationReport report =
            run_simulation(model, *controller, schedule, cmd.solver);
        row.total_metric = report.total_metric;
        row.total_outer = report.total_outer;
        row.total_inner = report.total_inner;
        row.wall_seconds = report.wall_seconds;
        row.all_converged = report.all_converged;
        row.rejected_steps = report.rejected_steps;
        write_simulation_artifacts(cmd.out / row.strategy, row.strategy, report);
      } catch (const std::exception& e) {
        row.failed = true;
        errors[row.strategy] = e.what();
        log << "bench: " << row.strategy << " FAILED: " << e.what() << '\n';
      }
      rows.push_back(row);
    }

    const auto baseline_it =
        std::find_if(rows.begin(), rows.end(), [&](const BenchRow& r) {
          return r.strategy == cmd.baseline && !r.failed;
        });
    const bool have_baseline = baseline_it != rows.end();
    if (!have_baseline)
      log << "bench: baseline " << cmd.baseline
          << " missing or failed; improvements omitted\n";

    std::string table =
        "strategy,failed,total_metric,total_outer,total_inner,wall_seconds,"
        "all_converged,rejected_steps,improvement\n";
    for (auto& row : rows) {
      if (have_baseline && !row.failed && baseline_it->total_metric > 0.0)
        row.improvement =
            (baseline_it->total_metric - row.total_metric) / baseline_it->total_metric;
      table += csv_escape_none(row.strategy);
      table += row.failed ? ",1," : ",0,";
      table += format_double(row.total_metric);
      table += ',';
      table += std::to_string(row.total_outer);
      table += ',';
      table += std::to_string(row.total_inner);
      table += ',';
      table += format_double(row.wall_seconds);
      table += ',';
      table += row.all_converged ? "1," : "0,";
      table += std::to_string(row.rejected_steps);
      table += ',';
      table += format_double(row.improvement);
      table += '\n';
    }
    write_text_file(cmd.out / "bench_table.csv", table);

    nlohmann::ordered_json manifest;
    manifest["format"] = "pmflow-manifest";
    manifest["version"] = 1;
    manifest["tool_version"] = kPmflowVersion;
    manifest["command"] = "bench";
    manifest["case"] = cmd.case_id;
    manifest["baseline"] = cmd.baseline;
    manifest["model"] = cmd.model.string();
    manifest["seed"] = cmd.seed;
    manifest["schedule"] = schedule_json(schedule);
    auto names = nlohmann::ordered_json::array();
    for (const auto& row : rows) names.push_back(row.strategy);
    manifest["strategies"] = std::move(names);
    manifest["errors"] = std::move(errors);
    write_text_file(cmd.out / "manifest.json", manifest.dump(1, '\t') + "\n");

    for (const auto& row : rows) {
      log << "bench: " << row.strategy << ' ';
      if (row.failed) {
        log << "FAILED";
      } else {
        log << "metric " << format_double(row.total_metric);
        if (have_baseline && row.strategy != cmd.baseline) {
          char pct[32];
          std::snprintf(pct, sizeof pct, "%+.1f%%", 100.0 * row.improvement);
          log << " (" << pct << " vs " << cmd.baseline << ')';
        }
      }
      log << '\n';
    }
    log << "table: " << (cmd.out / "bench_table.csv").string() << '\n';
  });
}

std::vector<BenchRow> read_bench_table(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const auto lines = split_lines(text);
  if (lines.empty() ||
      lines[0] !=
          "strategy,failed,total_metric,total_outer,total_inner,wall_seconds,"
          "all_converged,rejected_steps,improvement")
    throw std::runtime_error("unexpected bench table header in " + path.string());
  std::vector<BenchRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 9)
      throw std::runtime_error("bad bench table row in " + path.string());
    BenchRow r;
    r.strategy = std::string(f[0]);
    r.failed = f[1] == "1";
    r.total_metric = parse_double(f[2]);
    r.total_outer = parse_int(f[3]);
    r.total_inner = parse_int(f[4]);
    r.wall_seconds = parse_double(f[5]);
    r.all_converged = f[6] == "1";
    r.rejected_steps = parse_int(f[7]);
    r.improvement = parse_double(f[8]);
    rows.push_back(r);
  }
  return rows;
}

namespace {

struct CurveCsv {
  std::string x_name;
  std::vector<std::string> series_names;
  std::vector<double> x;
  std::vector<std::vector<double>> series; // one vector per series
};

CurveCsv read_curve_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const auto lines = split_lines(text);
  if (lines.size() < 2) throw std::runtime_error("empty curve file: " + path.string());
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 2)
    throw std::runtime_error("curve file needs >= 2 columns: " + path.string());
  CurveCsv c;
  c.x_name = std::string(header[0]);
  for (std::size_t i = 1; i < header.size(); ++i)
    c.series_names.emplace_back(header[i]);
  c.series.resize(c.series_names.size());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split_csv_line(lines[i]);
    if (f.size() != header.size())
      throw std::runtime_error("ragged curve row in " + path.string());
    c.x.push_back(parse_double(f[0]));
    for (std::size_t s = 0; s < c.series.size(); ++s)
      c.series[s].push_back(parse_double(f[s + 1]));
  }
  if (c.x.empty()) throw std::runtime_error("curve file has no rows: " + path.string());
  return c;
}

} // namespace

int cmd_report(const std::filesystem::path& bench_dir, std::ostream& log) {
  return guarded(log, [&] {
    if (!std::filesystem::is_directory(bench_dir))
      throw std::runtime_error("not a directory: " + bench_dir.string());

    std::vector<std::filesystem::path> curve_files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(bench_dir)) {
      if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
      if (e.path().parent_path().filename() != "curves") continue;
      curve_files.push_back(e.path());
    }
    std::sort(curve_files.begin(), curve_files.end());
    if (curve_files.empty())
      throw std::runtime_error("nothing to report: no curves/*.csv under " +
                               bench_dir.string());

    const auto plots_dir = bench_dir / "plots";
    for (const auto& path : curve_files) {
      const CurveCsv c = read_curve_csv(path);
      std::vector<SvgSeries> series;
      for (std::size_t s = 0; s < c.series.size(); ++s)
        series.push_back(SvgSeries{c.series_names[s], c.x, c.series[s]});

      // plots/<strategy>_<curve>.svg, flattened from the relative path.
      std::string flat;
      const auto rel = std::filesystem::relative(path, bench_dir).replace_extension();
      for (const auto& part : rel) {
        if (part.string() == "curves") continue;
        if (!flat.empty()) flat += '_';
        flat += part.string();
      }
      SvgChartOptions opt;
      opt.title = flat;
      opt.x_label = c.x_name;
      opt.y_label = c.series_names.size() == 1 ? c.series_names[0] : "";
      write_line_chart(plots_dir / (flat + ".svg"), series, opt);
      log << "plot: " << (plots_dir / (flat + ".svg")).string() << '\n';
    }
    log << "report: " << curve_files.size() << " plots under "
        << plots_dir.string() << '\n';
  });
}

} // namespace pmflow
