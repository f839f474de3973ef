#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmflow/commands.hpp"

namespace {

// Schedule/solver flags shared by simulate and bench. A Schedule is only
// passed through when the user touched one of its flags; otherwise the
// per-case default applies.
struct RunFlags {
  double end_time = 0.0;
  double dt0 = 0.0;
  int max_steps = 0;
  pmflow::SolverConfig solver;

  void attach(CLI::App* app) {
    app->add_option("--end-time", end_time, "simulated end time [s] (0: case default)");
    app->add_option("--dt0", dt0, "initial time-step size [s] (0: case default)");
    app->add_option("--max-steps", max_steps, "time-step attempt cap (0: case default)");
    app->add_option("--max-outer", solver.max_outer, "outer iteration cap")
        ->check(CLI::PositiveNumber);
    app->add_option("--max-inner", solver.max_inner, "inner iteration cap")
        ->check(CLI::PositiveNumber);
    app->add_option("--cg-tol", solver.cg_tol, "linear solver relative tolerance");
  }

  std::optional<pmflow::Schedule> schedule(pmflow::Schedule base) const {
    if (end_time == 0.0 && dt0 == 0.0 && max_steps == 0) return std::nullopt;
    if (end_time > 0.0) base.end_time = end_time;
    if (dt0 > 0.0) base.dt0 = dt0;
    if (max_steps > 0) base.max_steps = max_steps;
    return base;
  }
};

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-phase flow simulator with learned relaxation control"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read flags from an INI file");
  app.set_version_flag("--version", pmflow::kPmflowVersion);

  pmflow::DatagenCmd datagen;
  auto* dg = app.add_subcommand("datagen", "generate and split a training dataset");
  dg->add_option("--sims", datagen.opts.n_sims, "number of scenario simulations")
      ->check(CLI::PositiveNumber);
  dg->add_option("--steps", datagen.opts.n_steps, "time steps per scenario")
      ->check(CLI::PositiveNumber);
  dg->add_option("--seed", datagen.opts.seed, "master seed");
  dg->add_option("--train-fraction", datagen.opts.train_fraction,
                 "simulation-level train split")
      ->check(CLI::Range(0.01, 0.99));
  dg->add_option("--threads", datagen.opts.n_threads, "worker threads (0: all cores)");
  dg->add_option("--ranges", datagen.ranges_file, "JSON file overriding scenario ranges")
      ->check(CLI::ExistingFile);
  dg->add_option("--nx", datagen.opts.ranges.nx, "scenario grid cells in x")
      ->check(CLI::PositiveNumber);
  dg->add_option("--nz", datagen.opts.ranges.nz, "scenario grid cells in z")
      ->check(CLI::PositiveNumber);
  dg->add_option("--out", datagen.out, "output directory")->required();

  pmflow::TrainCmd train;
  auto* tr = app.add_subcommand("train", "fit an ensemble on a generated dataset");
  tr->add_option("--train", train.train_csv, "training CSV")->required();
  tr->add_option("--test", train.test_csv, "held-out CSV")->required();
  tr->add_option("--kind", train.kind, "forest | boosted")
      ->check(CLI::IsMember({"forest", "boosted"}));
  tr->add_option("--out", train.model_out, "model file to write")->required();
  tr->add_option("--seed", train.seed, "fitting seed");
  tr->add_option("--trees", train.forest.n_trees, "forest size")
      ->check(CLI::PositiveNumber);
  tr->add_option("--depth", train.forest.tree.max_depth, "forest tree depth cap")
      ->check(CLI::PositiveNumber);
  tr->add_option("--max-features", train.forest.tree.max_features_fraction,
                 "fraction of predictors tried per node")
      ->check(CLI::Range(0.01, 1.0));
  tr->add_option("--rounds", train.boosted.n_rounds, "boosting rounds")
      ->check(CLI::PositiveNumber);
  tr->add_option("--lr", train.boosted.learning_rate, "boosting learning rate");
  tr->add_option("--threads", train.forest.n_threads, "fit threads (0: all cores)");

  pmflow::SimulateCmd sim;
  RunFlags sim_flags;
  int sim_window = 0;
  auto* si = app.add_subcommand("simulate", "run one simulation with one strategy");
  si->add_option("--case", sim.case_id, "test case id (1, 2, 3)")->required();
  si->add_option("--strategy", sim.strategy,
                 "no-relax | cfl | fixed:<w> | ml-frozen | ml-online:<W> | "
                 "ml-boosting:<W> | ml-bagging:<W>");
  si->add_option("--model", sim.model, "ensemble file for ml strategies");
  si->add_option("--W", sim_window, "online buffer size (alternative to :<W>)")
      ->check(CLI::PositiveNumber);
  si->add_option("--omega", [&sim](const CLI::results_t& res) {
        sim.strategy = "fixed:" + res[0];
        return true;
      },
      "fixed relaxation value (shorthand for --strategy fixed:<w>)");
  si->add_option("--seed", sim.seed, "online-update seed");
  si->add_option("--out", sim.out, "output directory")->required();
  sim_flags.attach(si);

  pmflow::BenchCmd bench;
  RunFlags bench_flags;
  auto* be = app.add_subcommand("bench", "compare strategies on one case");
  be->add_option("--case", bench.case_id, "test case id (1, 2, 3)")->required();
  be->add_option("--strategy", bench.strategies,
                 "strategy token (repeatable); fixed-sweep expands to the 19-point grid")
      ->required();
  be->add_option("--baseline", bench.baseline, "strategy label improvements refer to");
  be->add_option("--model", bench.model, "ensemble file for ml strategies");
  be->add_option("--seed", bench.seed, "online-update seed");
  be->add_option("--out", bench.out, "output directory")->required();
  bench_flags.attach(be);

  std::filesystem::path report_dir;
  auto* re = app.add_subcommand("report", "emit SVG plots from run artifacts");
  re->add_option("dir", report_dir, "simulate/bench output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pmflow::kExitUsage;
  }

  try {
    if (dg->parsed()) return pmflow::cmd_datagen(datagen, std::cout);
    if (tr->parsed()) return pmflow::cmd_train(train, std::cout);
    if (si->parsed()) {
      if (sim_window > 0 && sim.strategy.find(':') == std::string::npos)
        sim.strategy += ":" + std::to_string(sim_window);
      sim.schedule = sim_flags.schedule(pmflow::default_schedule(sim.case_id));
      sim.solver = sim_flags.solver;
      return pmflow::cmd_simulate(sim, std::cout);
    }
    if (be->parsed()) {
      bench.schedule = bench_flags.schedule(pmflow::bench_schedule(bench.case_id));
      bench.solver = bench_flags.solver;
      return pmflow::cmd_bench(bench, std::cout);
    }
    if (re->parsed()) return pmflow::cmd_report(report_dir, std::cout);
  } catch (const std::exception& e) {
    std::cout << "usage error: " << e.what() << '\n';
  }
  return pmflow::kExitUsage;
}
