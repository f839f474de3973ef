#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pmflow/controller.hpp"
#include "pmflow/datagen.hpp"

namespace pmflow {

inline constexpr const char* kPmflowVersion = "0.1.0";

// Stable exit codes for scripted pipelines.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitSolver = 3;

// Strategy tokens: "no-relax", "cfl", "fixed:<omega>", "ml-frozen",
// "ml-online:<W>" (update kind follows the model file's mode),
// "ml-boosting:<W>", "ml-bagging:<W>", and "fixed-sweep" (bench only,
// expands to the 19-point omega grid).
struct StrategySpec {
  std::string name;
  double omega = 0.5; // fixed only
  int window = 50;    // online only
};

StrategySpec parse_strategy(const std::string& token);

std::unique_ptr<RelaxationController>
make_controller(const StrategySpec& spec, const std::filesystem::path& model_path,
                std::uint64_t seed);

// Row/directory label: controller name plus the buffer size for online runs.
std::string strategy_label(const RelaxationController& controller,
                           const StrategySpec& spec);

ReservoirModel model_for_case(int case_id); // 1, 2, 3
Schedule default_schedule(int case_id);
// Fixed time-step schedule used for strategy comparisons: every strategy
// sees the same sequence of steps and non-converged steps are kept, so the
// iteration totals measure the relaxation choice and nothing else.
Schedule bench_schedule(int case_id);

struct DatagenCmd {
  DatagenOptions opts;
  std::filesystem::path ranges_file; // optional JSON overriding opts.ranges
  std::filesystem::path out;
};

struct TrainCmd {
  std::filesystem::path train_csv;
  std::filesystem::path test_csv;
  std::filesystem::path model_out;
  std::string kind = "forest"; // forest | boosted
  ForestFitParams forest;
  BoostFitParams boosted;
  std::uint64_t seed = 1;
};

struct SimulateCmd {
  int case_id = 1;
  std::string strategy = "no-relax";
  std::filesystem::path model; // required by ml strategies
  std::filesystem::path out;
  std::uint64_t seed = 1;
  std::optional<Schedule> schedule; // per-case default when absent
  SolverConfig solver;
};

struct BenchCmd {
  int case_id = 1;
  std::vector<std::string> strategies;
  std::string baseline = "no-relax";
  std::filesystem::path model;
  std::filesystem::path out;
  std::uint64_t seed = 1;
  std::optional<Schedule> schedule;
  SolverConfig solver;
};

int cmd_datagen(const DatagenCmd& cmd, std::ostream& log);
int cmd_train(const TrainCmd& cmd, std::ostream& log);
int cmd_simulate(const SimulateCmd& cmd, std::ostream& log);
int cmd_bench(const BenchCmd& cmd, std::ostream& log);
int cmd_report(const std::filesystem::path& bench_dir, std::ostream& log);

// One row of a finished bench table (parsed back by tests and cmd_report).
struct BenchRow {
  std::string strategy;
  bool failed = false;
  double total_metric = 0.0;
  long total_outer = 0;
  long total_inner = 0;
  double wall_seconds = 0.0;
  bool all_converged = false;
  int rejected_steps = 0;
  double improvement = 0.0; // (baseline - strategy) / baseline
};

std::vector<BenchRow> read_bench_table(const std::filesystem::path& path);

} // namespace pmflow
