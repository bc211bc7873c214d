#ifndef EPIPLAN_TOOLS_CLI_HPP_
#define EPIPLAN_TOOLS_CLI_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epiplan/train.hpp"

namespace epiplan::cli {

// Flag/env-var config resolution: --config beats EPIPLAN_CONFIG beats
// defaults.
Config resolve_config(const std::string& config_path);

struct TrainOptions {
  std::string env_name;
  std::string algo = "ppo";
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3};
  std::optional<int> timesteps;
  std::string config_path;
  std::string out_dir = "runs";
  int jobs = 1;
  std::optional<double> max_hours;
  bool force = false;  // allow overwriting an existing run directory
};

// One training run per seed; writes curves, schedules, checkpoints and the
// run manifest under <out>/<ENV>_<algo>/. Returns the run directory.
// Throws invalid_argument on bad names, runtime_error when a run directory
// would be overwritten without --force.
std::string cmd_train(const TrainOptions& options);

struct BaselineOptions {
  std::string env_name;
  std::string policy = "Lax";
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3};
  std::string config_path;
  std::string out_dir = "runs";
};

// Prints and writes max/mean/std of the cumulative rewards across seeds.
EvalStats cmd_baseline(const BaselineOptions& options);

struct CompareOptions {
  std::string dir = "runs";
  std::string out_prefix;  // default <dir>/comparison
};

// Scans a directory of completed runs and baseline tables and emits a
// policy-by-environment comparison (CSV + pretty text), in millions of
// dollars. Missing runs produce warnings, not errors.
std::string cmd_compare(const CompareOptions& options);

struct ExportScheduleOptions {
  std::string checkpoint_path;
  std::string env_name;
  std::string mode = "greedy";  // or "sampled"
  std::uint64_t seed = 0;
  std::string config_path;
  std::string out_dir = ".";
};

ScheduleRecord cmd_export_schedule(const ExportScheduleOptions& options);

void cmd_list_envs();

}  // namespace epiplan::cli

#endif  // EPIPLAN_TOOLS_CLI_HPP_
