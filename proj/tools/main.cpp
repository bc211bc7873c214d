#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "cli.hpp"

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    const std::size_t comma = csv.find(',', pos);
    const std::string token =
        csv.substr(pos, comma == std::string::npos ? csv.size() - pos
                                                   : comma - pos);
    if (!token.empty()) {
      seeds.push_back(std::stoull(token));
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (seeds.empty()) {
    throw std::invalid_argument("no seeds in '" + csv + "'");
  }
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "epiplan: epidemic intervention planning benchmark and RL trainer"};
  app.require_subcommand(1);

  // train
  epiplan::cli::TrainOptions train_opts;
  std::string train_seeds = "0,1,2,3";
  int train_timesteps = -1;
  double train_max_hours = -1.0;
  auto* train_cmd =
      app.add_subcommand("train", "Train PPO or SAC on a benchmark env");
  train_cmd->add_option("--env", train_opts.env_name, "Environment name")
      ->required();
  train_cmd->add_option("--algo", train_opts.algo, "ppo or sac")
      ->default_val("ppo");
  train_cmd->add_option("--seeds", train_seeds, "Comma-separated master seeds");
  train_cmd->add_option("--timesteps", train_timesteps,
                        "Total env steps (default from config: 30000)");
  train_cmd->add_option("--config", train_opts.config_path,
                        "JSON config file (or set EPIPLAN_CONFIG)");
  train_cmd->add_option("--out", train_opts.out_dir, "Output directory")
      ->default_val("runs");
  train_cmd->add_option("--jobs", train_opts.jobs,
                        "Seeds to run in parallel");
  train_cmd->add_option("--max-hours", train_max_hours,
                        "Wall-clock budget; aborts gracefully");
  train_cmd->add_flag("--force", train_opts.force,
                      "Overwrite an existing run directory");

  // baseline
  epiplan::cli::BaselineOptions base_opts;
  std::string base_seeds = "0,1,2,3";
  auto* base_cmd =
      app.add_subcommand("baseline", "Evaluate a hand-crafted policy");
  base_cmd->add_option("--env", base_opts.env_name, "Environment name")
      ->required();
  base_cmd->add_option("--policy", base_opts.policy,
                       "Aggressive, Lax or Random")
      ->required();
  base_cmd->add_option("--seeds", base_seeds, "Comma-separated seeds");
  base_cmd->add_option("--config", base_opts.config_path, "JSON config file");
  base_cmd->add_option("--out", base_opts.out_dir, "Output directory")
      ->default_val("runs");

  // compare
  epiplan::cli::CompareOptions cmp_opts;
  auto* cmp_cmd = app.add_subcommand(
      "compare", "Summarize completed runs into a results table");
  cmp_cmd->add_option("--dir", cmp_opts.dir, "Directory with runs")
      ->default_val("runs");
  cmp_cmd->add_option("--out", cmp_opts.out_prefix,
                      "Output path prefix (default <dir>/comparison)");

  // export-schedule
  epiplan::cli::ExportScheduleOptions exp_opts;
  auto* exp_cmd = app.add_subcommand(
      "export-schedule", "Regenerate a schedule from a checkpoint");
  exp_cmd->add_option("--checkpoint", exp_opts.checkpoint_path,
                      "checkpoint.json path")
      ->required();
  exp_cmd->add_option("--env", exp_opts.env_name, "Environment name")
      ->required();
  exp_cmd->add_option("--mode", exp_opts.mode, "sampled or greedy")
      ->default_val("greedy");
  exp_cmd->add_option("--seed", exp_opts.seed, "Seed for sampled mode");
  exp_cmd->add_option("--config", exp_opts.config_path, "JSON config file");
  exp_cmd->add_option("--out", exp_opts.out_dir, "Output directory")
      ->default_val(".");

  auto* list_cmd =
      app.add_subcommand("list-envs", "List the six benchmark environments");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      train_opts.seeds = parse_seeds(train_seeds);
      if (train_timesteps > 0) train_opts.timesteps = train_timesteps;
      if (train_max_hours > 0) train_opts.max_hours = train_max_hours;
      epiplan::cli::cmd_train(train_opts);
    } else if (*base_cmd) {
      base_opts.seeds = parse_seeds(base_seeds);
      epiplan::cli::cmd_baseline(base_opts);
    } else if (*cmp_cmd) {
      epiplan::cli::cmd_compare(cmp_opts);
    } else if (*exp_cmd) {
      epiplan::cli::cmd_export_schedule(exp_opts);
    } else if (*list_cmd) {
      epiplan::cli::cmd_list_envs();
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
