#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <sstream>

#include "epiplan/csv.hpp"

namespace fs = std::filesystem;

namespace epiplan::cli {

namespace {

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string run_dir_name(const std::string& env_name, const std::string& algo) {
  return env_name + "_" + algo;
}

nlohmann::json seed_derivation_json(std::uint64_t master) {
  return {{"master", master},
          {"env", derive_seed(master, "env")},
          {"init", derive_seed(master, "init")},
          {"sample", derive_seed(master, "sample")}};
}

double remaining_hours(const std::chrono::steady_clock::time_point& start,
                       double budget_hours) {
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count() /
      3600.0;
  return budget_hours - elapsed;
}

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ran = false;
  bool completed = false;
  std::string error;
  std::vector<std::string> artifacts;
  double best_return = 0.0;
  double greedy_return = 0.0;
};

SeedOutcome run_one_seed(const std::string& env_name, Algo algo,
                         const Config& cfg, std::uint64_t seed,
                         const fs::path& run_dir,
                         std::optional<double> max_hours) {
  SeedOutcome outcome;
  outcome.seed = seed;
  outcome.ran = true;
  const fs::path seed_dir = run_dir / ("seed_" + std::to_string(seed));
  fs::create_directories(seed_dir);
  auto rel = [&](const std::string& name) {
    return (fs::path("seed_" + std::to_string(seed)) / name).string();
  };
  try {
    const TrainResult result = train(env_name, algo, cfg, seed, max_hours);
    outcome.completed = result.run.completed;
    outcome.best_return = result.run.best_sampled.episode_return;
    outcome.greedy_return = result.run.greedy.episode_return;

    write_curve_csv((seed_dir / "curve.csv").string(), result.run.curve);
    write_schedule_json((seed_dir / "schedule_sampled.json").string(),
                        result.run.best_sampled);
    write_schedule_csv((seed_dir / "schedule_sampled.csv").string(),
                       result.run.best_sampled, cfg.run.step_days);
    write_schedule_json((seed_dir / "schedule_greedy.json").string(),
                        result.run.greedy);
    write_schedule_csv((seed_dir / "schedule_greedy.csv").string(),
                       result.run.greedy, cfg.run.step_days);
    write_json_file((seed_dir / "checkpoint.json").string(), result.checkpoint);

    nlohmann::json summary = {
        {"env", env_name},
        {"algo", algo_name(algo)},
        {"seed", seed},
        {"best_episode_return", result.run.best_sampled.episode_return},
        {"greedy_return", result.run.greedy.episode_return},
        {"episodes", result.run.curve.size()},
        {"timesteps", result.run.timesteps_done},
        {"wall_seconds", result.wall_seconds},
        {"completed", result.run.completed},
    };
    write_json_file((seed_dir / "summary.json").string(), summary);

    for (const char* name :
         {"curve.csv", "schedule_sampled.json", "schedule_sampled.csv",
          "schedule_greedy.json", "schedule_greedy.csv", "checkpoint.json",
          "summary.json"}) {
      outcome.artifacts.push_back(rel(name));
    }
  } catch (const std::exception& e) {
    outcome.error = e.what();
    write_json_file((seed_dir / "error.json").string(),
                    {{"seed", seed}, {"error", e.what()}});
    outcome.artifacts.push_back(rel("error.json"));
  }
  return outcome;
}

}  // namespace

Config resolve_config(const std::string& config_path) {
  if (!config_path.empty()) {
    return load_config_file(config_path);
  }
  if (const char* env_path = std::getenv("EPIPLAN_CONFIG");
      env_path != nullptr && *env_path != '\0') {
    return load_config_file(env_path);
  }
  return Config{};
}

std::string cmd_train(const TrainOptions& options) {
  Config cfg = resolve_config(options.config_path);
  if (options.timesteps) {
    cfg.run.total_timesteps = *options.timesteps;
  }
  const Algo algo = algo_from_name(options.algo);
  (void)env_config_from_name(options.env_name, cfg);  // validate early
  if (options.seeds.empty()) {
    throw std::invalid_argument("at least one seed is required");
  }

  const fs::path run_dir =
      fs::path(options.out_dir) / run_dir_name(options.env_name, options.algo);
  if (fs::exists(run_dir / "manifest.json") && !options.force) {
    throw std::runtime_error("run directory " + run_dir.string() +
                             " already has a manifest; refusing to overwrite "
                             "(use --force or a fresh --out)");
  }
  fs::create_directories(run_dir);

  nlohmann::json manifest = {
      {"env", options.env_name},
      {"algo", algo_name(algo)},
      {"config_hash", config_hash(cfg)},
      {"config", to_json(cfg)},
      {"seeds", options.seeds},
      {"timesteps", cfg.run.total_timesteps},
      {"out_dir", run_dir.string()},
      {"created_utc", utc_now()},
      {"seed_derivation",
       {{"rule", "splitmix64(master ^ fnv1a(role)) for roles env/init/sample"}}},
  };
  for (std::uint64_t seed : options.seeds) {
    manifest["seed_derivation"]["per_seed"].push_back(
        seed_derivation_json(seed));
  }

  const auto start = std::chrono::steady_clock::now();
  std::vector<SeedOutcome> outcomes(options.seeds.size());
  const int jobs = std::max(1, options.jobs);

  std::size_t next_seed = 0;
  std::vector<std::pair<std::size_t, std::future<SeedOutcome>>> running;
  auto budget_left = [&]() -> std::optional<double> {
    if (!options.max_hours) return std::nullopt;
    return remaining_hours(start, *options.max_hours);
  };
  while (next_seed < options.seeds.size() || !running.empty()) {
    while (next_seed < options.seeds.size() &&
           static_cast<int>(running.size()) < jobs) {
      const auto budget = budget_left();
      if (budget && *budget <= 0.0) {
        // out of wall-clock budget: leave the remaining seeds unrun
        outcomes[next_seed].seed = options.seeds[next_seed];
        ++next_seed;
        continue;
      }
      const std::size_t idx = next_seed++;
      const std::uint64_t seed = options.seeds[idx];
      running.emplace_back(
          idx, std::async(std::launch::async, run_one_seed, options.env_name,
                          algo, cfg, seed, run_dir, budget));
    }
    if (!running.empty()) {
      auto& [idx, fut] = running.front();
      outcomes[idx] = fut.get();
      running.erase(running.begin());
    }
  }

  bool all_complete = true;
  bool any_error = false;
  for (const auto& outcome : outcomes) {
    nlohmann::json entry = {{"seed", outcome.seed},
                            {"artifacts", outcome.artifacts}};
    if (!outcome.ran) {
      entry["status"] = "skipped";
      all_complete = false;
    } else if (!outcome.error.empty()) {
      entry["status"] = "error";
      entry["error"] = outcome.error;
      any_error = true;
      all_complete = false;
    } else {
      entry["status"] = outcome.completed ? "complete" : "partial";
      entry["best_episode_return"] = outcome.best_return;
      entry["greedy_return"] = outcome.greedy_return;
      if (!outcome.completed) all_complete = false;
    }
    manifest["runs"].push_back(entry);
  }
  manifest["completed_utc"] = utc_now();
  manifest["status"] = any_error ? "error" : all_complete ? "complete" : "partial";
  write_json_file((run_dir / "manifest.json").string(), manifest);

  for (const auto& outcome : outcomes) {
    if (outcome.ran && outcome.error.empty()) {
      std::printf("seed %llu: best episode %.3f M$, greedy %.3f M$%s\n",
                  static_cast<unsigned long long>(outcome.seed),
                  outcome.best_return / 1e6, outcome.greedy_return / 1e6,
                  outcome.completed ? "" : " (partial)");
    } else if (!outcome.ran) {
      std::printf("seed %llu: skipped (wall-clock budget)\n",
                  static_cast<unsigned long long>(outcome.seed));
    } else {
      std::printf("seed %llu: ERROR %s\n",
                  static_cast<unsigned long long>(outcome.seed),
                  outcome.error.c_str());
    }
  }
  if (any_error) {
    throw std::runtime_error("one or more seeds failed; see error.json files");
  }
  return run_dir.string();
}

EvalStats cmd_baseline(const BaselineOptions& options) {
  const Config cfg = resolve_config(options.config_path);
  const BaselineKind kind = baseline_from_name(options.policy);
  const Environment env = make_env(options.env_name, cfg);
  const EvalStats stats = evaluate_policy(
      env,
      make_baseline_policy(kind, env.config().space, cfg.model),
      options.seeds);

  fs::create_directories(options.out_dir);
  const std::string stem =
      "baseline_" + options.env_name + "_" + options.policy;
  CsvWriter csv((fs::path(options.out_dir) / (stem + ".csv")).string());
  csv.write_row({"env", "policy", "seed", "cumulative_reward"});
  for (std::size_t i = 0; i < options.seeds.size(); ++i) {
    csv.write_row({options.env_name, options.policy,
                   format_double(static_cast<double>(options.seeds[i])),
                   format_double(stats.episode_returns[i])});
  }
  csv.save();
  write_json_file(
      (fs::path(options.out_dir) / (stem + "_summary.json")).string(),
      {{"env", options.env_name},
       {"policy", options.policy},
       {"seeds", options.seeds},
       {"episode_returns", stats.episode_returns},
       {"max", stats.max},
       {"mean", stats.mean},
       {"std", stats.stddev}});

  std::printf("%s on %s over %zu seeds (M$): max %.3f  mean %.3f  std %.3f\n",
              options.policy.c_str(), options.env_name.c_str(),
              options.seeds.size(), stats.max / 1e6, stats.mean / 1e6,
              stats.stddev / 1e6);
  return stats;
}

namespace {

struct CompareCell {
  double max = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  bool present = false;
};

struct CompareRow {
  std::string label;
  std::map<std::string, CompareCell> by_env;
};

CompareCell cell_from_returns(const std::vector<double>& returns) {
  CompareCell cell;
  if (returns.empty()) return cell;
  cell.present = true;
  cell.max = *std::max_element(returns.begin(), returns.end());
  double sum = 0.0;
  for (double r : returns) sum += r;
  cell.mean = sum / static_cast<double>(returns.size());
  double sq = 0.0;
  for (double r : returns) sq += (r - cell.mean) * (r - cell.mean);
  cell.stddev = std::sqrt(sq / static_cast<double>(returns.size()));
  return cell;
}

}  // namespace

std::string cmd_compare(const CompareOptions& options) {
  const fs::path root(options.dir);
  std::map<std::string, CompareRow> rows;  // key = row label

  if (!fs::exists(root)) {
    std::fprintf(stderr, "warning: directory %s does not exist\n",
                 options.dir.c_str());
  } else {
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (!entry.is_regular_file()) continue;
      const std::string filename = entry.path().filename().string();
      if (filename == "manifest.json") {
        try {
          const auto manifest = read_json_file(entry.path().string());
          const std::string env = manifest.at("env").get<std::string>();
          const std::string algo = manifest.at("algo").get<std::string>();
          std::vector<double> returns;
          for (const auto& run : manifest.at("runs")) {
            if (run.contains("best_episode_return")) {
              returns.push_back(run.at("best_episode_return").get<double>());
            }
          }
          if (returns.empty()) {
            std::fprintf(stderr, "warning: %s has no completed runs\n",
                         entry.path().string().c_str());
            continue;
          }
          std::string label = algo;
          std::transform(label.begin(), label.end(), label.begin(), ::toupper);
          rows[label].label = label;
          rows[label].by_env[env] = cell_from_returns(returns);
        } catch (const std::exception& e) {
          std::fprintf(stderr, "warning: skipping %s (%s)\n",
                       entry.path().string().c_str(), e.what());
        }
      } else if (filename.starts_with("baseline_") &&
                 filename.ends_with("_summary.json")) {
        try {
          const auto summary = read_json_file(entry.path().string());
          const std::string env = summary.at("env").get<std::string>();
          const std::string policy = summary.at("policy").get<std::string>();
          rows[policy].label = policy;
          rows[policy].by_env[env] = cell_from_returns(
              summary.at("episode_returns").get<std::vector<double>>());
        } catch (const std::exception& e) {
          std::fprintf(stderr, "warning: skipping %s (%s)\n",
                       entry.path().string().c_str(), e.what());
        }
      }
    }
  }
  if (rows.empty()) {
    std::fprintf(stderr, "warning: no completed runs found under %s\n",
                 options.dir.c_str());
  }

  const std::string prefix = options.out_prefix.empty()
                                 ? (root / "comparison").string()
                                 : options.out_prefix;
  if (!rows.empty() || fs::exists(root)) {
    fs::create_directories(fs::path(prefix).parent_path().empty()
                               ? "."
                               : fs::path(prefix).parent_path().string());
  }

  CsvWriter csv(prefix + ".csv");
  std::vector<std::string> header = {"policy", "stat"};
  for (const auto& env : env_names()) header.push_back(env + " (M$)");
  csv.write_row(header);
  std::ostringstream pretty;
  pretty << "Highest cumulative rewards across seeds, in millions of dollars\n";
  for (const auto& [label, row] : rows) {
    std::vector<std::string> max_row = {label, "max"};
    std::vector<std::string> mean_row = {label, "mean"};
    std::vector<std::string> std_row = {label, "std"};
    pretty << "  " << label << ":\n";
    for (const auto& env : env_names()) {
      const auto it = row.by_env.find(env);
      if (it == row.by_env.end() || !it->second.present) {
        max_row.push_back("");
        mean_row.push_back("");
        std_row.push_back("");
        continue;
      }
      const auto& cell = it->second;
      max_row.push_back(format_double(cell.max / 1e6));
      mean_row.push_back(format_double(cell.mean / 1e6));
      std_row.push_back(format_double(cell.stddev / 1e6));
      char buf[128];
      std::snprintf(buf, sizeof(buf), "    %-7s max %10.1f   %10.1f +/- %.1f\n",
                    env.c_str(), cell.max / 1e6, cell.mean / 1e6,
                    cell.stddev / 1e6);
      pretty << buf;
    }
    csv.write_row(max_row);
    csv.write_row(mean_row);
    csv.write_row(std_row);
  }
  csv.save();
  std::ofstream txt(prefix + ".txt");
  txt << pretty.str();
  std::cout << pretty.str();
  return prefix + ".csv";
}

ScheduleRecord cmd_export_schedule(const ExportScheduleOptions& options) {
  const Config cfg = resolve_config(options.config_path);
  const nlohmann::json checkpoint = read_json_file(options.checkpoint_path);
  const ScheduleRecord record = schedule_from_checkpoint(
      checkpoint, options.env_name, cfg, options.mode, options.seed);

  fs::create_directories(options.out_dir);
  const std::string stem = "schedule_" + options.env_name + "_" + options.mode;
  write_schedule_json((fs::path(options.out_dir) / (stem + ".json")).string(),
                      record);
  write_schedule_csv((fs::path(options.out_dir) / (stem + ".csv")).string(),
                     record, cfg.run.step_days);

  const Environment env = make_env(options.env_name, cfg);
  const auto rows = replay_schedule(env, record.actions,
                                    derive_seed(options.seed, "env"));
  write_trajectory_csv(
      (fs::path(options.out_dir) / ("trajectory_" + options.env_name + "_" +
                                    options.mode + ".csv"))
          .string(),
      env, rows);
  std::printf("%s schedule on %s: %zu steps, cumulative reward %.3f M$\n",
              options.mode.c_str(), options.env_name.c_str(),
              record.actions.size(), record.episode_return / 1e6);
  return record;
}

void cmd_list_envs() {
  const Config cfg;
  for (const auto& name : env_names()) {
    const Environment env = make_env(name, cfg);
    std::printf("%-7s observations: %-2d actions: %d\n", name.c_str(),
                env.observation_dim(), env.action_dim());
  }
}

}  // namespace epiplan::cli
