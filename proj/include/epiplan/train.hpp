#ifndef EPIPLAN_TRAIN_HPP_
#define EPIPLAN_TRAIN_HPP_

#include <cstdint>
#include <optional>
#include <string>

#include "epiplan/ppo.hpp"
#include "epiplan/sac.hpp"

namespace epiplan {

enum class Algo { Ppo, Sac };

std::string algo_name(Algo a);
Algo algo_from_name(const std::string& name);  // "ppo" or "sac"

struct TrainResult {
  std::string env_name;
  Algo algo = Algo::Ppo;
  std::uint64_t seed = 0;
  RunResult run;
  nlohmann::json checkpoint;
  double wall_seconds = 0.0;
};

// Full training run: learning curve, best sampled episode and its schedule,
// greedy schedule, and a resumable checkpoint.
TrainResult train(const std::string& env_name, Algo algo, const Config& cfg,
                  std::uint64_t master_seed,
                  std::optional<double> max_hours = std::nullopt);

// Schedule regeneration from a checkpoint; mode is "greedy" or "sampled".
// Throws invalid_argument when the checkpoint dims do not match the env.
ScheduleRecord schedule_from_checkpoint(const nlohmann::json& checkpoint,
                                        const std::string& env_name,
                                        const Config& cfg,
                                        const std::string& mode,
                                        std::uint64_t seed);

// --- artifact writers (shared by the CLI and the test suites) ---

void write_curve_csv(const std::string& path,
                     std::span<const EpisodeSummary> curve);
// The schedule payload is a bare JSON array of `horizon` action vectors.
void write_schedule_json(const std::string& path, const ScheduleRecord& record);
// (day, m, v[, s, w]) rows for plotting.
void write_schedule_csv(const std::string& path, const ScheduleRecord& record,
                        double step_days);
void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace epiplan

#endif  // EPIPLAN_TRAIN_HPP_
