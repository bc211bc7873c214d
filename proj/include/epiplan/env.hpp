#ifndef EPIPLAN_ENV_HPP_
#define EPIPLAN_ENV_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epiplan/interventions.hpp"
#include "epiplan/rng.hpp"
#include "epiplan/stats.hpp"

namespace epiplan {

struct EnvConfig {
  ModelId model = ModelId::Sir;
  ActionSpace space = ActionSpace::A;
  int horizon = 52;        // weeks
  double step_days = 7.0;
  double dt = 0.1;         // integrator step, days
  double discount = 0.99;
  ModelParams model_params;
  CostParams costs;
  FacilityParams facilities;

  std::string name() const;  // e.g. "SIR-A"
};

const std::vector<std::string>& env_names();  // the six benchmark names

// "SIR-A" .. "C15-B"; throws invalid_argument listing the valid names.
EnvConfig env_config_from_name(const std::string& name, const Config& cfg = {});

// Untouched per-step quantities, available regardless of normalization.
struct StepInfo {
  CostLedger ledger;
  CostDeltas deltas;
  std::vector<double> raw_observation;
  double raw_reward = 0.0;
  Action applied_action;  // post-clamp, what the simulator actually saw
  WeekDiagnostics diagnostics;
};

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

// One benchmark MDP: weekly steps over a 52-week horizon, observation is the
// raw compartment vector, reward is the negative dollar cost of the step.
// Deterministic: the same action sequence from reset replays bit-exactly.
class Environment {
 public:
  explicit Environment(EnvConfig config);

  std::vector<double> reset(std::uint64_t seed = 0);
  // Components outside [0,1] are clamped at this boundary.
  StepResult step(const Action& action);
  StepResult step(std::span<const double> raw_action);

  int observation_dim() const { return model_.n_compartments(); }
  int action_dim() const { return epiplan::action_dim(config_.space); }
  const EnvConfig& config() const { return config_; }
  const CompartmentModel& model() const { return model_; }
  int current_step() const { return step_; }
  double current_day() const { return state_.sim_time; }
  bool done() const { return step_ >= config_.horizon; }
  const SimState& sim_state() const { return state_; }

 private:
  EnvConfig config_;
  CompartmentModel model_;
  SimState state_;
  int step_ = 0;
};

inline Environment make_env(const std::string& name, const Config& cfg = {}) {
  return Environment(env_config_from_name(name, cfg));
}

// z-score wrapper: observations and rewards are normalized against running
// statistics updated on every emission; raw values stay in info. Freeze for
// evaluation so replays do not disturb the statistics.
class NormalizedEnv {
 public:
  explicit NormalizedEnv(Environment env) : env_(std::move(env)) {}
  NormalizedEnv(Environment env, RunningStats obs_stats, RunningStats reward_stats)
      : env_(std::move(env)),
        obs_stats_(std::move(obs_stats)),
        reward_stats_(std::move(reward_stats)) {}

  std::vector<double> reset(std::uint64_t seed = 0);
  StepResult step(const Action& action);
  StepResult step(std::span<const double> raw_action);

  void set_frozen(bool frozen) { frozen_ = frozen; }
  const RunningStats& obs_stats() const { return obs_stats_; }
  const RunningStats& reward_stats() const { return reward_stats_; }
  Environment& inner() { return env_; }
  const Environment& inner() const { return env_; }
  int observation_dim() const { return env_.observation_dim(); }
  int action_dim() const { return env_.action_dim(); }

 private:
  std::vector<double> emit_observation(const std::vector<double>& raw);
  double emit_reward(double raw);

  Environment env_;
  RunningStats obs_stats_;
  RunningStats reward_stats_;
  bool frozen_ = false;
};

inline NormalizedEnv normalize_wrapper(Environment env) {
  return NormalizedEnv(std::move(env));
}

enum class BaselineKind { Aggressive, Lax, Random };

std::string baseline_name(BaselineKind k);
BaselineKind baseline_from_name(const std::string& name);

// Hand-crafted policies. t is the day within the episode; rng is consumed by
// Random only. Vaccination rates come from coverage targets: 85% of the
// population in 9 months (Aggressive) and 70% in 12 months (Lax).
Action baseline_action(BaselineKind kind, double t_days, ActionSpace space,
                       const ModelParams& params, Rng* rng);

using PolicyFn =
    std::function<Action(std::span<const double> obs, int step, double t_days, Rng& rng)>;

PolicyFn make_baseline_policy(BaselineKind kind, ActionSpace space,
                              const ModelParams& params);

struct EvalStats {
  std::vector<double> episode_returns;  // undiscounted, dollars
  double max = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // population std across episodes
};

// One full episode per seed on a fresh copy of env; returns raw cumulative
// rewards plus max/mean/std across seeds.
EvalStats evaluate_policy(const Environment& env, const PolicyFn& policy,
                          std::span<const std::uint64_t> seeds);

double discounted_return(std::span<const double> rewards, double gamma);

// One trajectory row per step: day, compartments, applied action, reward and
// the cost breakdown.
struct TrajectoryRow {
  double day = 0.0;
  std::vector<double> compartments;
  std::vector<double> action;
  double reward = 0.0;
  CostLedger ledger;
};

void write_trajectory_csv(const std::string& path,
                          const Environment& env_template,
                          std::span<const TrajectoryRow> rows);

// Replays a fixed action schedule on a fresh episode and records one row per
// step (the row's day is the day the action was applied).
std::vector<TrajectoryRow> replay_schedule(
    Environment env, std::span<const std::vector<double>> actions,
    std::uint64_t seed);

}  // namespace epiplan

#endif  // EPIPLAN_ENV_HPP_
