#ifndef EPIPLAN_PPO_HPP_
#define EPIPLAN_PPO_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "epiplan/env.hpp"
#include "epiplan/rl_common.hpp"

namespace epiplan {

// Actor (state mean + state-independent learned log-std) and critic. One
// Adam instance covers the joint parameter vector [actor | log_std | critic].
struct PpoAgent {
  Mlp actor;
  Eigen::VectorXd log_std;
  Mlp critic;

  std::size_t parameter_count() const;
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);
};

PpoAgent make_ppo_agent(int obs_dim, int act_dim, int hidden_size,
                        std::uint64_t init_seed);

struct PpoDiagnostics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
  double mean_ratio_first_minibatch = 0.0;  // 1 at epoch 0 by construction
};

// One full update pass: update_epochs sweeps over shuffled minibatches with
// per-minibatch advantage normalization, clipped surrogate, 0.5*MSE value
// loss weighted by value_coef, global grad-norm clipping, Adam.
PpoDiagnostics ppo_update(const Rollout& rollout, PpoAgent& agent, Adam& adam,
                          const PpoParams& params, Rng& rng);

struct PpoMinibatchEval {
  double loss = 0.0;         // pg + vf_coef*v_loss - ent_coef*entropy
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double approx_kl = 0.0;
  double mean_ratio = 0.0;
  double clip_hits = 0.0;
  std::vector<double> flat_grads;  // [actor | log_std | critic] order
};

// Loss and exact gradient for one minibatch (advantages already normalized).
// Exposed separately so the surrogate/value/entropy gradient can be checked
// against finite differences.
PpoMinibatchEval ppo_minibatch_eval(const PpoAgent& agent,
                                    const Eigen::MatrixXd& obs,
                                    const Eigen::MatrixXd& actions,
                                    std::span<const double> old_log_probs,
                                    std::span<const double> advantages,
                                    std::span<const double> returns,
                                    const PpoParams& params);

struct EpisodeSummary {
  std::int64_t end_timestep = 0;
  double episode_return = 0.0;  // raw dollars, undiscounted
  CostLedger costs;             // summed over the episode
};

struct ScheduleRecord {
  double episode_return = 0.0;
  std::vector<std::vector<double>> actions;  // horizon x act_dim, in [0,1]
};

struct RunResult {
  std::vector<EpisodeSummary> curve;
  ScheduleRecord best_sampled;  // highest-return training episode
  ScheduleRecord greedy;        // mean-action episode with final parameters
  bool completed = true;        // false if the wall-clock guard fired
  std::int64_t timesteps_done = 0;
};

struct PpoRunOutput {
  RunResult run;
  PpoAgent agent;
  RunningStats obs_stats;
  RunningStats reward_stats;
};

PpoRunOutput train_ppo(const std::string& env_name, const Config& cfg,
                       std::uint64_t master_seed,
                       std::optional<double> max_hours = std::nullopt);

// Mean-action episode on a frozen-stats copy of the environment.
ScheduleRecord greedy_episode_ppo(const PpoAgent& agent, NormalizedEnv env,
                                  std::uint64_t env_seed);
// Sampled episode (fresh rng), for schedule export from a checkpoint.
ScheduleRecord sampled_episode_ppo(const PpoAgent& agent, NormalizedEnv env,
                                   std::uint64_t env_seed, Rng& rng);

}  // namespace epiplan

#endif  // EPIPLAN_PPO_HPP_
