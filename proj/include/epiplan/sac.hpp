#ifndef EPIPLAN_SAC_HPP_
#define EPIPLAN_SAC_HPP_

#include <cstdint>
#include <optional>

#include "epiplan/env.hpp"
#include "epiplan/ppo.hpp"  // RunResult, ScheduleRecord, EpisodeSummary
#include "epiplan/rl_common.hpp"

namespace epiplan {

// Tanh-Gaussian actor (mean and log-std heads share one trunk) with twin Q
// critics and Polyak-averaged targets. Entropy coefficient is fixed; the
// reward scale plays its inverse.
struct SacAgent {
  Mlp actor;  // obs -> [mean | log_std], log_std clamped in the head
  Mlp critic1, critic2;
  Mlp target1, target2;
  int act_dim = 0;

  void split_head(const Eigen::MatrixXd& head, Eigen::MatrixXd& mean,
                  Eigen::MatrixXd& log_std_raw) const;
};

SacAgent make_sac_agent(int obs_dim, int act_dim, int hidden_size,
                        std::uint64_t init_seed);

struct SacDiagnostics {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double mean_q = 0.0;
  double mean_log_prob = 0.0;
};

// One gradient step on a sampled batch: TD targets from the target critics
// with a freshly sampled next action, MSE critic losses, reparameterized
// actor loss alpha*logpi - min(Q1,Q2), then Polyak updates.
SacDiagnostics sac_update(const ReplayBuffer& buffer, SacAgent& agent,
                          Adam& actor_adam, Adam& critic_adam,
                          const SacParams& params, Rng& rng);

struct SacActorEval {
  double loss = 0.0;
  MlpGrads actor_grads;
  double mean_q = 0.0;
  double mean_log_prob = 0.0;
};

// Actor loss mean(alpha*logpi(a|s) - min(Q1,Q2)(s,a)) with a = squash(mu +
// sigma*eps) for fixed reparameterization noise eps (act_dim x batch), and
// its exact gradient w.r.t. the actor parameters. Exposed separately so the
// chain rule through the squash and the critics can be verified numerically.
SacActorEval sac_actor_eval(const SacAgent& agent, const Eigen::MatrixXd& obs,
                            const Eigen::MatrixXd& eps, double alpha);

struct SacRunOutput {
  RunResult run;
  SacAgent agent;
  RunningStats obs_stats;
  RunningStats reward_stats;
};

SacRunOutput train_sac(const std::string& env_name, const Config& cfg,
                       std::uint64_t master_seed,
                       std::optional<double> max_hours = std::nullopt);

ScheduleRecord greedy_episode_sac(const SacAgent& agent, NormalizedEnv env,
                                  std::uint64_t env_seed);
ScheduleRecord sampled_episode_sac(const SacAgent& agent, NormalizedEnv env,
                                   std::uint64_t env_seed, Rng& rng);

}  // namespace epiplan

#endif  // EPIPLAN_SAC_HPP_
