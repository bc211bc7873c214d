#include "epiplan/ppo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace epiplan {

namespace {
constexpr double kLogTwoPi = 1.8378770664093453;

void accumulate(CostLedger& into, const CostLedger& step) {
  into.mask_cost += step.mask_cost;
  into.vaccine_cost += step.vaccine_cost;
  into.school_cost += step.school_cost;
  into.workplace_cost += step.workplace_cost;
  into.infection_cost += step.infection_cost;
  into.hospitalization_cost += step.hospitalization_cost;
  into.fatality_cost += step.fatality_cost;
}
}  // namespace

std::size_t PpoAgent::parameter_count() const {
  return actor.parameter_count() + static_cast<std::size_t>(log_std.size()) +
         critic.parameter_count();
}

std::vector<double> PpoAgent::flatten() const {
  std::vector<double> flat = flatten_params(actor);
  flat.insert(flat.end(), log_std.data(), log_std.data() + log_std.size());
  const std::vector<double> critic_flat = flatten_params(critic);
  flat.insert(flat.end(), critic_flat.begin(), critic_flat.end());
  return flat;
}

void PpoAgent::unflatten(std::span<const double> flat) {
  const std::size_t na = actor.parameter_count();
  const std::size_t ns = static_cast<std::size_t>(log_std.size());
  unflatten_params(flat.subspan(0, na), actor);
  std::copy(flat.begin() + na, flat.begin() + na + ns, log_std.data());
  unflatten_params(flat.subspan(na + ns), critic);
}

PpoAgent make_ppo_agent(int obs_dim, int act_dim, int hidden_size,
                        std::uint64_t init_seed) {
  Rng rng(init_seed);
  PpoAgent agent;
  agent.actor = make_mlp({obs_dim, hidden_size, hidden_size, act_dim},
                         {Activation::Tanh, Activation::Tanh, Activation::Identity});
  agent.critic = make_mlp({obs_dim, hidden_size, hidden_size, 1},
                          {Activation::Tanh, Activation::Tanh, Activation::Identity});
  const double hidden_gain = std::sqrt(2.0);
  orthogonal_init(agent.actor.layers[0], hidden_gain, rng);
  orthogonal_init(agent.actor.layers[1], hidden_gain, rng);
  orthogonal_init(agent.actor.layers[2], 0.01, rng);  // small policy head
  orthogonal_init(agent.critic.layers[0], hidden_gain, rng);
  orthogonal_init(agent.critic.layers[1], hidden_gain, rng);
  orthogonal_init(agent.critic.layers[2], 1.0, rng);
  agent.log_std = Eigen::VectorXd::Zero(act_dim);
  return agent;
}

PpoMinibatchEval ppo_minibatch_eval(const PpoAgent& agent,
                                    const Eigen::MatrixXd& obs,
                                    const Eigen::MatrixXd& actions,
                                    std::span<const double> old_log_probs,
                                    std::span<const double> advantages,
                                    std::span<const double> returns,
                                    const PpoParams& params) {
  const int mb_size = static_cast<int>(obs.cols());
  const int act_dim = static_cast<int>(actions.rows());
  const double inv_b = 1.0 / static_cast<double>(mb_size);

  ForwardTrace actor_trace, critic_trace;
  const Eigen::MatrixXd means = forward(agent.actor, obs, actor_trace);
  const Eigen::MatrixXd values = forward(agent.critic, obs, critic_trace);

  PpoMinibatchEval eval;

  // New log-probs and ratios.
  std::vector<double> ratios(mb_size);
  Eigen::MatrixXd z(act_dim, mb_size);  // (a - mu)/sigma
  double kl_sum = 0.0, ratio_sum = 0.0;
  for (int k = 0; k < mb_size; ++k) {
    double lp = 0.0;
    for (int i = 0; i < act_dim; ++i) {
      const double sd = std::exp(agent.log_std(i));
      z(i, k) = (actions(i, k) - means(i, k)) / sd;
      lp += -agent.log_std(i) - 0.5 * kLogTwoPi - 0.5 * z(i, k) * z(i, k);
    }
    const double log_ratio = lp - old_log_probs[k];
    ratios[k] = std::exp(log_ratio);
    kl_sum += (ratios[k] - 1.0) - log_ratio;
    ratio_sum += ratios[k];
  }
  eval.mean_ratio = ratio_sum * inv_b;
  eval.approx_kl = kl_sum * inv_b;

  // Loss pieces and per-sample output gradients.
  Eigen::MatrixXd d_mean = Eigen::MatrixXd::Zero(act_dim, mb_size);
  Eigen::VectorXd d_log_std = Eigen::VectorXd::Zero(act_dim);
  Eigen::MatrixXd d_value(1, mb_size);
  for (int k = 0; k < mb_size; ++k) {
    const double rho = ratios[k];
    const double clipped =
        std::clamp(rho, 1.0 - params.clip_coef, 1.0 + params.clip_coef);
    const double l_unclipped = -advantages[k] * rho;
    const double l_clipped = -advantages[k] * clipped;
    eval.policy_loss += std::max(l_unclipped, l_clipped) * inv_b;
    if (l_clipped > l_unclipped) eval.clip_hits += 1.0;

    // d(loss)/d(log pi_new): zero when the clipped branch is active.
    const double d_lp =
        l_unclipped >= l_clipped ? -advantages[k] * rho * inv_b : 0.0;
    for (int i = 0; i < act_dim; ++i) {
      const double sd = std::exp(agent.log_std(i));
      d_mean(i, k) = d_lp * z(i, k) / sd;
      d_log_std(i) += d_lp * (z(i, k) * z(i, k) - 1.0);
    }

    const double v_err = values(0, k) - returns[k];
    eval.value_loss += 0.5 * v_err * v_err * inv_b;
    d_value(0, k) = params.value_coef * v_err * inv_b;
  }
  // Entropy bonus: -c_ent * sum_i (log_std_i + const).
  d_log_std.array() -= params.entropy_coef;

  eval.loss = eval.policy_loss + params.value_coef * eval.value_loss -
              params.entropy_coef * diag_gaussian_entropy(agent.log_std);

  const MlpGrads actor_grads = backward(agent.actor, actor_trace, d_mean);
  const MlpGrads critic_grads = backward(agent.critic, critic_trace, d_value);

  eval.flat_grads = flatten_grads(actor_grads);
  eval.flat_grads.insert(eval.flat_grads.end(), d_log_std.data(),
                         d_log_std.data() + d_log_std.size());
  const std::vector<double> critic_flat = flatten_grads(critic_grads);
  eval.flat_grads.insert(eval.flat_grads.end(), critic_flat.begin(),
                         critic_flat.end());
  return eval;
}

PpoDiagnostics ppo_update(const Rollout& rollout, PpoAgent& agent, Adam& adam,
                          const PpoParams& params, Rng& rng) {
  const int n = rollout.size();
  const int act_dim = static_cast<int>(rollout.actions.rows());
  if (params.num_minibatches <= 0 || n % params.num_minibatches != 0) {
    throw std::invalid_argument(
        "ppo_update: rollout length must be divisible by num_minibatches");
  }
  const int mb_size = n / params.num_minibatches;

  const GaeResult gae =
      compute_gae(rollout.rewards, rollout.values, rollout.dones,
                  rollout.bootstrap_value, params.gamma, params.gae_lambda);

  std::vector<int> indices(n);
  std::iota(indices.begin(), indices.end(), 0);

  PpoDiagnostics diag;
  std::vector<double> flat_params = agent.flatten();
  double clip_hits = 0.0, sample_count = 0.0;
  bool first_minibatch = true;

  for (int epoch = 0; epoch < params.update_epochs; ++epoch) {
    rng.shuffle(indices.begin(), indices.end());
    for (int start = 0; start < n; start += mb_size) {
      // Gather the minibatch.
      Eigen::MatrixXd obs(rollout.observations.rows(), mb_size);
      Eigen::MatrixXd actions(act_dim, mb_size);
      std::vector<double> old_lp(mb_size), adv(mb_size), ret(mb_size);
      for (int k = 0; k < mb_size; ++k) {
        const int idx = indices[start + k];
        obs.col(k) = rollout.observations.col(idx);
        actions.col(k) = rollout.actions.col(idx);
        old_lp[k] = rollout.log_probs[idx];
        adv[k] = gae.advantages[idx];
        ret[k] = gae.returns[idx];
      }
      normalize_advantages(adv);

      PpoMinibatchEval eval =
          ppo_minibatch_eval(agent, obs, actions, old_lp, adv, ret, params);
      if (first_minibatch) {
        diag.mean_ratio_first_minibatch = eval.mean_ratio;
        first_minibatch = false;
      }
      clip_hits += eval.clip_hits;
      sample_count += mb_size;

      if (!std::isfinite(eval.loss)) {
        throw std::runtime_error("ppo_update: non-finite loss");
      }

      diag.grad_norm = clip_grad_norm(eval.flat_grads, params.max_grad_norm);
      adam.step(flat_params, eval.flat_grads);
      agent.unflatten(flat_params);

      diag.policy_loss = eval.policy_loss;
      diag.value_loss = eval.value_loss;
      diag.approx_kl = eval.approx_kl;
    }
  }
  diag.entropy = diag_gaussian_entropy(agent.log_std);
  diag.clip_fraction = sample_count > 0 ? clip_hits / sample_count : 0.0;
  return diag;
}

namespace {

struct EpisodeTracker {
  double episode_return = 0.0;
  CostLedger costs;
  std::vector<std::vector<double>> actions;

  void record_step(const StepInfo& info) {
    episode_return += info.raw_reward;
    accumulate(costs, info.ledger);
    actions.push_back(info.applied_action.to_vector());
  }
  void reset() {
    episode_return = 0.0;
    costs = CostLedger{};
    actions.clear();
  }
};

}  // namespace

PpoRunOutput train_ppo(const std::string& env_name, const Config& cfg,
                       std::uint64_t master_seed,
                       std::optional<double> max_hours) {
  const auto t_start = std::chrono::steady_clock::now();
  const PpoParams& params = cfg.ppo;
  NormalizedEnv env = normalize_wrapper(make_env(env_name, cfg));

  const std::uint64_t env_seed = derive_seed(master_seed, "env");
  const std::uint64_t init_seed = derive_seed(master_seed, "init");
  Rng sample_rng(derive_seed(master_seed, "sample"));

  const int obs_dim = env.observation_dim();
  const int act_dim = env.action_dim();
  PpoRunOutput out;
  out.agent = make_ppo_agent(obs_dim, act_dim, params.hidden_size, init_seed);
  Adam adam(out.agent.parameter_count(), params.learning_rate);

  const int n_steps = params.rollout_steps;
  Rollout rollout(obs_dim, act_dim, n_steps);

  std::vector<double> obs = env.reset(env_seed);
  EpisodeTracker episode;
  std::int64_t global_step = 0;
  const std::int64_t total = cfg.run.total_timesteps;
  const std::int64_t iterations = (total + n_steps - 1) / n_steps;

  for (std::int64_t iter = 0; iter < iterations; ++iter) {
    if (max_hours) {
      const double hours =
          std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                        t_start)
              .count() /
          3600.0;
      if (hours > *max_hours) {
        out.run.completed = false;
        break;
      }
    }
    for (int t = 0; t < n_steps; ++t) {
      const Eigen::VectorXd obs_vec =
          Eigen::Map<const Eigen::VectorXd>(obs.data(), obs.size());
      const Eigen::VectorXd mean = forward(out.agent.actor, obs_vec);
      const Eigen::VectorXd action =
          diag_gaussian_sample(mean, out.agent.log_std, sample_rng);
      const double log_prob =
          diag_gaussian_log_prob(mean, out.agent.log_std, action);
      const double value = forward(out.agent.critic, obs_vec)(0);

      StepResult result =
          env.step(std::span<const double>(action.data(), action.size()));
      ++global_step;

      rollout.observations.col(t) = obs_vec;
      rollout.actions.col(t) = action;
      rollout.log_probs[t] = log_prob;
      rollout.values[t] = value;
      rollout.rewards[t] = result.reward;
      rollout.dones[t] = result.done ? 1.0 : 0.0;

      episode.record_step(result.info);
      if (result.done) {
        EpisodeSummary summary;
        summary.end_timestep = global_step;
        summary.episode_return = episode.episode_return;
        summary.costs = episode.costs;
        out.run.curve.push_back(summary);
        if (out.run.best_sampled.actions.empty() ||
            episode.episode_return > out.run.best_sampled.episode_return) {
          out.run.best_sampled.episode_return = episode.episode_return;
          out.run.best_sampled.actions = episode.actions;
        }
        episode.reset();
        obs = env.reset(env_seed);
      } else {
        obs = std::move(result.observation);
      }
    }
    const Eigen::VectorXd obs_vec =
        Eigen::Map<const Eigen::VectorXd>(obs.data(), obs.size());
    rollout.bootstrap_value = forward(out.agent.critic, obs_vec)(0);

    ppo_update(rollout, out.agent, adam, params, sample_rng);
  }

  out.run.timesteps_done = global_step;
  out.run.greedy = greedy_episode_ppo(out.agent, env, env_seed);
  out.obs_stats = env.obs_stats();
  out.reward_stats = env.reward_stats();
  return out;
}

namespace {
ScheduleRecord rollout_episode_ppo(const PpoAgent& agent, NormalizedEnv& env,
                                   std::uint64_t env_seed, Rng* rng) {
  env.set_frozen(true);
  ScheduleRecord record;
  std::vector<double> obs = env.reset(env_seed);
  while (!env.inner().done()) {
    const Eigen::VectorXd obs_vec =
        Eigen::Map<const Eigen::VectorXd>(obs.data(), obs.size());
    const Eigen::VectorXd mean = forward(agent.actor, obs_vec);
    const Eigen::VectorXd action =
        rng == nullptr ? mean
                       : diag_gaussian_sample(mean, agent.log_std, *rng);
    StepResult result =
        env.step(std::span<const double>(action.data(), action.size()));
    record.episode_return += result.info.raw_reward;
    record.actions.push_back(result.info.applied_action.to_vector());
    obs = std::move(result.observation);
  }
  return record;
}
}  // namespace

ScheduleRecord greedy_episode_ppo(const PpoAgent& agent, NormalizedEnv env,
                                  std::uint64_t env_seed) {
  return rollout_episode_ppo(agent, env, env_seed, nullptr);
}

ScheduleRecord sampled_episode_ppo(const PpoAgent& agent, NormalizedEnv env,
                                   std::uint64_t env_seed, Rng& rng) {
  return rollout_episode_ppo(agent, env, env_seed, &rng);
}

}  // namespace epiplan
