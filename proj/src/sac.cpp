#include "epiplan/sac.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace epiplan {

namespace {
constexpr double kLogTwoPi = 1.8378770664093453;
constexpr double kLogHalf = -0.6931471805599453;

void accumulate(CostLedger& into, const CostLedger& step) {
  into.mask_cost += step.mask_cost;
  into.vaccine_cost += step.vaccine_cost;
  into.school_cost += step.school_cost;
  into.workplace_cost += step.workplace_cost;
  into.infection_cost += step.infection_cost;
  into.hospitalization_cost += step.hospitalization_cost;
  into.fatality_cost += step.fatality_cost;
}

Eigen::MatrixXd stack_obs_action(const Eigen::MatrixXd& obs,
                                 const Eigen::MatrixXd& actions) {
  Eigen::MatrixXd x(obs.rows() + actions.rows(), obs.cols());
  x.topRows(obs.rows()) = obs;
  x.bottomRows(actions.rows()) = actions;
  return x;
}
}  // namespace

void SacAgent::split_head(const Eigen::MatrixXd& head, Eigen::MatrixXd& mean,
                          Eigen::MatrixXd& log_std_raw) const {
  mean = head.topRows(act_dim);
  log_std_raw = head.bottomRows(act_dim);
}

SacAgent make_sac_agent(int obs_dim, int act_dim, int hidden_size,
                        std::uint64_t init_seed) {
  Rng rng(init_seed);
  SacAgent agent;
  agent.act_dim = act_dim;
  agent.actor = make_mlp({obs_dim, hidden_size, hidden_size, 2 * act_dim},
                         {Activation::Relu, Activation::Relu, Activation::Identity});
  const auto make_critic = [&] {
    return make_mlp({obs_dim + act_dim, hidden_size, hidden_size, 1},
                    {Activation::Relu, Activation::Relu, Activation::Identity});
  };
  agent.critic1 = make_critic();
  agent.critic2 = make_critic();
  for (auto* net : {&agent.actor, &agent.critic1, &agent.critic2}) {
    for (auto& layer : net->layers) {
      uniform_fanin_init(layer, rng);
    }
  }
  agent.target1 = agent.critic1;
  agent.target2 = agent.critic2;
  return agent;
}

SacDiagnostics sac_update(const ReplayBuffer& buffer, SacAgent& agent,
                          Adam& actor_adam, Adam& critic_adam,
                          const SacParams& params, Rng& rng) {
  const int b = params.batch_size;
  const int act_dim = agent.act_dim;
  const double inv_b = 1.0 / static_cast<double>(b);
  const double alpha = params.entropy_alpha;

  const ReplayBuffer::Batch batch = buffer.sample(b, rng);

  // --- TD target from the target critics, next action freshly sampled ---
  Eigen::MatrixXd next_mean, next_log_std;
  {
    const Eigen::MatrixXd head = forward(agent.actor, batch.next_obs);
    agent.split_head(head, next_mean, next_log_std);
  }
  Eigen::MatrixXd next_actions(act_dim, b);
  Eigen::VectorXd next_log_probs(b);
  for (int k = 0; k < b; ++k) {
    double lp = 0.0;
    for (int i = 0; i < act_dim; ++i) {
      const double ls =
          std::clamp(next_log_std(i, k), kSacLogStdMin, kSacLogStdMax);
      const double sd = std::exp(ls);
      const double eps = rng.normal();
      const double u = next_mean(i, k) + sd * eps;
      next_actions(i, k) = 0.5 * (std::tanh(u) + 1.0);
      lp += -ls - 0.5 * kLogTwoPi - 0.5 * eps * eps;
      lp -= log_one_minus_tanh_sq(u) + kLogHalf;
    }
    next_log_probs(k) = lp;
  }
  const Eigen::MatrixXd next_x = stack_obs_action(batch.next_obs, next_actions);
  const Eigen::MatrixXd q1_next = forward(agent.target1, next_x);
  const Eigen::MatrixXd q2_next = forward(agent.target2, next_x);

  Eigen::VectorXd target(b);
  for (int k = 0; k < b; ++k) {
    const double q_min = std::min(q1_next(0, k), q2_next(0, k));
    target(k) = batch.rewards(k) +
                params.gamma * (1.0 - batch.dones(k)) *
                    (q_min - alpha * next_log_probs(k));
    if (!std::isfinite(target(k))) {
      throw std::runtime_error("sac_update: non-finite TD target");
    }
  }

  SacDiagnostics diag;

  // --- Critic update (one optimizer over both critics) ---
  const Eigen::MatrixXd x = stack_obs_action(batch.obs, batch.actions);
  {
    ForwardTrace trace1, trace2;
    const Eigen::MatrixXd q1 = forward(agent.critic1, x, trace1);
    const Eigen::MatrixXd q2 = forward(agent.critic2, x, trace2);
    Eigen::MatrixXd d_q1(1, b), d_q2(1, b);
    double loss = 0.0;
    for (int k = 0; k < b; ++k) {
      const double e1 = q1(0, k) - target(k);
      const double e2 = q2(0, k) - target(k);
      loss += 0.5 * (e1 * e1 + e2 * e2) * inv_b;
      d_q1(0, k) = e1 * inv_b;
      d_q2(0, k) = e2 * inv_b;
    }
    diag.critic_loss = loss;

    const MlpGrads g1 = backward(agent.critic1, trace1, d_q1);
    const MlpGrads g2 = backward(agent.critic2, trace2, d_q2);
    std::vector<double> flat_grads = flatten_grads(g1);
    const std::vector<double> flat_g2 = flatten_grads(g2);
    flat_grads.insert(flat_grads.end(), flat_g2.begin(), flat_g2.end());

    std::vector<double> flat_params = flatten_params(agent.critic1);
    const std::vector<double> flat_p2 = flatten_params(agent.critic2);
    flat_params.insert(flat_params.end(), flat_p2.begin(), flat_p2.end());

    critic_adam.step(flat_params, flat_grads);
    const std::size_t n1 = agent.critic1.parameter_count();
    unflatten_params(std::span<const double>(flat_params).subspan(0, n1),
                     agent.critic1);
    unflatten_params(std::span<const double>(flat_params).subspan(n1),
                     agent.critic2);
  }

  // --- Actor update via the reparameterized sample ---
  {
    Eigen::MatrixXd eps(act_dim, b);
    for (int k = 0; k < b; ++k) {
      for (int i = 0; i < act_dim; ++i) {
        eps(i, k) = rng.normal();
      }
    }
    const SacActorEval eval = sac_actor_eval(agent, batch.obs, eps, alpha);
    diag.actor_loss = eval.loss;
    diag.mean_q = eval.mean_q;
    diag.mean_log_prob = eval.mean_log_prob;
    if (!std::isfinite(eval.loss)) {
      throw std::runtime_error("sac_update: non-finite actor loss");
    }

    std::vector<double> flat_params = flatten_params(agent.actor);
    const std::vector<double> flat_grads = flatten_grads(eval.actor_grads);
    actor_adam.step(flat_params, flat_grads);
    unflatten_params(flat_params, agent.actor);
  }

  polyak_update(agent.critic1, agent.target1, params.tau);
  polyak_update(agent.critic2, agent.target2, params.tau);
  return diag;
}

SacActorEval sac_actor_eval(const SacAgent& agent, const Eigen::MatrixXd& obs,
                            const Eigen::MatrixXd& eps, double alpha) {
  const int act_dim = agent.act_dim;
  const int b = static_cast<int>(obs.cols());
  const double inv_b = 1.0 / static_cast<double>(b);

  ForwardTrace actor_trace;
  const Eigen::MatrixXd head = forward(agent.actor, obs, actor_trace);
  Eigen::MatrixXd mean, log_std_raw;
  agent.split_head(head, mean, log_std_raw);

  Eigen::MatrixXd u(act_dim, b), tanh_u(act_dim, b), sigma(act_dim, b),
      actions(act_dim, b);
  Eigen::VectorXd log_probs(b);
  for (int k = 0; k < b; ++k) {
    double lp = 0.0;
    for (int i = 0; i < act_dim; ++i) {
      const double ls =
          std::clamp(log_std_raw(i, k), kSacLogStdMin, kSacLogStdMax);
      sigma(i, k) = std::exp(ls);
      u(i, k) = mean(i, k) + sigma(i, k) * eps(i, k);
      tanh_u(i, k) = std::tanh(u(i, k));
      actions(i, k) = 0.5 * (tanh_u(i, k) + 1.0);
      lp += -ls - 0.5 * kLogTwoPi - 0.5 * eps(i, k) * eps(i, k);
      lp -= log_one_minus_tanh_sq(u(i, k)) + kLogHalf;
    }
    log_probs(k) = lp;
  }

  ForwardTrace q1_trace, q2_trace;
  const Eigen::MatrixXd xa = stack_obs_action(obs, actions);
  const Eigen::MatrixXd q1 = forward(agent.critic1, xa, q1_trace);
  const Eigen::MatrixXd q2 = forward(agent.critic2, xa, q2_trace);

  // Route -1/B through whichever critic attains the minimum, then read back
  // the gradient w.r.t. the action rows of the input.
  Eigen::MatrixXd d_q1 = Eigen::MatrixXd::Zero(1, b);
  Eigen::MatrixXd d_q2 = Eigen::MatrixXd::Zero(1, b);
  SacActorEval eval;
  double q_sum = 0.0;
  for (int k = 0; k < b; ++k) {
    const double q_min = std::min(q1(0, k), q2(0, k));
    eval.loss += (alpha * log_probs(k) - q_min) * inv_b;
    q_sum += q_min;
    if (q1(0, k) <= q2(0, k)) {
      d_q1(0, k) = -inv_b;
    } else {
      d_q2(0, k) = -inv_b;
    }
  }
  eval.mean_q = q_sum * inv_b;
  eval.mean_log_prob = log_probs.sum() * inv_b;

  Eigen::MatrixXd d_input1, d_input2;
  backward(agent.critic1, q1_trace, d_q1, &d_input1);
  backward(agent.critic2, q2_trace, d_q2, &d_input2);
  const Eigen::MatrixXd d_action =
      d_input1.bottomRows(act_dim) + d_input2.bottomRows(act_dim);

  // Chain rule through a = 0.5*(tanh(mu + sigma*eps) + 1) and through the
  // entropy term's dependence on the heads (eps held fixed).
  Eigen::MatrixXd d_head(2 * act_dim, b);
  for (int k = 0; k < b; ++k) {
    for (int i = 0; i < act_dim; ++i) {
      const double t = tanh_u(i, k);
      const double da_du = 0.5 * (1.0 - t * t);
      const double dlp_du = 2.0 * t;  // from -log(1 - tanh(u)^2)
      const double du_dls = sigma(i, k) * eps(i, k);

      const double d_mu = alpha * inv_b * dlp_du + d_action(i, k) * da_du;
      double d_ls = alpha * inv_b * (-1.0 + dlp_du * du_dls) +
                    d_action(i, k) * da_du * du_dls;
      // clamp kills the gradient outside its range
      if (log_std_raw(i, k) <= kSacLogStdMin ||
          log_std_raw(i, k) >= kSacLogStdMax) {
        d_ls = 0.0;
      }
      d_head(i, k) = d_mu;
      d_head(act_dim + i, k) = d_ls;
    }
  }

  eval.actor_grads = backward(agent.actor, actor_trace, d_head);
  return eval;
}

namespace {

std::pair<Eigen::VectorXd, Eigen::VectorXd> actor_heads(
    const SacAgent& agent, std::span<const double> obs) {
  const Eigen::VectorXd obs_vec =
      Eigen::Map<const Eigen::VectorXd>(obs.data(), obs.size());
  const Eigen::VectorXd head = forward(agent.actor, obs_vec);
  Eigen::VectorXd mean = head.head(agent.act_dim);
  Eigen::VectorXd log_std = head.tail(agent.act_dim);
  for (Eigen::Index i = 0; i < log_std.size(); ++i) {
    log_std(i) = std::clamp(log_std(i), kSacLogStdMin, kSacLogStdMax);
  }
  return {std::move(mean), std::move(log_std)};
}

ScheduleRecord rollout_episode_sac(const SacAgent& agent, NormalizedEnv& env,
                                   std::uint64_t env_seed, Rng* rng) {
  env.set_frozen(true);
  ScheduleRecord record;
  std::vector<double> obs = env.reset(env_seed);
  while (!env.inner().done()) {
    const auto [mean, log_std] = actor_heads(agent, obs);
    const Eigen::VectorXd action =
        rng == nullptr
            ? squashed_mean_action(mean)
            : squashed_gaussian_sample(mean, log_std, *rng).action;
    StepResult result =
        env.step(std::span<const double>(action.data(), action.size()));
    record.episode_return += result.info.raw_reward;
    record.actions.push_back(result.info.applied_action.to_vector());
    obs = std::move(result.observation);
  }
  return record;
}

}  // namespace

SacRunOutput train_sac(const std::string& env_name, const Config& cfg,
                       std::uint64_t master_seed,
                       std::optional<double> max_hours) {
  const auto t_start = std::chrono::steady_clock::now();
  const SacParams& params = cfg.sac;
  NormalizedEnv env = normalize_wrapper(make_env(env_name, cfg));

  const std::uint64_t env_seed = derive_seed(master_seed, "env");
  const std::uint64_t init_seed = derive_seed(master_seed, "init");
  Rng sample_rng(derive_seed(master_seed, "sample"));

  const int obs_dim = env.observation_dim();
  const int act_dim = env.action_dim();
  SacRunOutput out;
  out.agent = make_sac_agent(obs_dim, act_dim, params.hidden_size, init_seed);
  Adam actor_adam(out.agent.actor.parameter_count(), params.learning_rate);
  Adam critic_adam(
      out.agent.critic1.parameter_count() + out.agent.critic2.parameter_count(),
      params.learning_rate);
  ReplayBuffer buffer(params.buffer_capacity, obs_dim, act_dim);

  std::vector<double> obs = env.reset(env_seed);
  struct {
    double episode_return = 0.0;
    CostLedger costs;
    std::vector<std::vector<double>> actions;
  } episode;

  const std::int64_t total = cfg.run.total_timesteps;
  for (std::int64_t step = 1; step <= total; ++step) {
    if (max_hours && step % 512 == 0) {
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

    Eigen::VectorXd action(act_dim);
    if (step <= params.learning_starts) {
      // uniform warmup, as in the reference off-policy setup
      for (int i = 0; i < act_dim; ++i) action(i) = sample_rng.uniform();
    } else {
      const auto [mean, log_std] = actor_heads(out.agent, obs);
      action = squashed_gaussian_sample(mean, log_std, sample_rng).action;
    }

    StepResult result =
        env.step(std::span<const double>(action.data(), action.size()));

    buffer.insert(obs, std::span<const double>(action.data(), action.size()),
                  result.reward * params.reward_scale, result.observation,
                  result.done);

    episode.episode_return += result.info.raw_reward;
    accumulate(episode.costs, result.info.ledger);
    episode.actions.push_back(result.info.applied_action.to_vector());

    if (result.done) {
      EpisodeSummary summary;
      summary.end_timestep = step;
      summary.episode_return = episode.episode_return;
      summary.costs = episode.costs;
      out.run.curve.push_back(summary);
      if (out.run.best_sampled.actions.empty() ||
          episode.episode_return > out.run.best_sampled.episode_return) {
        out.run.best_sampled.episode_return = episode.episode_return;
        out.run.best_sampled.actions = episode.actions;
      }
      episode = {};
      obs = env.reset(env_seed);
    } else {
      obs = std::move(result.observation);
    }

    if (step >= params.learning_starts && step % params.train_frequency == 0) {
      for (int g = 0; g < params.gradient_steps; ++g) {
        sac_update(buffer, out.agent, actor_adam, critic_adam, params,
                   sample_rng);
      }
    }
    out.run.timesteps_done = step;
  }

  out.run.greedy = greedy_episode_sac(out.agent, env, env_seed);
  out.obs_stats = env.obs_stats();
  out.reward_stats = env.reward_stats();
  return out;
}

ScheduleRecord greedy_episode_sac(const SacAgent& agent, NormalizedEnv env,
                                  std::uint64_t env_seed) {
  return rollout_episode_sac(agent, env, env_seed, nullptr);
}

ScheduleRecord sampled_episode_sac(const SacAgent& agent, NormalizedEnv env,
                                   std::uint64_t env_seed, Rng& rng) {
  return rollout_episode_sac(agent, env, env_seed, &rng);
}

}  // namespace epiplan
