#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "epiplan/env.hpp"
#include "epiplan/ppo.hpp"
#include "epiplan/rl_common.hpp"
#include "epiplan/sac.hpp"
#include "epiplan/train.hpp"

using namespace epiplan;

namespace {

// Direct summation A_t = sum_k (gamma*lambda)^k delta_{t+k}, truncated at
// episode ends; independent of the recursive implementation.
std::vector<double> brute_force_gae(const std::vector<double>& rewards,
                                    const std::vector<double>& values,
                                    const std::vector<double>& dones,
                                    double bootstrap, double gamma,
                                    double lambda) {
  const std::size_t n = rewards.size();
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double coef = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      const double next_v = k + 1 < n ? values[k + 1] : bootstrap;
      const double delta =
          rewards[k] + gamma * next_v * (1.0 - dones[k]) - values[k];
      adv[t] += coef * delta;
      if (dones[k] > 0.5) break;
      coef *= gamma * lambda;
    }
  }
  return adv;
}

}  // namespace

TEST_CASE("GAE: single terminal step reduces to r - V") {
  const auto g = compute_gae({{5.0}}, {{2.0}}, {{1.0}}, 99.0, 0.99, 0.95);
  CHECK(g.advantages[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(g.returns[0] == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("GAE: lambda=0 collapses to one-step TD residuals") {
  Rng rng(1);
  std::vector<double> r(8), v(8), d(8, 0.0);
  for (int i = 0; i < 8; ++i) {
    r[i] = rng.normal();
    v[i] = rng.normal();
  }
  d[3] = 1.0;
  const double bootstrap = rng.normal();
  const auto g = compute_gae(r, v, d, bootstrap, 0.99, 0.0);
  for (int t = 0; t < 8; ++t) {
    const double next_v = t + 1 < 8 ? v[t + 1] : bootstrap;
    const double delta = r[t] + 0.99 * next_v * (1.0 - d[t]) - v[t];
    CHECK(g.advantages[t] == doctest::Approx(delta).epsilon(1e-15));
  }
}

TEST_CASE("GAE matches brute-force summation on 100 random sequences") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(64);
    std::vector<double> r(n), v(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = 2.0 * rng.normal();
      v[i] = rng.normal();
      d[i] = rng.uniform() < 0.15 ? 1.0 : 0.0;
    }
    const double bootstrap = rng.normal();
    const auto g = compute_gae(r, v, d, bootstrap, 0.99, 0.95);
    const auto ref = brute_force_gae(r, v, d, bootstrap, 0.99, 0.95);
    for (std::size_t t = 0; t < n; ++t) {
      CHECK(std::abs(g.advantages[t] - ref[t]) <= 1e-12);
      CHECK(g.returns[t] == doctest::Approx(ref[t] + v[t]).epsilon(1e-12));
    }
  }
}

TEST_CASE("clipped surrogate: hand-evaluated 4-sample batch") {
  // min(rho*A, clip(rho)*A): 2.4, 0.5, -1.0, -2.6 -> mean -0.175
  const std::vector<double> ratios = {1.5, 0.5, 1.0, 1.3};
  const std::vector<double> advantages = {2.0, 1.0, -1.0, -2.0};
  CHECK(clipped_surrogate_loss(ratios, advantages, 0.2) ==
        doctest::Approx(0.175).epsilon(1e-10));
}

TEST_CASE("clipped surrogate: loss is flat in rho once the clip is active") {
  // positive advantage, rho beyond 1+clip: the clipped branch wins and the
  // loss no longer depends on rho
  const std::vector<double> adv = {1.0};
  const double at_15 = clipped_surrogate_loss({{1.5}}, adv, 0.2);
  const double at_16 = clipped_surrogate_loss({{1.6}}, adv, 0.2);
  CHECK(at_15 == at_16);
  CHECK(at_15 == doctest::Approx(-1.2).epsilon(1e-12));
  // negative advantage at the same rho: the unclipped branch is the min, so
  // the loss still moves with rho
  const std::vector<double> neg = {-1.0};
  CHECK(clipped_surrogate_loss({{1.5}}, neg, 0.2) !=
        clipped_surrogate_loss({{1.6}}, neg, 0.2));
}

TEST_CASE("Gaussian heads collapse to the mean as std -> 0") {
  Eigen::VectorXd mean(2), tiny_log_std(2);
  mean << 0.7, 0.2;
  tiny_log_std << -40.0, -40.0;
  Rng rng(31);
  const Eigen::VectorXd raw = diag_gaussian_sample(mean, tiny_log_std, rng);
  CHECK((raw - mean).cwiseAbs().maxCoeff() < 1e-12);
  const auto squashed = squashed_gaussian_sample(mean, tiny_log_std, rng);
  CHECK((squashed.action - squashed_mean_action(mean)).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("default hyperparameters match the chosen settings") {
  const PpoParams ppo;
  CHECK(ppo.learning_rate == 3e-4);
  CHECK(ppo.rollout_steps == 2048);
  CHECK(ppo.gamma == 0.99);
  CHECK(ppo.gae_lambda == 0.95);
  CHECK(ppo.num_minibatches == 32);
  CHECK(ppo.update_epochs == 10);
  CHECK(ppo.clip_coef == 0.2);
  CHECK(ppo.entropy_coef == 0.0);
  CHECK(ppo.value_coef == 0.5);
  CHECK(ppo.max_grad_norm == 0.5);
  CHECK(ppo.rollout_steps % ppo.num_minibatches == 0);

  const SacParams sac;
  CHECK(sac.reward_scale == 100.0);
  CHECK(sac.learning_rate == 3e-4);
  CHECK(sac.train_frequency == 5);
  CHECK(sac.learning_starts == 1000);
  CHECK(sac.batch_size == 256);
  CHECK(sac.tau == 0.005);
  CHECK(sac.gamma == 0.99);
  CHECK(sac.buffer_capacity == 1'000'000);
  CHECK(sac.gradient_steps == 1);
  CHECK(sac.entropy_alpha == 1.0);

  const Config cfg;
  CHECK(cfg.run.total_timesteps == 30'000);
  CHECK(cfg.run.horizon_weeks == 52);
  CHECK(cfg.run.discount == 0.99);
}

TEST_CASE("advantage normalization: mean 0, std 1") {
  Rng rng(3);
  std::vector<double> adv(64);
  for (auto& a : adv) a = 5.0 + 3.0 * rng.normal();
  normalize_advantages(adv);
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= adv.size();
  double sq = 0.0;
  for (double a : adv) sq += (a - mean) * (a - mean);
  const double std = std::sqrt(sq / (adv.size() - 1.0));
  CHECK(std::abs(mean) <= 1e-6);
  CHECK(std::abs(std - 1.0) <= 1e-6);
}

TEST_CASE("replay buffer: ring eviction keeps the newest capacity items") {
  ReplayBuffer buffer(8, 2, 1);
  const std::vector<double> obs = {0.0, 0.0};
  for (int i = 0; i < 11; ++i) {
    buffer.insert(obs, {{0.5}}, static_cast<double>(i), obs, false);
  }
  CHECK(buffer.size() == 8);
  CHECK(buffer.reward_at(0) == 3.0);  // 0,1,2 were evicted
  CHECK(buffer.reward_at(7) == 10.0);
}

TEST_CASE("replay buffer: seeded sampling is reproducible") {
  ReplayBuffer buffer(100, 1, 1);
  Rng fill(5);
  for (int i = 0; i < 50; ++i) {
    buffer.insert({{fill.normal()}}, {{fill.uniform()}}, fill.normal(),
                  {{fill.normal()}}, false);
  }
  Rng rng_a(9), rng_b(9);
  const auto batch_a = buffer.sample(16, rng_a);
  const auto batch_b = buffer.sample(16, rng_b);
  CHECK(batch_a.rewards == batch_b.rewards);
  CHECK(batch_a.obs == batch_b.obs);
}

TEST_CASE("Polyak: tau=1 copies, tau=0 freezes, contraction is geometric") {
  Rng rng(11);
  Mlp online = make_mlp({3, 4, 1}, {Activation::Relu, Activation::Identity});
  Mlp target = online;
  for (auto& layer : online.layers) uniform_fanin_init(layer, rng);

  Mlp copy_all = target;
  polyak_update(online, copy_all, 1.0);
  CHECK(copy_all.layers[0].w == online.layers[0].w);

  Mlp frozen = target;
  polyak_update(online, frozen, 0.0);
  CHECK(frozen.layers[0].w == target.layers[0].w);

  const double tau = 0.005;
  auto distance = [&](const Mlp& a, const Mlp& b) {
    double sq = 0.0;
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
      sq += (a.layers[l].w - b.layers[l].w).squaredNorm();
      sq += (a.layers[l].b - b.layers[l].b).squaredNorm();
    }
    return std::sqrt(sq);
  };
  double prev = distance(target, online);
  for (int i = 0; i < 20; ++i) {
    polyak_update(online, target, tau);
    const double now = distance(target, online);
    CHECK(now <= prev);
    CHECK(now == doctest::Approx(prev * (1.0 - tau)).epsilon(1e-9));
    prev = now;
  }
}

TEST_CASE("squashed Gaussian: symmetry and sample/log-prob consistency") {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  CHECK(squashed_mean_action(zero)(0) == 0.5);  // tanh(0) -> middle of [0,1]

  Rng rng(13);
  Eigen::VectorXd mean(2), log_std(2);
  mean << 0.4, -1.0;
  log_std << -0.3, 0.1;
  for (int i = 0; i < 50; ++i) {
    const auto s = squashed_gaussian_sample(mean, log_std, rng);
    for (int k = 0; k < 2; ++k) {
      CHECK(s.action(k) > 0.0);
      CHECK(s.action(k) < 1.0);
    }
    const double lp =
        squashed_gaussian_log_prob_of_action(mean, log_std, s.action);
    CHECK(lp == doctest::Approx(s.log_prob).epsilon(1e-7));
  }
}

TEST_CASE("squashed Gaussian density integrates to 1 over [0,1]") {
  Eigen::VectorXd mean(1), log_std(1);
  mean << 0.3;
  log_std << -0.5;
  const int n = 20'000;
  const double lo = 1e-9, hi = 1.0 - 1e-9;
  const double h = (hi - lo) / n;
  double integral = 0.0;
  for (int i = 0; i <= n; ++i) {
    Eigen::VectorXd a(1);
    a << lo + i * h;
    const double density =
        std::exp(squashed_gaussian_log_prob_of_action(mean, log_std, a));
    integral += (i == 0 || i == n) ? 0.5 * density : density;
  }
  integral *= h;
  CHECK(std::abs(integral - 1.0) < 1e-3);
}

TEST_CASE("diagonal Gaussian density integrates to 1") {
  Eigen::VectorXd mean(1), log_std(1);
  mean << 0.2;
  log_std << 0.0;
  const int n = 40'000;
  const double lo = -8.0, hi = 8.4;
  const double h = (hi - lo) / n;
  double integral = 0.0;
  for (int i = 0; i <= n; ++i) {
    Eigen::VectorXd a(1);
    a << lo + i * h;
    const double density = std::exp(diag_gaussian_log_prob(mean, log_std, a));
    integral += (i == 0 || i == n) ? 0.5 * density : density;
  }
  integral *= h;
  CHECK(std::abs(integral - 1.0) < 1e-6);
}

TEST_CASE("PPO ratio equals 1 on the first minibatch of an update") {
  NormalizedEnv env = normalize_wrapper(make_env("SIR-A"));
  PpoAgent agent = make_ppo_agent(3, 2, 64, 77);
  Adam adam(agent.parameter_count(), 3e-4);
  Rng rng(78);

  const int n = 64;
  Rollout rollout(3, 2, n);
  std::vector<double> obs = env.reset(1);
  for (int t = 0; t < n; ++t) {
    const Eigen::VectorXd obs_vec =
        Eigen::Map<const Eigen::VectorXd>(obs.data(), obs.size());
    const Eigen::VectorXd mean = forward(agent.actor, obs_vec);
    const Eigen::VectorXd action =
        diag_gaussian_sample(mean, agent.log_std, rng);
    rollout.observations.col(t) = obs_vec;
    rollout.actions.col(t) = action;
    rollout.log_probs[t] = diag_gaussian_log_prob(mean, agent.log_std, action);
    rollout.values[t] = forward(agent.critic, obs_vec)(0);
    StepResult r =
        env.step(std::span<const double>(action.data(), action.size()));
    rollout.rewards[t] = r.reward;
    rollout.dones[t] = r.done ? 1.0 : 0.0;
    obs = r.done ? env.reset(1) : std::move(r.observation);
  }
  rollout.bootstrap_value = 0.0;

  PpoParams params;
  params.num_minibatches = 4;
  params.update_epochs = 1;
  const auto diag = ppo_update(rollout, agent, adam, params, rng);
  CHECK(diag.mean_ratio_first_minibatch == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("short PPO training run is bit-for-bit deterministic") {
  Config cfg;
  cfg.run.total_timesteps = 256;
  cfg.ppo.rollout_steps = 128;
  cfg.ppo.num_minibatches = 4;
  cfg.ppo.update_epochs = 2;

  const TrainResult a = train("SIR-A", Algo::Ppo, cfg, 5);
  const TrainResult b = train("SIR-A", Algo::Ppo, cfg, 5);
  REQUIRE(a.run.curve.size() == b.run.curve.size());
  for (std::size_t i = 0; i < a.run.curve.size(); ++i) {
    CHECK(a.run.curve[i].episode_return == b.run.curve[i].episode_return);
    CHECK(a.run.curve[i].end_timestep == b.run.curve[i].end_timestep);
  }
  CHECK(a.checkpoint.dump() == b.checkpoint.dump());
  CHECK(a.run.greedy.episode_return == b.run.greedy.episode_return);

  const TrainResult c = train("SIR-A", Algo::Ppo, cfg, 6);
  CHECK(c.checkpoint.dump() != a.checkpoint.dump());
}

TEST_CASE("short SAC training run is bit-for-bit deterministic") {
  Config cfg;
  cfg.run.total_timesteps = 400;
  cfg.sac.learning_starts = 128;
  cfg.sac.batch_size = 32;
  cfg.sac.hidden_size = 32;

  const TrainResult a = train("SIR-A", Algo::Sac, cfg, 9);
  const TrainResult b = train("SIR-A", Algo::Sac, cfg, 9);
  REQUIRE(a.run.curve.size() == b.run.curve.size());
  for (std::size_t i = 0; i < a.run.curve.size(); ++i) {
    CHECK(a.run.curve[i].episode_return == b.run.curve[i].episode_return);
  }
  CHECK(a.checkpoint.dump() == b.checkpoint.dump());
}

TEST_CASE("SAC TD target with done=1 is exactly the stored reward") {
  // One terminal transition; if the target leaked Q', the critic loss below
  // would not match a direct recomputation from r alone.
  SacAgent agent = make_sac_agent(2, 1, 16, 21);
  const SacAgent before = agent;
  ReplayBuffer buffer(16, 2, 1);
  const std::vector<double> obs = {0.25, -0.75};
  const std::vector<double> next_obs = {1.5, 0.5};
  const double reward = 3.25;
  buffer.insert(obs, {{0.5}}, reward, next_obs, true);

  SacParams params;
  params.batch_size = 4;
  params.learning_rate = 0.0;  // keep parameters fixed for the check
  Rng rng(22);
  Adam actor_adam(agent.actor.parameter_count(), 0.0);
  Adam critic_adam(
      agent.critic1.parameter_count() + agent.critic2.parameter_count(), 0.0);
  const auto diag =
      sac_update(buffer, agent, actor_adam, critic_adam, params, rng);

  Eigen::VectorXd x(3);
  x << 0.25, -0.75, 0.5;
  const double q1 = forward(before.critic1, x)(0);
  const double q2 = forward(before.critic2, x)(0);
  const double expected =
      0.5 * ((q1 - reward) * (q1 - reward) + (q2 - reward) * (q2 - reward));
  CHECK(diag.critic_loss == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("PPO joint gradient matches finite differences") {
  const int obs_dim = 3, act_dim = 2, batch = 8;
  PpoAgent agent = make_ppo_agent(obs_dim, act_dim, 16, 55);
  Rng rng(56);

  Eigen::MatrixXd obs(obs_dim, batch), actions(act_dim, batch);
  std::vector<double> old_lp(batch), adv(batch), ret(batch);
  for (int k = 0; k < batch; ++k) {
    for (int i = 0; i < obs_dim; ++i) obs(i, k) = rng.normal();
    for (int i = 0; i < act_dim; ++i) actions(i, k) = rng.normal();
    old_lp[k] = diag_gaussian_log_prob(forward(agent.actor, Eigen::VectorXd(obs.col(k))),
                                       agent.log_std, actions.col(k)) +
                0.1 * rng.normal();  // off-policy so ratios != 1
    adv[k] = rng.normal();
    ret[k] = rng.normal();
  }

  PpoParams params;
  params.entropy_coef = 0.01;  // exercise the entropy gradient too
  const PpoMinibatchEval eval =
      ppo_minibatch_eval(agent, obs, actions, old_lp, adv, ret, params);

  std::vector<double> flat = agent.flatten();
  REQUIRE(eval.flat_grads.size() == flat.size());
  const double h = 1e-6;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t p = rng.uniform_index(flat.size());
    const double saved = flat[p];
    flat[p] = saved + h;
    agent.unflatten(flat);
    const double up =
        ppo_minibatch_eval(agent, obs, actions, old_lp, adv, ret, params).loss;
    flat[p] = saved - h;
    agent.unflatten(flat);
    const double down =
        ppo_minibatch_eval(agent, obs, actions, old_lp, adv, ret, params).loss;
    flat[p] = saved;
    agent.unflatten(flat);

    const double fd = (up - down) / (2.0 * h);
    const double rel =
        std::abs(eval.flat_grads[p] - fd) / (std::abs(eval.flat_grads[p]) + 1e-8);
    CHECK(rel < 1e-4);
  }
}

TEST_CASE("SAC actor gradient matches finite differences") {
  // The trickiest chain rule in the codebase: through the tanh squash, the
  // rescale, the log-prob terms and the critics' action inputs.
  const int obs_dim = 3, act_dim = 2, batch = 5;
  SacAgent agent = make_sac_agent(obs_dim, act_dim, 16, 33);
  Rng rng(34);
  Eigen::MatrixXd obs(obs_dim, batch), eps(act_dim, batch);
  for (int k = 0; k < batch; ++k) {
    for (int i = 0; i < obs_dim; ++i) obs(i, k) = rng.normal();
    for (int i = 0; i < act_dim; ++i) eps(i, k) = rng.normal();
  }
  const double alpha = 1.0;

  const SacActorEval eval = sac_actor_eval(agent, obs, eps, alpha);
  const std::vector<double> analytic = flatten_grads(eval.actor_grads);
  std::vector<double> flat = flatten_params(agent.actor);

  const double h = 1e-6;
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t p = rng.uniform_index(flat.size());
    const double saved = flat[p];
    flat[p] = saved + h;
    unflatten_params(flat, agent.actor);
    const double up = sac_actor_eval(agent, obs, eps, alpha).loss;
    flat[p] = saved - h;
    unflatten_params(flat, agent.actor);
    const double down = sac_actor_eval(agent, obs, eps, alpha).loss;
    flat[p] = saved;
    unflatten_params(flat, agent.actor);

    const double fd = (up - down) / (2.0 * h);
    const double rel =
        std::abs(analytic[p] - fd) / (std::abs(analytic[p]) + 1e-8);
    CHECK(rel < 1e-4);
    ++checked;
  }
  CHECK(checked == 200);
}

TEST_CASE("learned schedules stay inside the action ranges") {
  Config cfg;
  cfg.run.total_timesteps = 256;
  cfg.ppo.rollout_steps = 128;
  cfg.ppo.num_minibatches = 4;
  cfg.ppo.update_epochs = 2;
  const TrainResult r = train("SIRV-B", Algo::Ppo, cfg, 1);

  for (const auto* schedule : {&r.run.best_sampled, &r.run.greedy}) {
    CHECK(schedule->actions.size() == 52);
    for (const auto& a : schedule->actions) {
      CHECK(a.size() == 4);
      for (double v : a) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
}

TEST_CASE("schedule regeneration from a checkpoint") {
  Config cfg;
  cfg.run.total_timesteps = 128;
  cfg.ppo.rollout_steps = 128;
  cfg.ppo.num_minibatches = 4;
  const TrainResult r = train("SIR-A", Algo::Ppo, cfg, 4);

  const auto greedy1 =
      schedule_from_checkpoint(r.checkpoint, "SIR-A", cfg, "greedy", 0);
  const auto greedy2 =
      schedule_from_checkpoint(r.checkpoint, "SIR-A", cfg, "greedy", 0);
  CHECK(greedy1.actions == greedy2.actions);
  CHECK(greedy1.episode_return == greedy2.episode_return);

  const auto sampled =
      schedule_from_checkpoint(r.checkpoint, "SIR-A", cfg, "sampled", 3);
  CHECK(sampled.actions.size() == 52);

  CHECK_THROWS_WITH_AS(
      schedule_from_checkpoint(r.checkpoint, "C15-B", cfg, "greedy", 0),
      doctest::Contains("do not match"), std::invalid_argument);
}
