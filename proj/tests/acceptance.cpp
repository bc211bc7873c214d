// Acceptance suite: one checkable criterion per section, one PASS/FAIL line
// each. Run all with no arguments or a single one with --criterion N.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <future>
#include <sstream>
#include <string>
#include <vector>

#include "epiplan/env.hpp"
#include "epiplan/ppo.hpp"
#include "epiplan/rl_common.hpp"
#include "epiplan/sac.hpp"
#include "epiplan/train.hpp"

using namespace epiplan;

namespace {

constexpr std::uint64_t kSeeds[4] = {0, 1, 2, 3};

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------- 1
Outcome conservation_and_nonnegativity() {
  Outcome out;
  out.pass = true;
  std::ostringstream detail;
  for (const auto& name : env_names()) {
    Environment env = make_env(name);
    const double n_pop = env.model().population;
    Rng rng(derive_seed(41, name));
    double worst_drift = 0.0, worst_min = 0.0;
    for (int episode = 0; episode < 100; ++episode) {
      env.reset(episode);
      while (!env.done()) {
        std::vector<double> action(env.action_dim());
        for (auto& a : action) a = rng.uniform();
        const StepResult r = env.step(action);
        worst_drift =
            std::max(worst_drift, r.info.diagnostics.max_conservation_drift);
        worst_min = std::min(worst_min, r.info.diagnostics.min_compartment);
        if (r.info.diagnostics.max_conservation_drift > 1e-6 * n_pop ||
            r.info.diagnostics.min_compartment < -1e-9 * n_pop) {
          out.pass = false;
        }
      }
    }
    detail << name << " drift " << worst_drift / n_pop << "N min "
           << worst_min / n_pop << "N; ";
  }
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------- 2
Outcome integrator_accuracy() {
  Outcome out;
  const auto model = make_model(ModelId::Sir, ModelParams{});

  auto run_days = [&](double days, double dt) {
    SimState s = initial_state(model, 100.0);
    const int weeks = static_cast<int>(days / 7.0);
    for (int w = 0; w < weeks; ++w) {
      s = integrate_week(s, model, RateModifiers{}, 7.0, dt).state;
    }
    return s.compartments;
  };

  const auto coarse = run_days(364.0, 0.1);
  const auto ref = run_days(364.0, 0.001);
  double worst_rel = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double denom = std::max(std::abs(ref[i]), 1e-12 * model.population);
    worst_rel = std::max(worst_rel, std::abs(coarse[i] - ref[i]) / denom);
  }

  // observed order over the high-curvature epidemic window
  const auto o_ref = run_days(56.0, 0.002);
  const auto o_coarse = run_days(56.0, 0.2);
  const auto o_half = run_days(56.0, 0.1);
  double err_coarse = 0.0, err_half = 0.0;
  for (int i = 0; i < 3; ++i) {
    err_coarse = std::max(err_coarse, std::abs(o_coarse[i] - o_ref[i]));
    err_half = std::max(err_half, std::abs(o_half[i] - o_ref[i]));
  }
  const double order = std::log2(err_coarse / err_half);

  out.pass = worst_rel <= 1e-5 && order >= 3.5;
  std::ostringstream detail;
  detail << "year-end max rel err " << worst_rel << " (<=1e-5), order " << order
         << " (>=3.5)";
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------- 3
Outcome gradient_correctness() {
  Outcome out;
  out.pass = true;
  double worst = 0.0;
  int checked = 0;

  struct Arch {
    std::vector<int> sizes;
    std::vector<Activation> acts;
    std::uint64_t seed;
  };
  const std::vector<Arch> archs = {
      {{15, 64, 64, 4},
       {Activation::Tanh, Activation::Tanh, Activation::Identity},
       501},
      {{19, 256, 256, 1},
       {Activation::Relu, Activation::Relu, Activation::Identity},
       502},
  };
  for (const auto& arch : archs) {
    Mlp net = make_mlp(arch.sizes, arch.acts);
    Rng rng(arch.seed);
    for (auto& layer : net.layers) uniform_fanin_init(layer, rng);
    Eigen::VectorXd input(arch.sizes.front());
    for (Eigen::Index i = 0; i < input.size(); ++i) input(i) = rng.normal();
    Eigen::VectorXd loss_w(arch.sizes.back());
    for (Eigen::Index i = 0; i < loss_w.size(); ++i) loss_w(i) = rng.normal();

    ForwardTrace trace;
    forward(net, Eigen::MatrixXd(input), trace);
    const std::vector<double> analytic =
        flatten_grads(backward(net, trace, Eigen::MatrixXd(loss_w)));

    std::vector<double> flat = flatten_params(net);
    const double h = 1e-5;
    for (int k = 0; k < 500; ++k) {
      const std::size_t p = rng.uniform_index(flat.size());
      const double saved = flat[p];
      flat[p] = saved + h;
      unflatten_params(flat, net);
      const double up = loss_w.dot(forward(net, input));
      flat[p] = saved - h;
      unflatten_params(flat, net);
      const double down = loss_w.dot(forward(net, input));
      flat[p] = saved;
      unflatten_params(flat, net);

      const double fd = (up - down) / (2.0 * h);
      const double rel = std::abs(analytic[p] - fd) / (std::abs(analytic[p]) + 1e-8);
      worst = std::max(worst, rel);
      ++checked;
      if (rel >= 1e-4) out.pass = false;
    }
  }
  std::ostringstream detail;
  detail << checked << " sampled parameters, worst rel err " << worst
         << " (<1e-4)";
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------- 4
Outcome gae_oracle() {
  Outcome out;
  out.pass = true;
  Rng rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(64);
    std::vector<double> r(n), v(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = 2.0 * rng.normal();
      v[i] = rng.normal();
      d[i] = rng.uniform() < 0.2 ? 1.0 : 0.0;
    }
    const double bootstrap = rng.normal();
    const auto gae = compute_gae(r, v, d, bootstrap, 0.99, 0.95);
    // brute force: A_t = sum_k (gamma*lambda)^k delta_{t+k} within the episode
    for (std::size_t t = 0; t < n; ++t) {
      double adv = 0.0, coef = 1.0;
      for (std::size_t k = t; k < n; ++k) {
        const double next_v = k + 1 < n ? v[k + 1] : bootstrap;
        adv += coef * (r[k] + 0.99 * next_v * (1.0 - d[k]) - v[k]);
        if (d[k] > 0.5) break;
        coef *= 0.99 * 0.95;
      }
      const double err = std::abs(gae.advantages[t] - adv);
      worst = std::max(worst, err);
      if (err > 1e-12) out.pass = false;
    }
  }
  std::ostringstream detail;
  detail << "100 sequences, worst abs err " << worst << " (<=1e-12)";
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------- 5
Outcome normalization_oracle() {
  Outcome out;
  out.pass = true;
  Rng rng(88);
  double worst = 0.0;
  for (int dim : {1, 3}) {
    RunningStats stats(dim);
    std::vector<std::vector<double>> samples;
    for (int i = 0; i < 10'000; ++i) {
      std::vector<double> x(dim);
      for (int c = 0; c < dim; ++c) {
        // drifting, reward-scale stream
        x[c] = -1e6 * (50.0 + 20.0 * rng.normal() + 0.01 * i * (c + 1));
      }
      stats.update(x);
      samples.push_back(std::move(x));
    }
    for (int c = 0; c < dim; ++c) {
      double mean = 0.0;
      for (const auto& x : samples) mean += x[c];
      mean /= samples.size();
      double var = 0.0;
      for (const auto& x : samples) var += (x[c] - mean) * (x[c] - mean);
      var /= samples.size();
      const double mean_err = std::abs(stats.mean()[c] - mean) / std::abs(mean);
      const double var_err = std::abs(stats.variance()[c] - var) / var;
      worst = std::max({worst, mean_err, var_err});
      if (mean_err > 1e-10 || var_err > 1e-10) out.pass = false;
    }
  }
  std::ostringstream detail;
  detail << "10000-sample streams, worst rel err " << worst << " (<=1e-10)";
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------- 6
Outcome baseline_determinism_and_ordering() {
  Outcome out;
  out.pass = true;
  std::ostringstream detail;
  const Config cfg;
  for (const auto& name : {"SIR-B", "SIRV-B", "C15-B"}) {
    const Environment env = make_env(name, cfg);
    const auto agg = evaluate_policy(
        env,
        make_baseline_policy(BaselineKind::Aggressive, ActionSpace::B, cfg.model),
        kSeeds);
    const auto lax = evaluate_policy(
        env, make_baseline_policy(BaselineKind::Lax, ActionSpace::B, cfg.model),
        kSeeds);
    for (double r : agg.episode_returns) {
      if (r != agg.episode_returns[0]) out.pass = false;
    }
    for (double r : lax.episode_returns) {
      if (r != lax.episode_returns[0]) out.pass = false;
    }
    if (!(agg.mean < lax.mean)) out.pass = false;
    detail << name << " Aggressive " << agg.mean / 1e6 << "M$ < Lax "
           << lax.mean / 1e6 << "M$; ";
  }
  // determinism in A spaces too
  for (const auto& name : {"SIR-A", "SIRV-A", "C15-A"}) {
    const Environment env = make_env(name, cfg);
    for (auto kind : {BaselineKind::Aggressive, BaselineKind::Lax}) {
      const auto stats = evaluate_policy(
          env, make_baseline_policy(kind, ActionSpace::A, cfg.model), kSeeds);
      if (stats.stddev != 0.0) out.pass = false;
    }
  }
  out.detail = detail.str();
  return out;
}

double best_baseline_mean(const std::string& env_name) {
  const Config cfg;
  const Environment env = make_env(env_name, cfg);
  const ActionSpace space = env.config().space;
  double best = -std::numeric_limits<double>::infinity();
  for (auto kind :
       {BaselineKind::Aggressive, BaselineKind::Lax, BaselineKind::Random}) {
    const auto stats = evaluate_policy(
        env, make_baseline_policy(kind, space, cfg.model), kSeeds);
    best = std::max(best, stats.mean);
  }
  return best;
}

std::vector<TrainResult> train_seeds(const std::string& env_name, Algo algo) {
  std::vector<std::future<TrainResult>> futures;
  for (std::uint64_t seed : kSeeds) {
    futures.push_back(std::async(std::launch::async, [=] {
      return train(env_name, algo, Config{}, seed);
    }));
  }
  std::vector<TrainResult> results;
  for (auto& f : futures) results.push_back(f.get());
  return results;
}

// ---------------------------------------------------------------- 7
Outcome ppo_beats_baselines() {
  Outcome out;
  const double bar = best_baseline_mean("SIR-A");
  const auto runs = train_seeds("SIR-A", Algo::Ppo);
  int wins = 0;
  std::ostringstream detail;
  detail << "best baseline mean " << bar / 1e6 << "M$; PPO best episodes ";
  for (const auto& r : runs) {
    const double best = r.run.best_sampled.episode_return;
    if (best > bar) ++wins;
    detail << best / 1e6 << "M$ ";
  }
  detail << "(" << wins << "/4 above)";
  out.pass = wins >= 3;
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------- 8
Outcome sac_learns() {
  Outcome out;
  const Config cfg;
  const Environment env = make_env("SIR-A", cfg);
  const auto random_stats = evaluate_policy(
      env, make_baseline_policy(BaselineKind::Random, ActionSpace::A, cfg.model),
      kSeeds);
  const auto runs = train_seeds("SIR-A", Algo::Sac);
  int wins = 0;
  std::ostringstream detail;
  detail << "Random mean " << random_stats.mean / 1e6
         << "M$; SAC best episodes ";
  for (const auto& r : runs) {
    const double best = r.run.best_sampled.episode_return;
    if (best > random_stats.mean) ++wins;
    detail << best / 1e6 << "M$ ";
  }
  detail << "(" << wins << "/4 above)";
  out.pass = wins >= 3;
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------- 9
Outcome ppo_learning_progress() {
  Outcome out;
  out.pass = true;
  std::ostringstream detail;
  for (const auto& name : env_names()) {
    const auto runs = train_seeds(name, Algo::Ppo);
    int improved = 0;
    for (const auto& r : runs) {
      double first = 0.0, last = 0.0;
      int n_first = 0, n_last = 0;
      for (const auto& ep : r.run.curve) {
        if (ep.end_timestep <= 5000) {
          first += ep.episode_return;
          ++n_first;
        }
        if (ep.end_timestep > r.run.timesteps_done - 5000) {
          last += ep.episode_return;
          ++n_last;
        }
      }
      if (n_first > 0 && n_last > 0 && last / n_last > first / n_first) {
        ++improved;
      }
    }
    if (improved < 3) out.pass = false;
    detail << name << " " << improved << "/4; ";
  }
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------- 10
Outcome schedule_validity() {
  Outcome out;
  out.pass = true;
  std::ostringstream detail;
  Config cfg;
  cfg.run.total_timesteps = 2048;  // validity, not quality
  cfg.sac.learning_starts = 500;

  auto check_schedule = [&](const ScheduleRecord& record, int expect_dims,
                            const char* label) {
    if (record.actions.size() != 52) {
      out.pass = false;
      detail << label << " has " << record.actions.size() << " steps; ";
      return;
    }
    for (const auto& a : record.actions) {
      if (static_cast<int>(a.size()) != expect_dims) out.pass = false;
      for (double v : a) {
        if (!(v >= 0.0 && v <= 1.0)) out.pass = false;
      }
    }
  };

  for (const auto& [env_name, algo] :
       std::vector<std::pair<std::string, Algo>>{{"SIR-A", Algo::Ppo},
                                                 {"C15-B", Algo::Ppo},
                                                 {"SIRV-B", Algo::Sac}}) {
    const Environment env = make_env(env_name, cfg);
    const TrainResult r = train(env_name, algo, cfg, 0);
    check_schedule(r.run.best_sampled, env.action_dim(), "best_sampled");
    check_schedule(r.run.greedy, env.action_dim(), "greedy");
    for (const char* mode : {"greedy", "sampled"}) {
      const auto exported =
          schedule_from_checkpoint(r.checkpoint, env_name, cfg, mode, 1);
      check_schedule(exported, env.action_dim(), mode);
    }
    detail << env_name << "/" << algo_name(algo) << " ok; ";
  }
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------- 11
Outcome cost_arithmetic() {
  Outcome out;
  out.pass = true;
  std::ostringstream detail;

  Action mask_only;
  mask_only.space = ActionSpace::B;
  mask_only.mask = 1.0;
  const double mask_cost = intervention_cost(mask_only, 2e6, 0.0, 7.0).total();
  if (mask_cost != 700'000.0) out.pass = false;

  CostDeltas infectious;
  infectious.infectious_person_days = 1'000.0;
  const double inf_cost = disease_cost(infectious).total();
  if (inf_cost != 173'000.0) out.pass = false;

  CostDeltas hospital;
  hospital.hospitalized_person_days = 10.0;
  if (disease_cost(hospital).total() != 2'500.0) out.pass = false;

  CostDeltas fatal;
  fatal.deaths = 2.0;
  if (disease_cost(fatal).total() != 200'000.0) out.pass = false;

  Action vax;
  vax.space = ActionSpace::A;
  if (intervention_cost(vax, 2e6, 44'074.0, 7.0).total() != 1'762'960.0) {
    out.pass = false;
  }

  if (mask_factor(1.0) != 1.0 - 0.8 || dose_flow(1.0) != 10'000.0) {
    out.pass = false;
  }

  Action closures;
  closures.space = ActionSpace::B;
  closures.school = 1.0;
  closures.work = 1.0;
  const auto ledger = intervention_cost(closures, 2e6, 0.0, 7.0);
  if (ledger.school_cost != 1.8 * 0.25 * 2e6 * 7.0) out.pass = false;
  if (ledger.workplace_cost != 1.8 * 0.50 * 2e6 * 7.0) out.pass = false;

  detail << "mask week " << mask_cost << "$, 1000 infectious days " << inf_cost
         << "$, all exact";
  out.detail = detail.str();
  return out;
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  int selected = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      selected = std::atoi(argv[i + 1]);
    }
  }

  const std::vector<Criterion> criteria = {
      {1, "conservation and nonnegativity over random episodes",
       conservation_and_nonnegativity},
      {2, "integrator accuracy and convergence order", integrator_accuracy},
      {3, "gradient correctness vs finite differences", gradient_correctness},
      {4, "GAE equals brute-force summation", gae_oracle},
      {5, "running statistics equal two-pass batch statistics",
       normalization_oracle},
      {6, "baseline determinism and B-space ordering",
       baseline_determinism_and_ordering},
      {7, "PPO beats the best baseline on SIR-A", ppo_beats_baselines},
      {8, "SAC beats the Random baseline on SIR-A", sac_learns},
      {9, "PPO improves from first to last 5k timesteps on all envs",
       ppo_learning_progress},
      {10, "exported schedules are valid", schedule_validity},
      {11, "intervention and disease cost arithmetic is exact",
       cost_arithmetic},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    if (selected != 0 && criterion.id != selected) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("[%s] criterion %2d: %s (%.1fs) -- %s\n",
                outcome.pass ? "PASS" : "FAIL", criterion.id, criterion.title,
                secs, outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  return failures;
}
