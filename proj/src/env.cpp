#include "epiplan/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "epiplan/csv.hpp"

namespace epiplan {

std::string EnvConfig::name() const {
  return model_name(model) + "-" + action_space_name(space);
}

const std::vector<std::string>& env_names() {
  static const std::vector<std::string> names = {"SIR-A",  "SIR-B", "SIRV-A",
                                                 "SIRV-B", "C15-A", "C15-B"};
  return names;
}

EnvConfig env_config_from_name(const std::string& name, const Config& cfg) {
  const auto& valid = env_names();
  if (std::find(valid.begin(), valid.end(), name) == valid.end()) {
    std::string msg = "unknown environment '" + name + "'; valid names are";
    for (const auto& n : valid) msg += " " + n;
    throw std::invalid_argument(msg);
  }
  const auto dash = name.find('-');
  EnvConfig env;
  env.model = model_from_name(name.substr(0, dash));
  env.space = name.substr(dash + 1) == "A" ? ActionSpace::A : ActionSpace::B;
  env.horizon = cfg.run.horizon_weeks;
  env.step_days = cfg.run.step_days;
  env.dt = cfg.run.dt;
  env.discount = cfg.run.discount;
  env.model_params = cfg.model;
  env.costs = cfg.costs;
  env.facilities = cfg.facilities;
  return env;
}

Environment::Environment(EnvConfig config)
    : config_(std::move(config)),
      model_(make_model(config_.model, config_.model_params, config_.facilities)) {
  state_ = initial_state(model_, config_.model_params.initial_infected);
}

std::vector<double> Environment::reset(std::uint64_t seed) {
  // The base dynamics are deterministic; the seed exists for wrappers and
  // policies layered on top.
  (void)seed;
  state_ = initial_state(model_, config_.model_params.initial_infected);
  step_ = 0;
  return state_.compartments;
}

StepResult Environment::step(const Action& action) {
  const std::vector<double> v = action.to_vector();
  return step(std::span<const double>(v));
}

StepResult Environment::step(std::span<const double> raw_action) {
  if (done()) {
    throw std::logic_error("step() called on a finished episode; reset first");
  }
  const Action action = Action::from_vector_clamped(raw_action, config_.space);
  const RateModifiers mods =
      to_rate_modifiers(action, config_.model_params, config_.facilities);

  WeekResult week =
      integrate_week(state_, model_, mods, config_.step_days, config_.dt);
  state_ = week.state;
  ++step_;

  StepResult result;
  result.info.ledger = step_cost(action, model_.population, week.deltas,
                                 config_.step_days, config_.costs,
                                 config_.facilities);
  result.info.deltas = week.deltas;
  result.info.raw_observation = state_.compartments;
  result.info.raw_reward = -result.info.ledger.total();
  result.info.applied_action = action;
  result.info.diagnostics = week.diagnostics;
  result.observation = state_.compartments;
  result.reward = result.info.raw_reward;
  result.done = done();
  return result;
}

std::vector<double> NormalizedEnv::emit_observation(
    const std::vector<double>& raw) {
  if (!frozen_) obs_stats_.update(raw);
  return obs_stats_.normalize(raw);
}

double NormalizedEnv::emit_reward(double raw) {
  if (!frozen_) reward_stats_.update(raw);
  return reward_stats_.normalize(raw);
}

std::vector<double> NormalizedEnv::reset(std::uint64_t seed) {
  return emit_observation(env_.reset(seed));
}

StepResult NormalizedEnv::step(const Action& action) {
  StepResult result = env_.step(action);
  result.observation = emit_observation(result.observation);
  result.reward = emit_reward(result.reward);
  return result;
}

StepResult NormalizedEnv::step(std::span<const double> raw_action) {
  StepResult result = env_.step(raw_action);
  result.observation = emit_observation(result.observation);
  result.reward = emit_reward(result.reward);
  return result;
}

std::string baseline_name(BaselineKind k) {
  switch (k) {
    case BaselineKind::Aggressive:
      return "Aggressive";
    case BaselineKind::Lax:
      return "Lax";
    case BaselineKind::Random:
      return "Random";
  }
  return "?";
}

BaselineKind baseline_from_name(const std::string& name) {
  if (name == "Aggressive") return BaselineKind::Aggressive;
  if (name == "Lax") return BaselineKind::Lax;
  if (name == "Random") return BaselineKind::Random;
  throw std::invalid_argument(
      "unknown baseline '" + name + "'; valid names are Aggressive Lax Random");
}

namespace {
// Constant daily dose rate reaching `coverage` of the population over
// `window_days`, expressed as a fraction of dose capacity.
double coverage_to_rate(double coverage, double window_days,
                        const ModelParams& params) {
  return coverage * params.population / (window_days * params.max_daily_doses);
}
}  // namespace

Action baseline_action(BaselineKind kind, double t_days, ActionSpace space,
                       const ModelParams& params, Rng* rng) {
  Action a;
  a.space = space;
  switch (kind) {
    case BaselineKind::Aggressive: {
      a.mask = 0.8;
      a.vaccine = coverage_to_rate(0.85, 270.0, params);  // 85% in 9 months
      if (space == ActionSpace::B) {
        const double closure = t_days < 120.0 ? 1.0 : 0.5;
        a.school = closure;
        a.work = closure;
      }
      break;
    }
    case BaselineKind::Lax: {
      a.mask = 1.0;
      a.vaccine = coverage_to_rate(0.70, 365.0, params);  // 70% in 12 months
      break;
    }
    case BaselineKind::Random: {
      if (rng == nullptr) {
        throw std::invalid_argument("Random baseline needs an rng");
      }
      a.mask = rng->uniform();
      a.vaccine = rng->uniform();
      if (space == ActionSpace::B) {
        a.school = rng->uniform();
        a.work = rng->uniform();
      }
      break;
    }
  }
  return a;
}

PolicyFn make_baseline_policy(BaselineKind kind, ActionSpace space,
                              const ModelParams& params) {
  return [kind, space, params](std::span<const double>, int, double t_days,
                               Rng& rng) {
    return baseline_action(kind, t_days, space, params, &rng);
  };
}

EvalStats evaluate_policy(const Environment& env, const PolicyFn& policy,
                          std::span<const std::uint64_t> seeds) {
  EvalStats stats;
  for (std::uint64_t seed : seeds) {
    Environment episode_env = env;
    Rng rng(derive_seed(seed, "policy"));
    std::vector<double> obs = episode_env.reset(seed);
    double total = 0.0;
    for (int step = 0; !episode_env.done(); ++step) {
      const double t_days = step * episode_env.config().step_days;
      const Action a = policy(obs, step, t_days, rng);
      StepResult r = episode_env.step(a);
      total += r.info.raw_reward;
      obs = std::move(r.observation);
    }
    stats.episode_returns.push_back(total);
  }
  const auto n = static_cast<double>(stats.episode_returns.size());
  if (n > 0) {
    stats.max = *std::max_element(stats.episode_returns.begin(),
                                  stats.episode_returns.end());
    double sum = 0.0;
    for (double r : stats.episode_returns) sum += r;
    stats.mean = sum / n;
    double sq = 0.0;
    for (double r : stats.episode_returns) {
      sq += (r - stats.mean) * (r - stats.mean);
    }
    stats.stddev = std::sqrt(sq / n);
  }
  return stats;
}

double discounted_return(std::span<const double> rewards, double gamma) {
  double total = 0.0;
  for (auto it = rewards.rbegin(); it != rewards.rend(); ++it) {
    total = *it + gamma * total;
  }
  return total;
}

std::vector<TrajectoryRow> replay_schedule(
    Environment env, std::span<const std::vector<double>> actions,
    std::uint64_t seed) {
  std::vector<TrajectoryRow> rows;
  env.reset(seed);
  for (const auto& action : actions) {
    if (env.done()) break;
    TrajectoryRow row;
    row.day = static_cast<double>(env.current_step()) * env.config().step_days;
    const StepResult r = env.step(std::span<const double>(action));
    row.compartments = r.info.raw_observation;
    row.action = r.info.applied_action.to_vector();
    row.reward = r.info.raw_reward;
    row.ledger = r.info.ledger;
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_trajectory_csv(const std::string& path,
                          const Environment& env_template,
                          std::span<const TrajectoryRow> rows) {
  CsvWriter csv(path);
  std::vector<std::string> header = {"day"};
  for (const auto& name : env_template.model().compartment_names) {
    header.push_back(name);
  }
  const std::vector<std::string> action_names = {"m", "v", "s", "w"};
  for (int i = 0; i < env_template.action_dim(); ++i) {
    header.push_back(action_names[i]);
  }
  for (const char* c : {"reward", "mask_cost", "vaccine_cost", "school_cost",
                        "workplace_cost", "infection_cost",
                        "hospitalization_cost", "fatality_cost"}) {
    header.push_back(c);
  }
  csv.write_row(header);
  for (const auto& row : rows) {
    std::vector<double> values = {row.day};
    values.insert(values.end(), row.compartments.begin(), row.compartments.end());
    values.insert(values.end(), row.action.begin(), row.action.end());
    values.push_back(row.reward);
    values.push_back(row.ledger.mask_cost);
    values.push_back(row.ledger.vaccine_cost);
    values.push_back(row.ledger.school_cost);
    values.push_back(row.ledger.workplace_cost);
    values.push_back(row.ledger.infection_cost);
    values.push_back(row.ledger.hospitalization_cost);
    values.push_back(row.ledger.fatality_cost);
    csv.write_numeric_row(values);
  }
  csv.save();
}

}  // namespace epiplan
