#include "epiplan/train.hpp"

#include <chrono>
#include <fstream>
#include <stdexcept>

#include "epiplan/csv.hpp"

namespace epiplan {

std::string algo_name(Algo a) { return a == Algo::Ppo ? "ppo" : "sac"; }

Algo algo_from_name(const std::string& name) {
  if (name == "ppo" || name == "PPO") return Algo::Ppo;
  if (name == "sac" || name == "SAC") return Algo::Sac;
  throw std::invalid_argument("unknown algorithm '" + name +
                              "'; valid names are ppo sac");
}

namespace {

nlohmann::json stats_pair_json(const RunningStats& obs,
                               const RunningStats& reward) {
  return {{"obs_stats", obs.to_json()}, {"reward_stats", reward.to_json()}};
}

nlohmann::json ppo_checkpoint(const std::string& env_name,
                              const PpoRunOutput& out, const Config& cfg,
                              std::uint64_t seed) {
  nlohmann::json j = stats_pair_json(out.obs_stats, out.reward_stats);
  j["algo"] = "ppo";
  j["env"] = env_name;
  j["obs_dim"] = out.agent.actor.input_dim();
  j["act_dim"] = out.agent.actor.output_dim();
  j["actor"] = mlp_to_json(out.agent.actor);
  j["log_std"] = std::vector<double>(
      out.agent.log_std.data(), out.agent.log_std.data() + out.agent.log_std.size());
  j["critic"] = mlp_to_json(out.agent.critic);
  j["seed"] = seed;
  j["config_hash"] = config_hash(cfg);
  return j;
}

nlohmann::json sac_checkpoint(const std::string& env_name,
                              const SacRunOutput& out, const Config& cfg,
                              std::uint64_t seed) {
  nlohmann::json j = stats_pair_json(out.obs_stats, out.reward_stats);
  j["algo"] = "sac";
  j["env"] = env_name;
  j["obs_dim"] = out.agent.actor.input_dim();
  j["act_dim"] = out.agent.act_dim;
  j["actor"] = mlp_to_json(out.agent.actor);
  j["critic1"] = mlp_to_json(out.agent.critic1);
  j["critic2"] = mlp_to_json(out.agent.critic2);
  j["target1"] = mlp_to_json(out.agent.target1);
  j["target2"] = mlp_to_json(out.agent.target2);
  j["seed"] = seed;
  j["config_hash"] = config_hash(cfg);
  return j;
}

}  // namespace

TrainResult train(const std::string& env_name, Algo algo, const Config& cfg,
                  std::uint64_t master_seed, std::optional<double> max_hours) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult result;
  result.env_name = env_name;
  result.algo = algo;
  result.seed = master_seed;
  if (algo == Algo::Ppo) {
    PpoRunOutput out = train_ppo(env_name, cfg, master_seed, max_hours);
    result.run = std::move(out.run);
    result.checkpoint = ppo_checkpoint(env_name, out, cfg, master_seed);
  } else {
    SacRunOutput out = train_sac(env_name, cfg, master_seed, max_hours);
    result.run = std::move(out.run);
    result.checkpoint = sac_checkpoint(env_name, out, cfg, master_seed);
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

ScheduleRecord schedule_from_checkpoint(const nlohmann::json& checkpoint,
                                        const std::string& env_name,
                                        const Config& cfg,
                                        const std::string& mode,
                                        std::uint64_t seed) {
  if (mode != "greedy" && mode != "sampled") {
    throw std::invalid_argument("mode must be 'greedy' or 'sampled'");
  }
  Environment raw_env = make_env(env_name, cfg);
  const int obs_dim = raw_env.observation_dim();
  const int act_dim = raw_env.action_dim();
  const int ck_obs = checkpoint.at("obs_dim").get<int>();
  const int ck_act_out = checkpoint.at("act_dim").get<int>();
  if (ck_obs != obs_dim || ck_act_out != act_dim) {
    throw std::invalid_argument(
        "checkpoint dimensions (obs=" + std::to_string(ck_obs) +
        ", act=" + std::to_string(ck_act_out) + ") do not match " + env_name +
        " (obs=" + std::to_string(obs_dim) +
        ", act=" + std::to_string(act_dim) + ")");
  }

  NormalizedEnv env(std::move(raw_env),
                    RunningStats::from_json(checkpoint.at("obs_stats")),
                    RunningStats::from_json(checkpoint.at("reward_stats")));
  const std::uint64_t env_seed = derive_seed(seed, "env");
  Rng rng(derive_seed(seed, "sample"));

  const std::string algo = checkpoint.at("algo").get<std::string>();
  if (algo == "ppo") {
    PpoAgent agent;
    agent.actor = mlp_from_json(checkpoint.at("actor"));
    agent.critic = mlp_from_json(checkpoint.at("critic"));
    const auto ls = checkpoint.at("log_std").get<std::vector<double>>();
    agent.log_std = Eigen::Map<const Eigen::VectorXd>(ls.data(), ls.size());
    return mode == "greedy"
               ? greedy_episode_ppo(agent, std::move(env), env_seed)
               : sampled_episode_ppo(agent, std::move(env), env_seed, rng);
  }
  if (algo == "sac") {
    SacAgent agent;
    agent.actor = mlp_from_json(checkpoint.at("actor"));
    agent.critic1 = mlp_from_json(checkpoint.at("critic1"));
    agent.critic2 = mlp_from_json(checkpoint.at("critic2"));
    agent.target1 = mlp_from_json(checkpoint.at("target1"));
    agent.target2 = mlp_from_json(checkpoint.at("target2"));
    agent.act_dim = checkpoint.at("act_dim").get<int>();
    return mode == "greedy"
               ? greedy_episode_sac(agent, std::move(env), env_seed)
               : sampled_episode_sac(agent, std::move(env), env_seed, rng);
  }
  throw std::invalid_argument("checkpoint has unknown algo: " + algo);
}

void write_curve_csv(const std::string& path,
                     std::span<const EpisodeSummary> curve) {
  CsvWriter csv(path);
  csv.write_row({"timestep", "episode_return", "intervention_cost",
                 "disease_cost", "mask_cost", "vaccine_cost", "school_cost",
                 "workplace_cost", "infection_cost", "hospitalization_cost",
                 "fatality_cost"});
  for (const auto& ep : curve) {
    csv.write_numeric_row({static_cast<double>(ep.end_timestep),
                           ep.episode_return, ep.costs.intervention_cost(),
                           ep.costs.disease_cost(), ep.costs.mask_cost,
                           ep.costs.vaccine_cost, ep.costs.school_cost,
                           ep.costs.workplace_cost, ep.costs.infection_cost,
                           ep.costs.hospitalization_cost,
                           ep.costs.fatality_cost});
  }
  csv.save();
}

void write_schedule_json(const std::string& path, const ScheduleRecord& record) {
  write_json_file(path, nlohmann::json(record.actions));
}

void write_schedule_csv(const std::string& path, const ScheduleRecord& record,
                        double step_days) {
  CsvWriter csv(path);
  const std::vector<std::string> names = {"m", "v", "s", "w"};
  std::vector<std::string> header = {"day"};
  const std::size_t dims = record.actions.empty() ? 0 : record.actions[0].size();
  for (std::size_t i = 0; i < dims; ++i) header.push_back(names[i]);
  csv.write_row(header);
  for (std::size_t t = 0; t < record.actions.size(); ++t) {
    std::vector<double> row = {static_cast<double>(t) * step_days};
    row.insert(row.end(), record.actions[t].begin(), record.actions[t].end());
    csv.write_numeric_row(row);
  }
  csv.save();
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  out << j.dump(2) << "\n";
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot read " + path);
  }
  nlohmann::json j;
  in >> j;
  return j;
}

}  // namespace epiplan
