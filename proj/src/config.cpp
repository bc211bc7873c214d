#include "epiplan/config.hpp"

#include <fstream>
#include <stdexcept>

namespace epiplan {

namespace {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) {
    out = j.at(key).get<T>();
  }
}

nlohmann::json c15_to_json(const C15Params& p) {
  return {
      {"sigma", p.sigma},
      {"rho", p.rho},
      {"frac_asymptomatic", p.frac_asymptomatic},
      {"gamma_asym", p.gamma_asym},
      {"gamma_mild", p.gamma_mild},
      {"frac_mild_to_severe", p.frac_mild_to_severe},
      {"severe_exit", p.severe_exit},
      {"frac_severe_to_critical", p.frac_severe_to_critical},
      {"critical_to_icu", p.critical_to_icu},
      {"gamma_hosp", p.gamma_hosp},
      {"icu_exit", p.icu_exit},
      {"icu_fatality", p.icu_fatality},
      {"quarantine_rate", p.quarantine_rate},
      {"gamma_quarantine", p.gamma_quarantine},
      {"quarantine_severe_to_hosp", p.quarantine_severe_to_hosp},
      {"weight_presymptomatic", p.weight_presymptomatic},
      {"weight_asymptomatic", p.weight_asymptomatic},
      {"weight_mild", p.weight_mild},
      {"weight_severe", p.weight_severe},
      {"weight_quarantine", p.weight_quarantine},
  };
}

void c15_from_json(const nlohmann::json& j, C15Params& p) {
  read_if(j, "sigma", p.sigma);
  read_if(j, "rho", p.rho);
  read_if(j, "frac_asymptomatic", p.frac_asymptomatic);
  read_if(j, "gamma_asym", p.gamma_asym);
  read_if(j, "gamma_mild", p.gamma_mild);
  read_if(j, "frac_mild_to_severe", p.frac_mild_to_severe);
  read_if(j, "severe_exit", p.severe_exit);
  read_if(j, "frac_severe_to_critical", p.frac_severe_to_critical);
  read_if(j, "critical_to_icu", p.critical_to_icu);
  read_if(j, "gamma_hosp", p.gamma_hosp);
  read_if(j, "icu_exit", p.icu_exit);
  read_if(j, "icu_fatality", p.icu_fatality);
  read_if(j, "quarantine_rate", p.quarantine_rate);
  read_if(j, "gamma_quarantine", p.gamma_quarantine);
  read_if(j, "quarantine_severe_to_hosp", p.quarantine_severe_to_hosp);
  read_if(j, "weight_presymptomatic", p.weight_presymptomatic);
  read_if(j, "weight_asymptomatic", p.weight_asymptomatic);
  read_if(j, "weight_mild", p.weight_mild);
  read_if(j, "weight_severe", p.weight_severe);
  read_if(j, "weight_quarantine", p.weight_quarantine);
}

}  // namespace

nlohmann::json to_json(const Config& cfg) {
  nlohmann::json j;
  j["model"] = {
      {"beta", cfg.model.beta},
      {"gamma", cfg.model.gamma},
      {"nu", cfg.model.nu},
      {"omega", cfg.model.omega},
      {"population", cfg.model.population},
      {"initial_infected", cfg.model.initial_infected},
      {"mask_effectiveness", cfg.model.mask_effectiveness},
      {"max_daily_doses", cfg.model.max_daily_doses},
      {"vacc_soft_floor", cfg.model.vacc_soft_floor},
      {"c15", c15_to_json(cfg.model.c15)},
  };
  j["costs"] = {
      {"mask_per_person_day", cfg.costs.mask_per_person_day},
      {"per_dose", cfg.costs.per_dose},
      {"closure_per_person_day", cfg.costs.closure_per_person_day},
      {"infectious_per_day", cfg.costs.infectious_per_day},
      {"hospitalized_per_day", cfg.costs.hospitalized_per_day},
      {"per_death", cfg.costs.per_death},
  };
  j["facilities"] = {
      {"school_share", cfg.facilities.school_share},
      {"work_share", cfg.facilities.work_share},
      {"closure_effectiveness", cfg.facilities.closure_effectiveness},
      {"school_population_fraction", cfg.facilities.school_population_fraction},
      {"work_population_fraction", cfg.facilities.work_population_fraction},
  };
  j["ppo"] = {
      {"learning_rate", cfg.ppo.learning_rate},
      {"rollout_steps", cfg.ppo.rollout_steps},
      {"gamma", cfg.ppo.gamma},
      {"gae_lambda", cfg.ppo.gae_lambda},
      {"num_minibatches", cfg.ppo.num_minibatches},
      {"update_epochs", cfg.ppo.update_epochs},
      {"clip_coef", cfg.ppo.clip_coef},
      {"entropy_coef", cfg.ppo.entropy_coef},
      {"value_coef", cfg.ppo.value_coef},
      {"max_grad_norm", cfg.ppo.max_grad_norm},
      {"hidden_size", cfg.ppo.hidden_size},
  };
  j["sac"] = {
      {"reward_scale", cfg.sac.reward_scale},
      {"learning_rate", cfg.sac.learning_rate},
      {"train_frequency", cfg.sac.train_frequency},
      {"learning_starts", cfg.sac.learning_starts},
      {"batch_size", cfg.sac.batch_size},
      {"tau", cfg.sac.tau},
      {"gamma", cfg.sac.gamma},
      {"buffer_capacity", cfg.sac.buffer_capacity},
      {"gradient_steps", cfg.sac.gradient_steps},
      {"entropy_alpha", cfg.sac.entropy_alpha},
      {"hidden_size", cfg.sac.hidden_size},
  };
  j["run"] = {
      {"horizon_weeks", cfg.run.horizon_weeks},
      {"step_days", cfg.run.step_days},
      {"dt", cfg.run.dt},
      {"discount", cfg.run.discount},
      {"total_timesteps", cfg.run.total_timesteps},
  };
  return j;
}

Config config_from_json(const nlohmann::json& j) {
  Config cfg;
  if (j.contains("model")) {
    const auto& m = j.at("model");
    read_if(m, "beta", cfg.model.beta);
    read_if(m, "gamma", cfg.model.gamma);
    read_if(m, "nu", cfg.model.nu);
    read_if(m, "omega", cfg.model.omega);
    read_if(m, "population", cfg.model.population);
    read_if(m, "initial_infected", cfg.model.initial_infected);
    read_if(m, "mask_effectiveness", cfg.model.mask_effectiveness);
    read_if(m, "max_daily_doses", cfg.model.max_daily_doses);
    read_if(m, "vacc_soft_floor", cfg.model.vacc_soft_floor);
    if (m.contains("c15")) {
      c15_from_json(m.at("c15"), cfg.model.c15);
    }
  }
  if (j.contains("costs")) {
    const auto& c = j.at("costs");
    read_if(c, "mask_per_person_day", cfg.costs.mask_per_person_day);
    read_if(c, "per_dose", cfg.costs.per_dose);
    read_if(c, "closure_per_person_day", cfg.costs.closure_per_person_day);
    read_if(c, "infectious_per_day", cfg.costs.infectious_per_day);
    read_if(c, "hospitalized_per_day", cfg.costs.hospitalized_per_day);
    read_if(c, "per_death", cfg.costs.per_death);
  }
  if (j.contains("facilities")) {
    const auto& f = j.at("facilities");
    read_if(f, "school_share", cfg.facilities.school_share);
    read_if(f, "work_share", cfg.facilities.work_share);
    read_if(f, "closure_effectiveness", cfg.facilities.closure_effectiveness);
    read_if(f, "school_population_fraction",
            cfg.facilities.school_population_fraction);
    read_if(f, "work_population_fraction",
            cfg.facilities.work_population_fraction);
  }
  if (j.contains("ppo")) {
    const auto& p = j.at("ppo");
    read_if(p, "learning_rate", cfg.ppo.learning_rate);
    read_if(p, "rollout_steps", cfg.ppo.rollout_steps);
    read_if(p, "gamma", cfg.ppo.gamma);
    read_if(p, "gae_lambda", cfg.ppo.gae_lambda);
    read_if(p, "num_minibatches", cfg.ppo.num_minibatches);
    read_if(p, "update_epochs", cfg.ppo.update_epochs);
    read_if(p, "clip_coef", cfg.ppo.clip_coef);
    read_if(p, "entropy_coef", cfg.ppo.entropy_coef);
    read_if(p, "value_coef", cfg.ppo.value_coef);
    read_if(p, "max_grad_norm", cfg.ppo.max_grad_norm);
    read_if(p, "hidden_size", cfg.ppo.hidden_size);
  }
  if (j.contains("sac")) {
    const auto& s = j.at("sac");
    read_if(s, "reward_scale", cfg.sac.reward_scale);
    read_if(s, "learning_rate", cfg.sac.learning_rate);
    read_if(s, "train_frequency", cfg.sac.train_frequency);
    read_if(s, "learning_starts", cfg.sac.learning_starts);
    read_if(s, "batch_size", cfg.sac.batch_size);
    read_if(s, "tau", cfg.sac.tau);
    read_if(s, "gamma", cfg.sac.gamma);
    read_if(s, "buffer_capacity", cfg.sac.buffer_capacity);
    read_if(s, "gradient_steps", cfg.sac.gradient_steps);
    read_if(s, "entropy_alpha", cfg.sac.entropy_alpha);
    read_if(s, "hidden_size", cfg.sac.hidden_size);
  }
  if (j.contains("run")) {
    const auto& r = j.at("run");
    read_if(r, "horizon_weeks", cfg.run.horizon_weeks);
    read_if(r, "step_days", cfg.run.step_days);
    read_if(r, "dt", cfg.run.dt);
    read_if(r, "discount", cfg.run.discount);
    read_if(r, "total_timesteps", cfg.run.total_timesteps);
  }
  return cfg;
}

Config load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open config file: " + path);
  }
  nlohmann::json j;
  in >> j;
  return config_from_json(j);
}

std::string config_hash(const Config& cfg) {
  const std::string dump = to_json(cfg).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  static const char* hex = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[15 - i] = hex[(h >> (4 * i)) & 0xf];
  }
  buf[16] = '\0';
  return std::string(buf);
}

}  // namespace epiplan
