#ifndef EPIPLAN_CONFIG_HPP_
#define EPIPLAN_CONFIG_HPP_

#include <cstdint>
#include <string>

#include "json.hpp"

namespace epiplan {

// Progression rates of the 15-compartment model, all per day.
// Compartment order: S V E P A M Sev Cri QA QM QS H ICU R D.
struct C15Params {
  double sigma = 1.0 / 3.0;              // E -> P
  double rho = 1.0 / 2.0;                // P exit
  double frac_asymptomatic = 0.4;        // P -> A (rest to M)
  double gamma_asym = 1.0 / 7.0;         // A -> R
  double gamma_mild = 1.0 / 7.0;         // M exit
  double frac_mild_to_severe = 0.1;      // M -> Sev (rest to R)
  double severe_exit = 1.0 / 2.0;        // Sev exit
  double frac_severe_to_critical = 0.2;  // Sev -> Cri (rest to H)
  double critical_to_icu = 1.0;          // Cri -> ICU
  double gamma_hosp = 1.0 / 10.0;        // H -> R
  double icu_exit = 1.0 / 14.0;          // ICU exit
  double icu_fatality = 0.3;             // ICU -> D (rest to R)
  double quarantine_rate = 0.05;         // A -> QA, M -> QM, Sev -> QS
  double gamma_quarantine = 1.0 / 7.0;   // QA -> R and QM -> R
  double quarantine_severe_to_hosp = 1.0 / 2.0;  // QS -> H
  // Relative infectiousness of each compartment in the force of infection.
  double weight_presymptomatic = 1.0;
  double weight_asymptomatic = 1.0;
  double weight_mild = 0.5;
  double weight_severe = 0.5;
  double weight_quarantine = 0.1;
};

// Disease and intervention-effect parameters shared by all models.
struct ModelParams {
  double beta = 0.3;          // transmission rate, per day
  double gamma = 0.1;         // recovery rate, per day
  double nu = 1.0 / 180.0;    // immunity loss rate, per day (SIRV, C15)
  double omega = 1.0 / 28.0;  // inter-dose progression V1 -> V2, per day
  double population = 2'000'000.0;
  double initial_infected = 100.0;
  double mask_effectiveness = 0.8;   // transmission reduction at full compliance
  double max_daily_doses = 10'000.0;  // doses/day at v = 1
  double vacc_soft_floor = 1'000.0;  // dose flow tapers linearly below this S
  C15Params c15;
};

// Dollar rates for intervention and disease-burden accounting.
struct CostParams {
  double mask_per_person_day = 0.05;
  double per_dose = 40.0;
  double closure_per_person_day = 1.8;
  double infectious_per_day = 173.0;
  double hospitalized_per_day = 250.0;
  double per_death = 100'000.0;
};

// How school and workplace contacts contribute to transmission and who is
// affected by closures.
struct FacilityParams {
  double school_share = 0.20;           // share of transmission in schools
  double work_share = 0.35;             // share of transmission in workplaces
  double closure_effectiveness = 0.9;   // contact reduction at full closure
  double school_population_fraction = 0.25;  // students, for closure costs
  double work_population_fraction = 0.50;    // workers, for closure costs
};

struct PpoParams {
  double learning_rate = 3e-4;
  int rollout_steps = 2048;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int num_minibatches = 32;
  int update_epochs = 10;
  double clip_coef = 0.2;
  double entropy_coef = 0.0;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  int hidden_size = 64;
};

struct SacParams {
  double reward_scale = 100.0;
  double learning_rate = 3e-4;
  int train_frequency = 5;
  int learning_starts = 1000;
  int batch_size = 256;
  double tau = 0.005;
  double gamma = 0.99;
  std::size_t buffer_capacity = 1'000'000;
  int gradient_steps = 1;
  double entropy_alpha = 1.0;
  int hidden_size = 256;
};

struct RunParams {
  int horizon_weeks = 52;
  double step_days = 7.0;
  double dt = 0.1;           // integrator step, days
  double discount = 0.99;    // for reporting discounted returns
  int total_timesteps = 30'000;
};

struct Config {
  ModelParams model;
  CostParams costs;
  FacilityParams facilities;
  PpoParams ppo;
  SacParams sac;
  RunParams run;
};

nlohmann::json to_json(const Config& cfg);
// Accepts a partial document; absent keys keep their defaults.
Config config_from_json(const nlohmann::json& j);
Config load_config_file(const std::string& path);

// FNV-1a over the canonical (sorted-key) dump; stable across runs.
std::string config_hash(const Config& cfg);

}  // namespace epiplan

#endif  // EPIPLAN_CONFIG_HPP_
