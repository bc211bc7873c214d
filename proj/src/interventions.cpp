#include "epiplan/interventions.hpp"

#include <algorithm>
#include <stdexcept>

namespace epiplan {

std::string action_space_name(ActionSpace s) {
  return s == ActionSpace::A ? "A" : "B";
}

int action_dim(ActionSpace s) { return s == ActionSpace::A ? 2 : 4; }

std::vector<double> Action::to_vector() const {
  if (space == ActionSpace::A) return {mask, vaccine};
  return {mask, vaccine, school, work};
}

Action Action::from_vector(std::span<const double> v, ActionSpace space) {
  if (static_cast<int>(v.size()) != action_dim(space)) {
    throw std::invalid_argument("action has " + std::to_string(v.size()) +
                                " components, space " +
                                action_space_name(space) + " needs " +
                                std::to_string(action_dim(space)));
  }
  Action a;
  a.space = space;
  a.mask = v[0];
  a.vaccine = v[1];
  if (space == ActionSpace::B) {
    a.school = v[2];
    a.work = v[3];
  }
  a.validate();
  return a;
}

Action Action::from_vector_clamped(std::span<const double> v,
                                   ActionSpace space) {
  if (static_cast<int>(v.size()) != action_dim(space)) {
    throw std::invalid_argument("action has " + std::to_string(v.size()) +
                                " components, space " +
                                action_space_name(space) + " needs " +
                                std::to_string(action_dim(space)));
  }
  auto clamp01 = [](double x) { return std::clamp(x, 0.0, 1.0); };
  Action a;
  a.space = space;
  a.mask = clamp01(v[0]);
  a.vaccine = clamp01(v[1]);
  if (space == ActionSpace::B) {
    a.school = clamp01(v[2]);
    a.work = clamp01(v[3]);
  }
  return a;
}

void Action::validate() const {
  auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!in01(mask) || !in01(vaccine) || !in01(school) || !in01(work)) {
    throw std::domain_error("action component outside [0,1]");
  }
}

double mask_factor(double m, const ModelParams& params) {
  if (!(m >= 0.0 && m <= 1.0)) {
    throw std::domain_error("mask compliance outside [0,1]");
  }
  return 1.0 - params.mask_effectiveness * m;
}

double dose_flow(double v, const ModelParams& params) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::domain_error("vaccination rate outside [0,1]");
  }
  return v * params.max_daily_doses;
}

double facility_factors(double s, double w, const FacilityParams& f) {
  if (!(s >= 0.0 && s <= 1.0) || !(w >= 0.0 && w <= 1.0)) {
    throw std::domain_error("closure proportion outside [0,1]");
  }
  return 1.0 - f.school_share * f.closure_effectiveness * s -
         f.work_share * f.closure_effectiveness * w;
}

RateModifiers to_rate_modifiers(const Action& a, const ModelParams& params,
                                const FacilityParams& facilities) {
  a.validate();
  RateModifiers mods;
  mods.transmission_scale = mask_factor(a.mask, params);
  mods.vaccination_doses_per_day = dose_flow(a.vaccine, params);
  mods.school_scale = 1.0 - facilities.closure_effectiveness * a.school;
  mods.work_scale = 1.0 - facilities.closure_effectiveness * a.work;
  return mods;
}

CostLedger intervention_cost(const Action& a, double population,
                             double doses_given, double days,
                             const CostParams& costs,
                             const FacilityParams& facilities) {
  a.validate();
  CostLedger ledger;
  ledger.mask_cost = costs.mask_per_person_day * a.mask * population * days;
  ledger.vaccine_cost = costs.per_dose * doses_given;
  ledger.school_cost = costs.closure_per_person_day * a.school *
                       facilities.school_population_fraction * population *
                       days;
  ledger.workplace_cost = costs.closure_per_person_day * a.work *
                          facilities.work_population_fraction * population *
                          days;
  return ledger;
}

CostLedger disease_cost(const CostDeltas& deltas, const CostParams& costs) {
  if (deltas.infectious_person_days < 0.0 ||
      deltas.hospitalized_person_days < 0.0 || deltas.deaths < 0.0) {
    throw std::runtime_error("negative cost deltas from simulator");
  }
  CostLedger ledger;
  ledger.infection_cost = costs.infectious_per_day * deltas.infectious_person_days;
  ledger.hospitalization_cost =
      costs.hospitalized_per_day * deltas.hospitalized_person_days;
  ledger.fatality_cost = costs.per_death * deltas.deaths;
  return ledger;
}

CostLedger step_cost(const Action& a, double population,
                     const CostDeltas& deltas, double days,
                     const CostParams& costs, const FacilityParams& facilities) {
  CostLedger ledger =
      intervention_cost(a, population, deltas.doses_given, days, costs, facilities);
  const CostLedger disease = disease_cost(deltas, costs);
  ledger.infection_cost = disease.infection_cost;
  ledger.hospitalization_cost = disease.hospitalization_cost;
  ledger.fatality_cost = disease.fatality_cost;
  return ledger;
}

}  // namespace epiplan
