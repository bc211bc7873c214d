#include "epiplan/model.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <stdexcept>

namespace epiplan {

std::string model_name(ModelId id) {
  switch (id) {
    case ModelId::Sir:
      return "SIR";
    case ModelId::Sirv:
      return "SIRV";
    case ModelId::C15:
      return "C15";
  }
  return "?";
}

ModelId model_from_name(const std::string& name) {
  if (name == "SIR") return ModelId::Sir;
  if (name == "SIRV") return ModelId::Sirv;
  if (name == "C15") return ModelId::C15;
  throw std::invalid_argument("unknown model: " + name +
                              " (expected SIR, SIRV or C15)");
}

void CompartmentModel::validate() const {
  const int expected = id == ModelId::Sir ? 3 : id == ModelId::Sirv ? 5 : 15;
  if (n_compartments() != expected) {
    throw std::invalid_argument("model " + model_name(id) + " needs " +
                                std::to_string(expected) + " compartments");
  }
  auto check = [](double v, const char* what) {
    if (!(v >= 0.0)) {
      throw std::invalid_argument(std::string("negative rate: ") + what);
    }
  };
  check(rates.beta, "beta");
  check(rates.gamma, "gamma");
  check(rates.nu, "nu");
  check(rates.omega, "omega");
  check(rates.max_daily_doses, "max_daily_doses");
  if (!(population > 0.0)) {
    throw std::invalid_argument("population must be positive");
  }
  if (facilities.school_share + facilities.work_share > 1.0) {
    throw std::invalid_argument("facility transmission shares exceed 1");
  }
}

CompartmentModel make_model(ModelId id, const ModelParams& params,
                            const FacilityParams& facilities) {
  CompartmentModel m;
  m.id = id;
  m.rates = params;
  m.facilities = facilities;
  m.population = params.population;
  switch (id) {
    case ModelId::Sir:
      m.compartment_names = {"S", "I", "R"};
      break;
    case ModelId::Sirv:
      m.compartment_names = {"S", "I", "R", "V1", "V2"};
      break;
    case ModelId::C15:
      m.compartment_names = {"S",  "V",  "E",  "P",   "A", "M", "Sev", "Cri",
                             "QA", "QM", "QS", "H", "ICU", "R", "D"};
      break;
  }
  m.validate();
  return m;
}

CompartmentModel model_from_json(const nlohmann::json& j) {
  ModelParams params;
  FacilityParams facilities;
  if (j.contains("beta")) params.beta = j.at("beta").get<double>();
  if (j.contains("gamma")) params.gamma = j.at("gamma").get<double>();
  if (j.contains("nu")) params.nu = j.at("nu").get<double>();
  if (j.contains("omega")) params.omega = j.at("omega").get<double>();
  if (j.contains("population")) {
    params.population = j.at("population").get<double>();
  }
  if (j.contains("mask_effectiveness")) {
    params.mask_effectiveness = j.at("mask_effectiveness").get<double>();
  }
  if (j.contains("max_daily_doses")) {
    params.max_daily_doses = j.at("max_daily_doses").get<double>();
  }
  if (j.contains("vacc_soft_floor")) {
    params.vacc_soft_floor = j.at("vacc_soft_floor").get<double>();
  }
  const ModelId id = model_from_name(j.at("model").get<std::string>());
  return make_model(id, params, facilities);
}

nlohmann::json model_to_json(const CompartmentModel& m) {
  return {
      {"model", model_name(m.id)},
      {"beta", m.rates.beta},
      {"gamma", m.rates.gamma},
      {"nu", m.rates.nu},
      {"omega", m.rates.omega},
      {"population", m.population},
      {"mask_effectiveness", m.rates.mask_effectiveness},
      {"max_daily_doses", m.rates.max_daily_doses},
      {"vacc_soft_floor", m.rates.vacc_soft_floor},
  };
}

double SimState::total_population() const {
  return std::accumulate(compartments.begin(), compartments.end(), 0.0);
}

SimState initial_state(const CompartmentModel& model, double initial_infected) {
  SimState s;
  s.compartments.assign(model.n_compartments(), 0.0);
  s.compartments[0] = model.population - initial_infected;
  const int seed_idx = model.id == ModelId::C15 ? c15_idx::E : sir_idx::I;
  s.compartments[seed_idx] = initial_infected;
  return s;
}

void RateModifiers::validate() const {
  if (!(transmission_scale >= 0.0 && transmission_scale <= 1.0)) {
    throw std::invalid_argument("transmission_scale outside [0,1]");
  }
  if (!(vaccination_doses_per_day >= 0.0)) {
    throw std::invalid_argument("vaccination dose flow must be >= 0");
  }
  if (!(school_scale >= 0.0 && school_scale <= 1.0) ||
      !(work_scale >= 0.0 && work_scale <= 1.0)) {
    throw std::invalid_argument("facility scales outside [0,1]");
  }
}

double effective_beta_scale(const RateModifiers& mods, const FacilityParams& f) {
  const double home_share = 1.0 - f.school_share - f.work_share;
  return mods.transmission_scale * (home_share +
                                    f.school_share * mods.school_scale +
                                    f.work_share * mods.work_scale);
}

std::vector<double> flatten(const SimState& s) {
  std::vector<double> x = s.compartments;
  x.push_back(s.accumulators.infectious_person_days);
  x.push_back(s.accumulators.hospitalized_person_days);
  x.push_back(s.accumulators.deaths);
  x.push_back(s.accumulators.doses_given);
  return x;
}

SimState unflatten(const CompartmentModel& m, std::span<const double> x,
                   double sim_time) {
  assert(static_cast<int>(x.size()) == flat_dim(m));
  SimState s;
  const int nc = m.n_compartments();
  s.compartments.assign(x.begin(), x.begin() + nc);
  s.accumulators.infectious_person_days = x[nc + 0];
  s.accumulators.hospitalized_person_days = x[nc + 1];
  s.accumulators.deaths = x[nc + 2];
  s.accumulators.doses_given = x[nc + 3];
  s.sim_time = sim_time;
  return s;
}

namespace {

// Dose flow tapers linearly once S drops below the soft floor, so the ODE
// stays smooth and S cannot be driven negative. A slightly negative S yields
// a slightly negative flow, which pushes S back toward zero.
inline double dose_rate(double nominal, double susceptible, double soft_floor) {
  return nominal * std::min(1.0, susceptible / soft_floor);
}

void rhs_sir_impl(const CompartmentModel& m, const RateModifiers& mods,
                  std::span<const double> x, std::span<double> d) {
  using namespace sir_idx;
  const double n = m.population;
  const double beta_eff =
      m.rates.beta * effective_beta_scale(mods, m.facilities);
  const double infection = beta_eff * x[S] * x[I] / n;
  const double recovery = m.rates.gamma * x[I];
  const double doses = dose_rate(mods.vaccination_doses_per_day, x[S],
                                 m.rates.vacc_soft_floor);

  d[S] = -infection - doses;
  d[I] = infection - recovery;
  d[R] = recovery + doses;  // vaccination moves S directly to R

  d[3 + 0] = x[I];   // infectious person-days
  d[3 + 1] = 0.0;    // no hospital compartment
  d[3 + 2] = 0.0;    // no deaths
  d[3 + 3] = doses;
}

void rhs_sirv_impl(const CompartmentModel& m, const RateModifiers& mods,
                   std::span<const double> x, std::span<double> d) {
  using namespace sirv_idx;
  const double n = m.population;
  const double beta_eff =
      m.rates.beta * effective_beta_scale(mods, m.facilities);
  const double infection = beta_eff * x[S] * x[I] / n;
  const double recovery = m.rates.gamma * x[I];
  const double waning = m.rates.nu * x[R];
  const double doses = dose_rate(mods.vaccination_doses_per_day, x[S],
                                 m.rates.vacc_soft_floor);
  const double second_dose = m.rates.omega * x[V1];

  d[S] = -infection - doses + waning;
  d[I] = infection - recovery;
  d[R] = recovery - waning;
  d[V1] = doses - second_dose;
  d[V2] = second_dose;

  d[5 + 0] = x[I];
  d[5 + 1] = 0.0;
  d[5 + 2] = 0.0;
  d[5 + 3] = doses;
}

void rhs_c15_impl(const CompartmentModel& m, const RateModifiers& mods,
                  std::span<const double> x, std::span<double> d) {
  using namespace c15_idx;
  const auto& r = m.rates;
  const auto& c = r.c15;
  const double n = m.population;
  const double beta_eff = r.beta * effective_beta_scale(mods, m.facilities);

  const double infectious_mass =
      c.weight_presymptomatic * x[P] + c.weight_asymptomatic * x[A] +
      c.weight_mild * x[M] + c.weight_severe * x[Sev] +
      c.weight_quarantine * (x[QA] + x[QM] + x[QS]);
  const double infection = beta_eff * infectious_mass * x[S] / n;
  const double doses = dose_rate(mods.vaccination_doses_per_day, x[S],
                                 r.vacc_soft_floor);

  const double incubation = c.sigma * x[E];
  const double presym_exit = c.rho * x[P];
  const double to_asym = c.frac_asymptomatic * presym_exit;
  const double to_mild = presym_exit - to_asym;
  const double asym_recovery = c.gamma_asym * x[A];
  const double mild_exit = c.gamma_mild * x[M];
  const double mild_to_severe = c.frac_mild_to_severe * mild_exit;
  const double mild_recovery = mild_exit - mild_to_severe;
  const double severe_exit = c.severe_exit * x[Sev];
  const double severe_to_critical = c.frac_severe_to_critical * severe_exit;
  const double severe_to_hosp = severe_exit - severe_to_critical;
  const double critical_to_icu = c.critical_to_icu * x[Cri];
  const double hosp_recovery = c.gamma_hosp * x[H];
  const double icu_exit = c.icu_exit * x[ICU];
  const double icu_death = c.icu_fatality * icu_exit;
  const double icu_recovery = icu_exit - icu_death;
  const double q_asym = c.quarantine_rate * x[A];
  const double q_mild = c.quarantine_rate * x[M];
  const double q_severe = c.quarantine_rate * x[Sev];
  const double qa_recovery = c.gamma_quarantine * x[QA];
  const double qm_recovery = c.gamma_quarantine * x[QM];
  const double qs_to_hosp = c.quarantine_severe_to_hosp * x[QS];
  const double waning = r.nu * x[R];

  d[S] = -infection - doses + waning;
  d[V] = doses;
  d[E] = infection - incubation;
  d[P] = incubation - presym_exit;
  d[A] = to_asym - asym_recovery - q_asym;
  d[M] = to_mild - mild_exit - q_mild;
  d[Sev] = mild_to_severe - severe_exit - q_severe;
  d[Cri] = severe_to_critical - critical_to_icu;
  d[QA] = q_asym - qa_recovery;
  d[QM] = q_mild - qm_recovery;
  d[QS] = q_severe - qs_to_hosp;
  d[H] = severe_to_hosp + qs_to_hosp - hosp_recovery;
  d[ICU] = critical_to_icu - icu_exit;
  d[R] = asym_recovery + mild_recovery + hosp_recovery + icu_recovery +
         qa_recovery + qm_recovery - waning;
  d[D] = icu_death;

  // H and ICU are billed at the hospitalization rate only.
  d[15 + 0] = x[P] + x[A] + x[M] + x[Sev] + x[Cri] + x[QA] + x[QM] + x[QS];
  d[15 + 1] = x[H] + x[ICU];
  d[15 + 2] = icu_death;
  d[15 + 3] = doses;
}

}  // namespace

void eval_rhs(const CompartmentModel& model, const RateModifiers& mods,
              std::span<const double> x, std::span<double> dxdt) {
  assert(static_cast<int>(x.size()) == flat_dim(model));
  assert(x.size() == dxdt.size());
  switch (model.id) {
    case ModelId::Sir:
      rhs_sir_impl(model, mods, x, dxdt);
      break;
    case ModelId::Sirv:
      rhs_sirv_impl(model, mods, x, dxdt);
      break;
    case ModelId::C15:
      rhs_c15_impl(model, mods, x, dxdt);
      break;
  }
}

namespace {
std::vector<double> rhs_structured(const SimState& s,
                                   const CompartmentModel& m,
                                   const RateModifiers& mods) {
  mods.validate();
  const std::vector<double> x = flatten(s);
  std::vector<double> d(x.size());
  eval_rhs(m, mods, x, d);
  return d;
}
}  // namespace

std::vector<double> rhs_sir(const SimState& s, const CompartmentModel& m,
                            const RateModifiers& mods) {
  assert(m.id == ModelId::Sir);
  return rhs_structured(s, m, mods);
}

std::vector<double> rhs_sirv(const SimState& s, const CompartmentModel& m,
                             const RateModifiers& mods) {
  assert(m.id == ModelId::Sirv);
  return rhs_structured(s, m, mods);
}

std::vector<double> rhs_c15(const SimState& s, const CompartmentModel& m,
                            const RateModifiers& mods) {
  assert(m.id == ModelId::C15);
  return rhs_structured(s, m, mods);
}

}  // namespace epiplan
