#ifndef EPIPLAN_MODEL_HPP_
#define EPIPLAN_MODEL_HPP_

#include <span>
#include <string>
#include <vector>

#include "epiplan/config.hpp"

namespace epiplan {

enum class ModelId { Sir, Sirv, C15 };

std::string model_name(ModelId id);
ModelId model_from_name(const std::string& name);  // invalid -> invalid_argument

// A compartmental disease model: named compartments plus the per-day rates
// that drive flows between them. Persons are conserved; deaths land in an
// explicit D compartment.
struct CompartmentModel {
  ModelId id = ModelId::Sir;
  std::vector<std::string> compartment_names;
  double population = 2'000'000.0;
  ModelParams rates;
  FacilityParams facilities;

  int n_compartments() const { return static_cast<int>(compartment_names.size()); }
  // Throws invalid_argument on negative rates or a bad compartment count.
  void validate() const;
};

CompartmentModel make_model(ModelId id, const ModelParams& params,
                            const FacilityParams& facilities = {});

// {"model": "SIRV", "beta": 0.3, "gamma": 0.1, ...}; unknown keys ignored,
// missing keys keep defaults.
CompartmentModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const CompartmentModel& m);

// Cost-relevant integrals carried alongside the compartments: the same RK4
// pass that advances the state advances these.
struct CostAccumulators {
  double infectious_person_days = 0.0;
  double hospitalized_person_days = 0.0;
  double deaths = 0.0;
  double doses_given = 0.0;
};
constexpr int kNumAccumulators = 4;

struct SimState {
  std::vector<double> compartments;  // person counts, real-valued
  CostAccumulators accumulators;
  double sim_time = 0.0;  // days

  double total_population() const;
};

// S = N - initial_infected; the seed goes to I (SIR, SIRV) or E (C15).
SimState initial_state(const CompartmentModel& model, double initial_infected);

// How an action reshapes the transition rates for one step. transmission_scale
// multiplies beta (mask effect); school/work scales multiply each facility's
// share of transmission; dose flow is the nominal persons/day, tapered inside
// the RHS as S runs out.
struct RateModifiers {
  double transmission_scale = 1.0;
  double vaccination_doses_per_day = 0.0;
  double school_scale = 1.0;
  double work_scale = 1.0;

  void validate() const;  // invalid_argument outside the documented ranges
};

// beta multiplier combining mask compliance and facility closures:
// transmission_scale * (home_share + school_share*school_scale + ...).
double effective_beta_scale(const RateModifiers& mods, const FacilityParams& f);

// Packed ODE state: compartments followed by the four accumulators.
inline int flat_dim(const CompartmentModel& m) {
  return m.n_compartments() + kNumAccumulators;
}
std::vector<double> flatten(const SimState& s);
SimState unflatten(const CompartmentModel& m, std::span<const double> x,
                   double sim_time);

// Derivative of the packed state. x and dxdt have flat_dim(model) entries.
// The compartment block of dxdt sums to zero: every flow leaves one
// compartment and enters another.
void eval_rhs(const CompartmentModel& model, const RateModifiers& mods,
              std::span<const double> x, std::span<double> dxdt);

// Convenience overloads for a structured state.
std::vector<double> rhs_sir(const SimState& s, const CompartmentModel& m,
                            const RateModifiers& mods);
std::vector<double> rhs_sirv(const SimState& s, const CompartmentModel& m,
                             const RateModifiers& mods);
std::vector<double> rhs_c15(const SimState& s, const CompartmentModel& m,
                            const RateModifiers& mods);

// Compartment indices, for readable flow code and tests.
namespace sir_idx {
constexpr int S = 0, I = 1, R = 2;
}
namespace sirv_idx {
constexpr int S = 0, I = 1, R = 2, V1 = 3, V2 = 4;
}
namespace c15_idx {
constexpr int S = 0, V = 1, E = 2, P = 3, A = 4, M = 5, Sev = 6, Cri = 7,
              QA = 8, QM = 9, QS = 10, H = 11, ICU = 12, R = 13, D = 14;
}

}  // namespace epiplan

#endif  // EPIPLAN_MODEL_HPP_
