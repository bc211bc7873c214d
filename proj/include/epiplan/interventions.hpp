#ifndef EPIPLAN_INTERVENTIONS_HPP_
#define EPIPLAN_INTERVENTIONS_HPP_

#include <span>
#include <string>
#include <vector>

#include "epiplan/integrate.hpp"
#include "epiplan/model.hpp"

namespace epiplan {

enum class ActionSpace { A, B };

std::string action_space_name(ActionSpace s);
int action_dim(ActionSpace s);  // 2 for A, 4 for B

// One intervention setting: mask compliance m, vaccination rate v, and (space
// B only) remote-learning and remote-working proportions s, w. All in [0,1];
// school/work stay zero in space A.
struct Action {
  ActionSpace space = ActionSpace::A;
  double mask = 0.0;
  double vaccine = 0.0;
  double school = 0.0;
  double work = 0.0;

  int dims() const { return action_dim(space); }
  std::vector<double> to_vector() const;
  // Throws invalid_argument on a size mismatch, domain_error if any
  // component is outside [0,1].
  static Action from_vector(std::span<const double> v, ActionSpace space);
  // Clamps each component into [0,1] (RL policies sample unbounded values).
  static Action from_vector_clamped(std::span<const double> v, ActionSpace space);

  void validate() const;  // domain_error if any component is outside [0,1]
};

// Transmission multiplier of mask compliance m: 1 - R*m.
double mask_factor(double m, const ModelParams& params = {});

// Nominal vaccination flow v*C in persons/day (depletion taper is applied in
// the simulator, where S is known).
double dose_flow(double v, const ModelParams& params = {});

// Combined school+workplace transmission multiplier:
// 1 - school_share*eff*s - work_share*eff*w.
double facility_factors(double s, double w, const FacilityParams& f = {});

// Everything the simulator needs to know about an action.
RateModifiers to_rate_modifiers(const Action& a, const ModelParams& params,
                                const FacilityParams& facilities);

// Dollar cost of one MDP step, split by source. Totals are sums of the
// breakdown entries, so additivity is exact.
struct CostLedger {
  double mask_cost = 0.0;
  double vaccine_cost = 0.0;
  double school_cost = 0.0;
  double workplace_cost = 0.0;
  double infection_cost = 0.0;
  double hospitalization_cost = 0.0;
  double fatality_cost = 0.0;

  double intervention_cost() const {
    return mask_cost + vaccine_cost + school_cost + workplace_cost;
  }
  double disease_cost() const {
    return infection_cost + hospitalization_cost + fatality_cost;
  }
  double total() const { return intervention_cost() + disease_cost(); }
};

// doses_given is the post-taper count actually delivered during the step;
// unused capacity is not billed.
CostLedger intervention_cost(const Action& a, double population,
                             double doses_given, double days,
                             const CostParams& costs = {},
                             const FacilityParams& facilities = {});

// Throws runtime_error on negative deltas (a simulator fault).
CostLedger disease_cost(const CostDeltas& deltas, const CostParams& costs = {});

CostLedger step_cost(const Action& a, double population,
                     const CostDeltas& deltas, double days,
                     const CostParams& costs = {},
                     const FacilityParams& facilities = {});

}  // namespace epiplan

#endif  // EPIPLAN_INTERVENTIONS_HPP_
