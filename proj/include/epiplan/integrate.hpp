#ifndef EPIPLAN_INTEGRATE_HPP_
#define EPIPLAN_INTEGRATE_HPP_

#include <functional>
#include <span>
#include <vector>

#include "epiplan/model.hpp"

namespace epiplan {

using RhsFn =
    std::function<void(std::span<const double> x, double t, std::span<double> dxdt)>;

// Classical fourth-order Runge-Kutta update of an arbitrary first-order
// system. Throws runtime_error if the state or any stage derivative is
// non-finite.
std::vector<double> rk4_step(std::span<const double> x, double t, double dt,
                             const RhsFn& rhs);

// What one weekly step cost, measured as integrals over the week.
struct CostDeltas {
  double infectious_person_days = 0.0;
  double hospitalized_person_days = 0.0;
  double deaths = 0.0;
  double doses_given = 0.0;
};

struct WeekDiagnostics {
  double min_compartment = 0.0;         // most negative value seen, pre-clamp
  double max_conservation_drift = 0.0;  // max |sum - N| seen at substeps
};

struct WeekResult {
  SimState state;
  CostDeltas deltas;
  WeekDiagnostics diagnostics;
};

// Integrates `days` at fixed step dt with the modifiers held constant
// (actions are piecewise-constant per MDP step). Tiny negative compartments
// are clamped to zero at the end of the week and the total is rescaled back
// to N. Throws runtime_error if conservation drifts beyond 1e-6*N or the
// state goes non-finite.
WeekResult integrate_week(const SimState& state, const CompartmentModel& model,
                          const RateModifiers& mods, double days = 7.0,
                          double dt = 0.1);

}  // namespace epiplan

#endif  // EPIPLAN_INTEGRATE_HPP_
