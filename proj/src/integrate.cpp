#include "epiplan/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace epiplan {

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

}  // namespace

std::vector<double> rk4_step(std::span<const double> x, double t, double dt,
                             const RhsFn& rhs) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("rk4_step: dt must be positive");
  }
  if (!all_finite(x)) {
    throw std::runtime_error("rk4_step: non-finite state");
  }
  const std::size_t n = x.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n), out(n);

  rhs(x, t, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
  rhs(tmp, t + 0.5 * dt, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
  rhs(tmp, t + 0.5 * dt, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
  rhs(tmp, t + dt, k4);

  for (std::size_t i = 0; i < n; ++i) {
    out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  if (!all_finite(out)) {
    throw std::runtime_error("rk4_step: non-finite derivative or state");
  }
  return out;
}

WeekResult integrate_week(const SimState& state, const CompartmentModel& model,
                          const RateModifiers& mods, double days, double dt) {
  mods.validate();
  if (!(dt > 0.0) || !(days > 0.0)) {
    throw std::invalid_argument("integrate_week: dt and days must be positive");
  }
  const int nc = model.n_compartments();
  const std::size_t dim = static_cast<std::size_t>(flat_dim(model));
  const double n_pop = model.population;

  std::vector<double> x = flatten(state);
  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);

  WeekDiagnostics diag;
  diag.min_compartment =
      *std::min_element(x.begin(), x.begin() + nc);

  const auto n_steps = static_cast<long>(std::llround(days / dt));
  double t = state.sim_time;
  for (long step = 0; step < n_steps; ++step) {
    eval_rhs(model, mods, x, k1);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
    eval_rhs(model, mods, tmp, k2);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
    eval_rhs(model, mods, tmp, k3);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + dt * k3[i];
    eval_rhs(model, mods, tmp, k4);
    for (std::size_t i = 0; i < dim; ++i) {
      x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    t += dt;

    double total = 0.0;
    for (int i = 0; i < nc; ++i) {
      diag.min_compartment = std::min(diag.min_compartment, x[i]);
      total += x[i];
    }
    diag.max_conservation_drift =
        std::max(diag.max_conservation_drift, std::abs(total - n_pop));
  }

  if (!all_finite(x)) {
    throw std::runtime_error("integrate_week: state went non-finite");
  }
  if (diag.max_conservation_drift > 1e-6 * n_pop) {
    throw std::runtime_error("integrate_week: conservation violated");
  }

  // Clamp numerical noise and rescale the total back to N.
  for (int i = 0; i < nc; ++i) x[i] = std::max(x[i], 0.0);
  const double total = std::accumulate(x.begin(), x.begin() + nc, 0.0);
  if (total > 0.0) {
    const double scale = n_pop / total;
    for (int i = 0; i < nc; ++i) x[i] *= scale;
  }

  WeekResult result;
  result.state = unflatten(model, x, t);
  result.deltas.infectious_person_days =
      result.state.accumulators.infectious_person_days -
      state.accumulators.infectious_person_days;
  result.deltas.hospitalized_person_days =
      result.state.accumulators.hospitalized_person_days -
      state.accumulators.hospitalized_person_days;
  result.deltas.deaths =
      result.state.accumulators.deaths - state.accumulators.deaths;
  result.deltas.doses_given =
      result.state.accumulators.doses_given - state.accumulators.doses_given;
  result.diagnostics = diag;
  return result;
}

}  // namespace epiplan
