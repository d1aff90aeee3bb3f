#pragma once

#include <utility>

#include "thg/error.hpp"
#include "thg/models.hpp"
#include "thg/schedules.hpp"
#include "thg/solvers.hpp"
#include "thg/vector.hpp"

namespace thg::harness {

inline constexpr int kDefaultOracleSubsteps = 10'000;

/// Guided ODE integrated from t_from to t_to with `substeps` uniform
/// second-order midpoint steps.
inline Vector integrate_guided(const GuidedModel& model, const NoiseSchedule& schedule,
                               double omega, const Vector& x, double t_from, double t_to,
                               int substeps) {
  if (substeps < 1) throw InvalidParameter("substeps must be >= 1");
  CountingModel counted(model, schedule);
  const SolverStep midpoint{SolverKind::Midpoint2};
  Vector state = x;
  const double span = t_to - t_from;
  for (int k = 0; k < substeps; ++k) {
    const double a = t_from + span * static_cast<double>(k) / substeps;
    const double b = k + 1 == substeps ? t_to : t_from + span * static_cast<double>(k + 1) / substeps;
    state = step_full(midpoint, counted, state, omega, a, b).state;
  }
  return state;
}

/// Ground-truth x_0 of the guided ODE from x_T at t_max.
inline Vector reference_oracle(const GuidedModel& model, const NoiseSchedule& schedule,
                               double omega, const Vector& x_T,
                               int substeps = kDefaultOracleSubsteps) {
  if (substeps < 1000) throw InvalidParameter("reference_oracle requires substeps >= 1000");
  require_dim(x_T, model.dim(), "reference_oracle initial state");
  return integrate_guided(model, schedule, omega, x_T, schedule.t_max(), schedule.t_min(),
                          substeps);
}

struct SplitState {
  Vector tortoise;
  Vector hare;
};

/// Reference solution of the split system
///   dx^T/dt = f x^T + k(t) eps_c(x^T + x^H)
///   dx^H/dt = f x^H + k(t) (omega - 1) delta(x^T + x^H)
/// (velocity mode: the drift and k(t) drop out) by uniform midpoint substeps.
inline SplitState integrate_split(const GuidedModel& model, const NoiseSchedule& schedule,
                                  double omega, SplitState start, double t_from, double t_to,
                                  int substeps) {
  if (substeps < 1) throw InvalidParameter("substeps must be >= 1");
  const auto mode = model.mode();
  auto rhs = [&](const SplitState& s, double t) {
    const Prediction p = predict(model, Vector(s.tortoise + s.hare), t, schedule);
    return SplitState{ode_rhs(mode, schedule, s.tortoise, p.cond, t),
                      ode_rhs(mode, schedule, s.hare, Vector((omega - 1.0) * p.delta), t)};
  };
  const double span = t_to - t_from;
  for (int k = 0; k < substeps; ++k) {
    const double a = t_from + span * static_cast<double>(k) / substeps;
    const double b = k + 1 == substeps ? t_to : t_from + span * static_cast<double>(k + 1) / substeps;
    const double h = b - a;
    const SplitState k1 = rhs(start, a);
    const SplitState mid{start.tortoise + 0.5 * h * k1.tortoise, start.hare + 0.5 * h * k1.hare};
    const SplitState k2 = rhs(mid, a + 0.5 * h);
    start.tortoise += h * k2.tortoise;
    start.hare += h * k2.hare;
  }
  return start;
}

}  // namespace thg::harness
