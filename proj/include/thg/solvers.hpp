#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "thg/error.hpp"
#include "thg/models.hpp"
#include "thg/schedules.hpp"
#include "thg/vector.hpp"

namespace thg {

enum class SolverKind { DdimExponential, Euler, Midpoint2 };

/// A single-step integrator of known order.
struct SolverStep {
  SolverKind kind = SolverKind::DdimExponential;

  int order() const noexcept { return kind == SolverKind::Midpoint2 ? 2 : 1; }
  /// Model evaluations (cond + uncond) consumed by one full CFG step.
  int nfe_per_full_step() const noexcept { return kind == SolverKind::Midpoint2 ? 4 : 2; }

  friend bool operator==(const SolverStep&, const SolverStep&) = default;
};

inline std::string_view to_string(SolverKind k) {
  switch (k) {
    case SolverKind::DdimExponential: return "ddim";
    case SolverKind::Euler: return "euler";
    case SolverKind::Midpoint2: return "midpoint2";
  }
  return "?";
}

inline std::optional<SolverStep> parse_solver(std::string_view name) {
  if (name == "ddim") return SolverStep{SolverKind::DdimExponential};
  if (name == "euler") return SolverStep{SolverKind::Euler};
  if (name == "midpoint2") return SolverStep{SolverKind::Midpoint2};
  return std::nullopt;
}

namespace detail {

inline void check_interval(const NoiseSchedule& schedule, double t_from, double t_to) {
  schedule.check_time(t_from);
  schedule.check_time(t_to);
  if (t_to > t_from) {
    throw TimeRangeError("solver steps run backwards in time: t_to " + std::to_string(t_to) +
                         " > t_from " + std::to_string(t_from));
  }
}

}  // namespace detail

/// Advance x from t_from to t_to holding the prediction fixed over the interval.
///
/// In epsilon mode the DDIM kind is the exact variation-of-constants solution
/// of dx/dt = f x + g^2/(2 sigma) pred with frozen pred:
///   x_to = (alpha_to/alpha_from) x + (sigma_to - (alpha_to/alpha_from) sigma_from) pred.
/// Euler and midpoint apply their explicit rules to the same frozen-prediction
/// ODE. In velocity mode dx/dt = pred is integrated exactly by every kind.
///
/// The update is linear in (x, pred), so it applies unchanged to the split
/// tortoise/hare equations.
inline Vector step_with_fixed_prediction(const SolverStep& solver, PredictionMode mode,
                                         const Vector& x, const Vector& pred, double t_from,
                                         double t_to, const NoiseSchedule& schedule) {
  detail::check_interval(schedule, t_from, t_to);
  if (x.size() != pred.size()) throw DimensionMismatch("state and prediction sizes differ");
  if (t_to == t_from) return x;
  const double h = t_to - t_from;
  if (mode == PredictionMode::Velocity) return x + h * pred;

  switch (solver.kind) {
    case SolverKind::DdimExponential: {
      const double ratio = std::exp(schedule.log_alpha(t_to) - schedule.log_alpha(t_from));
      return ratio * x + (schedule.sigma(t_to) - ratio * schedule.sigma(t_from)) * pred;
    }
    case SolverKind::Euler:
      return x + h * ode_rhs(mode, schedule, x, pred, t_from);
    case SolverKind::Midpoint2: {
      const double t_mid = t_from + 0.5 * h;
      const Vector x_mid = x + (0.5 * h) * ode_rhs(mode, schedule, x, pred, t_from);
      return x + h * ode_rhs(mode, schedule, x_mid, pred, t_mid);
    }
  }
  return x;
}

struct FullStepResult {
  Vector state;
  long nfe_used;
};

/// One guided (CFG) step that re-evaluates the model as the solver requires.
/// The midpoint kind evaluates both branches again at the interval midpoint.
inline FullStepResult step_full(const SolverStep& solver, CountingModel& model, const Vector& x,
                                double omega, double t_from, double t_to) {
  const auto& schedule = model.schedule();
  const auto mode = model.model().mode();
  detail::check_interval(schedule, t_from, t_to);
  const long before = model.nfe();
  const double h = t_to - t_from;

  const Vector pred = cfg_combine(model.both(x, t_from), omega);
  Vector next;
  switch (solver.kind) {
    case SolverKind::DdimExponential:
    case SolverKind::Euler:
      next = step_with_fixed_prediction(solver, mode, x, pred, t_from, t_to, schedule);
      break;
    case SolverKind::Midpoint2: {
      const double t_mid = t_from + 0.5 * h;
      const Vector x_mid = x + (0.5 * h) * ode_rhs(mode, schedule, x, pred, t_from);
      const Vector pred_mid = cfg_combine(model.both(x_mid, t_mid), omega);
      next = x + h * ode_rhs(mode, schedule, x_mid, pred_mid, t_mid);
      break;
    }
  }
  return {std::move(next), model.nfe() - before};
}

}  // namespace thg
