#pragma once

#include <string>
#include <utility>
#include <vector>

#include "thg/coarse_grid.hpp"
#include "thg/error.hpp"
#include "thg/models.hpp"
#include "thg/schedules.hpp"
#include "thg/solvers.hpp"
#include "thg/vector.hpp"

namespace thg {

/// Everything the multirate sampler consumes besides the model.
struct ThgConfig {
  double omega = 7.5;
  double rho = 1.1;    ///< threshold the grid was calibrated with; informational here
  double boost = 1.0;  ///< b >= 1, scales the guidance difference on multi-step leaps
  int i_hi = 0;        ///< guidance difference is zeroed at fine indices >= i_hi
  CoarseGrid grid;
  SolverStep solver{};
  bool always_boost = false;  ///< apply b on every coarse step, not only leaps of m >= 2

  void validate() const {
    if (!(omega >= 0.0)) throw InvalidParameter("omega must be >= 0");
    if (!(rho > 0.0)) throw InvalidParameter("rho must be > 0");
    if (!(boost >= 1.0)) throw InvalidParameter("boost must be >= 1");
    if (i_hi < 0 || i_hi > grid.steps()) {
      throw InvalidParameter("i_hi must lie in [0, N]");
    }
  }
};

enum class RecordMode { Full, EndpointOnly };

struct CoarseEvent {
  int index;
  int leap;  ///< fine steps to the next coarse index
  bool boosted;

  friend bool operator==(const CoarseEvent&, const CoarseEvent&) = default;
};

/// Per-fine-index states of one sampling run. In EndpointOnly mode only the
/// final (index N) states are kept.
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<Vector> tortoise_states;
  std::vector<Vector> hare_states;
  std::vector<Vector> full_states;
  long nfe = 0;
  std::vector<CoarseEvent> coarse_events;

  const Vector& endpoint() const { return full_states.back(); }

  void push(double t, Vector tortoise, Vector hare) {
    times.push_back(t);
    full_states.push_back(tortoise + hare);
    tortoise_states.push_back(std::move(tortoise));
    hare_states.push_back(std::move(hare));
  }
};

/// Baseline guided sampling on the fine grid; each step re-evaluates both branches.
inline TrajectoryRecord sample_cfg(const GuidedModel& model, const NoiseSchedule& schedule,
                                   const FineGrid& grid, double omega, const SolverStep& solver,
                                   const Vector& x_T, RecordMode mode = RecordMode::Full) {
  require_dim(x_T, model.dim(), "sample_cfg initial state");
  CountingModel counted(model, schedule);
  TrajectoryRecord rec;
  const Vector zero = Vector::Zero(model.dim());
  const int n = grid.steps();
  Vector x = x_T;
  if (mode == RecordMode::Full) rec.push(grid[0], x, zero);
  for (int i = 0; i < n; ++i) {
    x = step_full(solver, counted, x, omega, grid[i], grid[i + 1]).state;
    if (mode == RecordMode::Full || i + 1 == n) rec.push(grid[i + 1], x, zero);
  }
  rec.nfe = counted.nfe();
  return rec;
}

/// Multirate guided sampling. The tortoise (conditional branch) advances on
/// every fine step; the unconditional branch is evaluated only at coarse
/// indices, where the hare is integrated from the coarse anchor t_i directly
/// to every fine time up to the next coarse index. For i >= i_hi the guidance
/// difference is zero, so the hare evolves under the drift term alone.
inline TrajectoryRecord sample_thg(const GuidedModel& model, const NoiseSchedule& schedule,
                                   const ThgConfig& cfg, const Vector& x_T,
                                   RecordMode mode = RecordMode::Full) {
  cfg.validate();
  require_dim(x_T, model.dim(), "sample_thg initial state");
  const FineGrid& grid = cfg.grid.fine();
  const int n = grid.steps();
  const auto pmode = model.mode();
  CountingModel counted(model, schedule);
  TrajectoryRecord rec;

  Vector tortoise = x_T;
  // hare[j] is written by the most recent coarse anchor before j is reached.
  std::vector<Vector> hare(static_cast<std::size_t>(n) + 1);
  hare[0] = Vector::Zero(model.dim());
  if (mode == RecordMode::Full) rec.push(grid[0], tortoise, hare[0]);

  for (int i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const Vector x = tortoise + hare[ui];
    const Vector eps_cond = counted.cond(x, grid[i]);
    Vector next_tortoise =
        step_with_fixed_prediction(cfg.solver, pmode, tortoise, eps_cond, grid[i], grid[i + 1],
                                   schedule);

    if (cfg.grid.contains(i)) {
      const int next = cfg.grid.next_after(i);
      const int leap = next - i;
      Vector source = Vector::Zero(model.dim());
      bool boosted = false;
      if (i < cfg.i_hi) {
        Vector delta = eps_cond - counted.uncond(x, grid[i]);
        if (leap >= 2 || cfg.always_boost) {
          delta *= cfg.boost;
          boosted = true;
        }
        source = (cfg.omega - 1.0) * delta;
      }
      for (int j = i + 1; j <= next; ++j) {
        hare[static_cast<std::size_t>(j)] = step_with_fixed_prediction(
            cfg.solver, pmode, hare[ui], source, grid[i], grid[j], schedule);
      }
      rec.coarse_events.push_back({i, leap, boosted});
    }

    tortoise = std::move(next_tortoise);
    const auto un = static_cast<std::size_t>(i + 1);
    if (mode == RecordMode::Full || i + 1 == n) rec.push(grid[i + 1], tortoise, hare[un]);
    if (mode == RecordMode::EndpointOnly) hare[ui].resize(0);
  }
  rec.nfe = counted.nfe();
  return rec;
}

/// ||x_0 - reference||_2 for the final state of a run.
inline double endpoint_error(const TrajectoryRecord& record, const Vector& reference) {
  require_dim(reference, record.endpoint().size(), "endpoint_error reference");
  return (record.endpoint() - reference).norm();
}

/// max_i ||a_i - b_i||_2 over the recorded fine indices of two full records.
inline double max_state_deviation(const TrajectoryRecord& a, const TrajectoryRecord& b) {
  if (a.full_states.size() != b.full_states.size()) {
    throw DimensionMismatch("records cover different numbers of fine indices");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.full_states.size(); ++i) {
    worst = std::max(worst, (a.full_states[i] - b.full_states[i]).norm());
  }
  return worst;
}

}  // namespace thg
