#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "thg/coarse_grid.hpp"
#include "thg/error.hpp"
#include "thg/models.hpp"
#include "thg/schedules.hpp"
#include "thg/solvers.hpp"
#include "thg/vector.hpp"

namespace thg {

/// Per fine interval: batch mean and standard deviation of the one-step vs
/// two-half-step difference norms for each branch. These are the error
/// constants ||c^T||, ||c^H|| up to the common factor (1 - 2^-p) dt^(p+1),
/// which cancels in the hare/tortoise ratio.
struct ErrorConstantProfile {
  std::vector<double> times;  ///< fine times t_0..t_N
  std::vector<double> tortoise_mean;
  std::vector<double> tortoise_std;
  std::vector<double> hare_mean;
  std::vector<double> hare_std;
  std::size_t batch_size = 0;
  long nfe = 0;

  int steps() const noexcept { return static_cast<int>(tortoise_mean.size()); }
};

struct RichardsonStep {
  Vector tortoise;  ///< one full step, used to continue the trajectory
  Vector hare;
  double tortoise_diff;  ///< ||x^(1) - x^(2)||
  double hare_diff;
};

/// One Richardson comparison for the split system on [t_to, t_from].
///
/// `step(x, pred, t_from, t_to)` is a fixed-prediction solver step and
/// `predict(x_full, t)` returns the (tortoise, hare) predictions at the
/// combined state. The two-half-step path re-evaluates the predictions at the
/// interval midpoint.
template <class Step, class BranchPredict>
RichardsonStep richardson_step(Step&& step, BranchPredict&& predict, const Vector& tortoise,
                               const Vector& hare, double t_from, double t_to) {
  auto [pred_t, pred_h] = predict(Vector(tortoise + hare), t_from);
  Vector tortoise_one = step(tortoise, pred_t, t_from, t_to);
  Vector hare_one = step(hare, pred_h, t_from, t_to);

  const double t_mid = 0.5 * (t_from + t_to);
  const Vector tortoise_mid = step(tortoise, pred_t, t_from, t_mid);
  const Vector hare_mid = step(hare, pred_h, t_from, t_mid);
  auto [pred_t2, pred_h2] = predict(Vector(tortoise_mid + hare_mid), t_mid);
  const Vector tortoise_two = step(tortoise_mid, pred_t2, t_mid, t_to);
  const Vector hare_two = step(hare_mid, pred_h2, t_mid, t_to);

  const double dt = (tortoise_one - tortoise_two).norm();
  const double dh = (hare_one - hare_two).norm();
  return {std::move(tortoise_one), std::move(hare_one), dt, dh};
}

/// Estimate per-step error constants along guided trajectories started from
/// each state in `batch`. The trajectory is continued with the one-step result
/// so that it follows the fine-grid CFG path. Costs 4 NFE per step per trajectory.
inline ErrorConstantProfile richardson_profile(const GuidedModel& model,
                                               const NoiseSchedule& schedule, const FineGrid& grid,
                                               double omega, const SolverStep& solver,
                                               std::span<const Vector> batch) {
  if (batch.empty()) throw InvalidParameter("richardson_profile needs a non-empty batch");
  const int n = grid.steps();
  const auto mode = model.mode();
  CountingModel counted(model, schedule);

  auto step = [&](const Vector& x, const Vector& pred, double from, double to) {
    return step_with_fixed_prediction(solver, mode, x, pred, from, to, schedule);
  };
  auto predict = [&](const Vector& x, double t) {
    Prediction p = counted.both(x, t);
    return std::pair<Vector, Vector>(std::move(p.cond), (omega - 1.0) * p.delta);
  };

  const auto un = static_cast<std::size_t>(n);
  std::vector<double> sum_t(un, 0.0), sum_h(un, 0.0), sq_t(un, 0.0), sq_h(un, 0.0);
  for (const Vector& x_T : batch) {
    require_dim(x_T, model.dim(), "richardson_profile batch state");
    Vector tortoise = x_T;
    Vector hare = Vector::Zero(model.dim());
    for (int i = 0; i < n; ++i) {
      auto r = richardson_step(step, predict, tortoise, hare, grid[i], grid[i + 1]);
      const auto ui = static_cast<std::size_t>(i);
      sum_t[ui] += r.tortoise_diff;
      sq_t[ui] += r.tortoise_diff * r.tortoise_diff;
      sum_h[ui] += r.hare_diff;
      sq_h[ui] += r.hare_diff * r.hare_diff;
      tortoise = std::move(r.tortoise);
      hare = std::move(r.hare);
    }
  }

  ErrorConstantProfile profile;
  profile.times = grid.times();
  profile.batch_size = batch.size();
  profile.nfe = counted.nfe();
  const auto count = static_cast<double>(batch.size());
  auto finish = [count](double sum, double sq, std::vector<double>& mean, std::vector<double>& sd) {
    const double m = sum / count;
    mean.push_back(m);
    // sample standard deviation; zero for a single trajectory
    const double var = count > 1.0 ? std::max(0.0, (sq - count * m * m) / (count - 1.0)) : 0.0;
    sd.push_back(std::sqrt(var));
  };
  for (std::size_t i = 0; i < un; ++i) {
    finish(sum_t[i], sq_t[i], profile.tortoise_mean, profile.tortoise_std);
    finish(sum_h[i], sq_h[i], profile.hare_mean, profile.hare_std);
  }
  return profile;
}

/// Hare constants at or below this are treated as zero (no leap limit).
inline double hare_floor(double tortoise) { return 1e-12 * (tortoise + 1e-300); }

/// Largest admissible hare leap: min(cap, max(1, floor((rho * tortoise / hare)^(1/p)))).
/// Returns cap when the hare constant vanishes.
inline int m_max(double tortoise, double hare, double rho, int p, int cap) {
  if (cap < 1) return 1;
  if (hare <= hare_floor(tortoise)) return cap;
  const long double ratio =
      static_cast<long double>(rho) * static_cast<long double>(tortoise) / hare;
  if (!(ratio >= 1.0L)) return 1;
  auto pow_p = [p](long double m) {
    long double r = 1.0L;
    for (int k = 0; k < p; ++k) r *= m;
    return r;
  };
  if (pow_p(static_cast<long double>(cap)) <= ratio) return cap;
  // pow() may land just below an exact integer root; settle on the largest m
  // with m^p <= ratio.
  auto m = static_cast<long>(std::floor(std::pow(ratio, 1.0L / p)));
  m = std::clamp<long>(m, 1, cap);
  while (m < cap && pow_p(static_cast<long double>(m + 1)) <= ratio) ++m;
  while (m > 1 && pow_p(static_cast<long double>(m)) > ratio) --m;
  return static_cast<int>(m);
}

/// Greedy forward walk over the fine grid: add the current index to C and
/// advance by the leap allowed there; finally add the last index N.
/// `leap_at(i)` must return a positive step count.
template <class LeapFn>
CoarseGrid look_before_you_leap(const FineGrid& fine, LeapFn&& leap_at) {
  const int n = fine.steps();
  std::vector<int> indices;
  int i = 0;
  while (i < n) {
    indices.push_back(i);
    const int m = leap_at(i);
    if (m < 1) throw InvalidParameter("leap length must be positive");
    i += m;
  }
  indices.push_back(n);
  return CoarseGrid(fine, std::move(indices));
}

/// Coarse grid from an error-constant profile. The leap at index i is capped
/// at N - i and at `cap` when given.
inline CoarseGrid build_coarse_grid(const ErrorConstantProfile& profile, double rho, int p,
                                    std::optional<int> cap = std::nullopt) {
  if (!(rho > 0.0)) throw InvalidParameter("rho must be > 0");
  if (p < 1) throw InvalidParameter("solver order must be >= 1");
  if (cap && *cap < 1) throw InvalidParameter("cap must be >= 1");
  const int n = profile.steps();
  if (profile.times.size() != static_cast<std::size_t>(n) + 1) {
    throw DimensionMismatch("profile times must have N + 1 entries");
  }
  FineGrid fine(profile.times, GridSpacing::UniformInTime);
  return look_before_you_leap(fine, [&](int i) {
    const int remaining = n - i;
    const int c = cap ? std::min(*cap, remaining) : remaining;
    const auto ui = static_cast<std::size_t>(i);
    return m_max(profile.tortoise_mean[ui], profile.hare_mean[ui], rho, p, c);
  });
}

struct ProfileReportRow {
  int index;
  double t;
  double tortoise_mean;
  double tortoise_std;
  double hare_mean;
  double hare_std;
  int m_max;
};

/// Per-step tortoise vs hare error bounds with the leap each step would allow.
inline std::vector<ProfileReportRow> error_bound_profile_report(
    const ErrorConstantProfile& profile, double rho, int p, std::optional<int> cap = std::nullopt) {
  std::vector<ProfileReportRow> rows;
  const int n = profile.steps();
  rows.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const int remaining = n - i;
    const int c = cap ? std::min(*cap, remaining) : remaining;
    rows.push_back({i, profile.times[ui], profile.tortoise_mean[ui], profile.tortoise_std[ui],
                    profile.hare_mean[ui], profile.hare_std[ui],
                    m_max(profile.tortoise_mean[ui], profile.hare_mean[ui], rho, p, c)});
  }
  return rows;
}

}  // namespace thg
