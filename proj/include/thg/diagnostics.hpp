#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "thg/models.hpp"
#include "thg/rng.hpp"
#include "thg/sampler.hpp"
#include "thg/schedules.hpp"
#include "thg/solvers.hpp"

namespace thg {

/// Seed of trajectory k in a batch that starts at `base`.
inline std::uint64_t trajectory_seed(std::uint64_t base, std::uint64_t k) { return base + k; }

/// Finite-difference time-derivative norms of the conditional estimate and of
/// the guidance difference along baseline CFG trajectories, per fine interval.
struct DerivativeNormProfile {
  std::vector<double> times;
  std::vector<double> cond_mean;
  std::vector<double> cond_std;
  std::vector<double> guidance_mean;
  std::vector<double> guidance_std;
};

inline DerivativeNormProfile derivative_norm_profile(const GuidedModel& model,
                                                     const NoiseSchedule& schedule,
                                                     const FineGrid& grid, double omega,
                                                     int trajectories, std::uint64_t seed) {
  if (trajectories < 1) throw InvalidParameter("derivative_norm_profile needs >= 1 trajectory");
  const SolverStep solver{model.mode() == PredictionMode::Epsilon ? SolverKind::DdimExponential
                                                                  : SolverKind::Euler};
  const int n = grid.steps();
  const auto un = static_cast<std::size_t>(n);
  std::vector<std::vector<double>> cond(un), guide(un);

  for (int k = 0; k < trajectories; ++k) {
    const Vector x_T = initial_noise(schedule, model.mode(), model.dim(),
                                     trajectory_seed(seed, static_cast<std::uint64_t>(k)));
    const auto rec = sample_cfg(model, schedule, grid, omega, solver, x_T);
    std::vector<Prediction> preds;
    preds.reserve(un + 1);
    for (int i = 0; i <= n; ++i) {
      preds.push_back(predict(model, rec.full_states[static_cast<std::size_t>(i)], grid[i],
                              schedule));
    }
    for (int i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const double dt = grid.dt(i);
      cond[ui].push_back((preds[ui + 1].cond - preds[ui].cond).norm() / dt);
      guide[ui].push_back((preds[ui + 1].delta - preds[ui].delta).norm() / dt);
    }
  }

  auto stats = [](const std::vector<double>& v, std::vector<double>& mean, std::vector<double>& sd) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    var = v.size() > 1 ? var / static_cast<double>(v.size() - 1) : 0.0;
    mean.push_back(m);
    sd.push_back(std::sqrt(var));
  };
  DerivativeNormProfile out;
  out.times = grid.times();
  for (std::size_t i = 0; i < un; ++i) {
    stats(cond[i], out.cond_mean, out.cond_std);
    stats(guide[i], out.guidance_mean, out.guidance_std);
  }
  return out;
}

}  // namespace thg
