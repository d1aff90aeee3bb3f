#pragma once

// Shared test models, independent oracles and grid fixtures.

#include <cmath>
#include <cstdint>
#include <vector>

#include "thg/thg.hpp"

namespace thg::testing {

inline constexpr int kDim = 8;

inline Vector constant(double v, int dim = kDim) { return Vector::Constant(dim, v); }

/// Single Gaussian per branch with a shared scale: the guided field is
/// itself the exact field of N(mu_omega, s^2 I) with
/// mu_omega = omega mu_c - (omega - 1) mu_u, so the ODE has a closed-form flow.
struct SingleGaussian {
  Vector mu_cond;
  Vector mu_uncond;
  double scale;
  PredictionMode mode = PredictionMode::Epsilon;

  GuidedModel model() const {
    return GuidedModel(mode, {{1.0, mu_cond, scale}}, {{1.0, mu_uncond, scale}});
  }

  /// Exact flow map of the guided ODE from (x, t_from) to t_to:
  ///   x_t = alpha_t mu_w + (r_t / r_from) (x - alpha_from mu_w),  r_t^2 = alpha_t^2 s^2 + sigma_t^2.
  Vector exact_flow(const NoiseSchedule& sch, double omega, const Vector& x, double t_from,
                    double t_to) const {
    const Vector mu_w = omega * mu_cond - (omega - 1.0) * mu_uncond;
    auto r = [&](double t) {
      const double a = sch.alpha(t);
      const double s = sch.sigma(t);
      return std::sqrt(a * a * scale * scale + s * s);
    };
    return sch.alpha(t_to) * mu_w + (r(t_to) / r(t_from)) * (x - sch.alpha(t_from) * mu_w);
  }
};

/// The calibration fixture used by the ratio, stability and monotonicity checks:
/// VP(0.1, 20), s = 1, mu_c = 0.125, mu_u = 0, omega = 2.
inline constexpr double kSingleOmega = 2.0;
inline NoiseSchedule single_schedule() { return make_vp_schedule(0.1, 20.0, 1.0); }
inline SingleGaussian single_gaussian() { return {constant(0.125), constant(0.0), 1.0}; }

/// Two well-separated components; conditioning shifts the weights from
/// (0.5, 0.5) to (0.6, 0.4), so the guidance difference dies out once a
/// trajectory has committed to a mode. VP(0.1, 10), omega = 3.
inline constexpr double kTwoOmega = 3.0;
inline NoiseSchedule two_component_schedule() { return make_vp_schedule(0.1, 10.0, 1.0); }
inline GuidedModel two_component_model(PredictionMode mode = PredictionMode::Epsilon) {
  const double sep = 1.5;
  const double s = 0.5;
  return GuidedModel(mode, {{0.6, constant(sep), s}, {0.4, constant(-sep), s}},
                     {{0.5, constant(sep), s}, {0.5, constant(-sep), s}});
}

inline std::vector<Vector> noise_batch(const NoiseSchedule& sch, PredictionMode mode,
                                       std::uint64_t base, int count, int dim = kDim) {
  std::vector<Vector> out;
  for (int k = 0; k < count; ++k) {
    out.push_back(initial_noise(sch, mode, dim, base + static_cast<std::uint64_t>(k)));
  }
  return out;
}

/// Coarse grid indices reported for the 50-step DDIM configuration at
/// rho = 1.1, with the terminal index N = 50 appended.
inline std::vector<int> published_ddim_grid() {
  return {0,  1,  2,  3,  4,  5,  6,  8,  10, 12, 14, 17, 20, 23, 26, 28, 30,
          32, 34, 36, 38, 39, 40, 41, 42, 43, 44, 45, 46, 47, 48, 49, 50};
}

/// Coarse grid indices reported for the 28-step Euler flow configuration at
/// rho = 1.0, with the terminal index N = 28 appended.
inline std::vector<int> published_flow_grid() {
  return {0, 1, 2, 4, 6, 9, 12, 15, 18, 20, 22, 23, 24, 25, 26, 28};
}

/// Least-squares slope of log(err) against log(h).
inline double loglog_slope(const std::vector<double>& h, const std::vector<double>& err) {
  const auto n = static_cast<double>(h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    const double x = std::log(h[k]);
    const double y = std::log(err[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace thg::testing
