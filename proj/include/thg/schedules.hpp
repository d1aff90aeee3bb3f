#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "thg/error.hpp"

namespace thg {

enum class ScheduleKind { VariancePreservingLinear, FlowMatchingLinear };

/// Continuous noise schedule (alpha_t, sigma_t) with the drift/diffusion
/// coefficients of the probability-flow ODE
///   dx/dt = f(t) x + g^2(t) / (2 sigma_t) * eps(x, t),
/// where f = d log(alpha)/dt and g^2 = d(sigma^2)/dt - 2 f sigma^2.
///
/// Immutable after construction.
class NoiseSchedule {
 public:
  ScheduleKind kind() const noexcept { return kind_; }
  double t_min() const noexcept { return t_min_; }
  double t_max() const noexcept { return t_max_; }
  double beta_min() const noexcept { return beta_min_; }
  double beta_max() const noexcept { return beta_max_; }

  bool contains(double t) const noexcept {
    const double slack = 1e-12 * (t_max_ - t_min_);
    return t >= t_min_ - slack && t <= t_max_ + slack;
  }

  void check_time(double t) const {
    if (!contains(t)) {
      throw TimeRangeError("time " + std::to_string(t) + " outside schedule bounds [" +
                           std::to_string(t_min_) + ", " + std::to_string(t_max_) + "]");
    }
  }

  double log_alpha(double t) const {
    if (kind_ == ScheduleKind::VariancePreservingLinear) {
      return -0.5 * (beta_min_ * t + 0.5 * (beta_max_ - beta_min_) * t * t / t_max_);
    }
    return std::log1p(-t);
  }

  double alpha(double t) const {
    if (kind_ == ScheduleKind::VariancePreservingLinear) return std::exp(log_alpha(t));
    return 1.0 - t;
  }

  double sigma(double t) const {
    if (kind_ == ScheduleKind::VariancePreservingLinear) {
      // 1 - alpha^2 without cancellation near t = 0.
      return std::sqrt(-std::expm1(2.0 * log_alpha(t)));
    }
    return t;
  }

  /// Linear VP rate beta(t); zero for flow schedules.
  double beta(double t) const {
    if (kind_ == ScheduleKind::VariancePreservingLinear) {
      return beta_min_ + (beta_max_ - beta_min_) * t / t_max_;
    }
    return 0.0;
  }

  /// f(t) = d log(alpha_t) / dt
  double f(double t) const {
    if (kind_ == ScheduleKind::VariancePreservingLinear) return -0.5 * beta(t);
    return -1.0 / (1.0 - t);
  }

  /// g^2(t) = d(sigma_t^2)/dt - 2 f(t) sigma_t^2
  double g2(double t) const {
    // VP: alpha^2 + sigma^2 = 1 collapses the expression to beta(t).
    if (kind_ == ScheduleKind::VariancePreservingLinear) return beta(t);
    return 2.0 * t / (1.0 - t);
  }

  /// Coefficient g^2 / (2 sigma) multiplying the noise prediction in the ODE.
  double eps_coefficient(double t) const { return 0.5 * g2(t) / sigma(t); }

  friend NoiseSchedule make_vp_schedule(double beta_min, double beta_max, double T);
  friend NoiseSchedule make_flow_schedule();

 private:
  NoiseSchedule(ScheduleKind kind, double t_min, double t_max, double beta_min, double beta_max)
      : kind_(kind), t_min_(t_min), t_max_(t_max), beta_min_(beta_min), beta_max_(beta_max) {}

  ScheduleKind kind_;
  double t_min_;
  double t_max_;
  double beta_min_;
  double beta_max_;
};

/// Variance-preserving schedule with beta linear in t on [0, T]:
/// alpha(t) = exp(-1/2 int_0^t beta), sigma(t) = sqrt(1 - alpha(t)^2).
inline NoiseSchedule make_vp_schedule(double beta_min, double beta_max, double T) {
  if (!(beta_min > 0.0) || !(beta_max > beta_min) || !(T > 0.0) || !std::isfinite(beta_max) ||
      !std::isfinite(T)) {
    throw InvalidParameter("make_vp_schedule requires 0 < beta_min < beta_max and T > 0");
  }
  return NoiseSchedule(ScheduleKind::VariancePreservingLinear, 0.0, T, beta_min, beta_max);
}

/// Rectified-flow interpolation x_t = (1 - t) x_0 + t * noise on [0, 1].
inline NoiseSchedule make_flow_schedule() {
  return NoiseSchedule(ScheduleKind::FlowMatchingLinear, 0.0, 1.0, 0.0, 0.0);
}

enum class GridSpacing { UniformInTime, UniformInDiscreteIndex };

/// Number of training steps emulated by GridSpacing::UniformInDiscreteIndex.
inline constexpr int kDiscreteTrainSteps = 1000;

/// Fine timestep grid t_0 = t_max > t_1 > ... > t_N = t_min.
class FineGrid {
 public:
  FineGrid(std::vector<double> times, GridSpacing spacing)
      : times_(std::move(times)), spacing_(spacing) {
    if (times_.size() < 2) throw InvalidParameter("fine grid needs at least two times");
    for (std::size_t i = 1; i < times_.size(); ++i) {
      if (!(times_[i] < times_[i - 1])) {
        throw InvalidParameter("fine grid times must be strictly decreasing");
      }
    }
  }

  /// Number of intervals N.
  int steps() const noexcept { return static_cast<int>(times_.size()) - 1; }
  double operator[](int i) const { return times_.at(static_cast<std::size_t>(i)); }
  double dt(int i) const { return (*this)[i] - (*this)[i + 1]; }
  const std::vector<double>& times() const noexcept { return times_; }
  GridSpacing spacing() const noexcept { return spacing_; }

  friend bool operator==(const FineGrid&, const FineGrid&) = default;

 private:
  std::vector<double> times_;
  GridSpacing spacing_;
};

inline FineGrid make_fine_grid(const NoiseSchedule& schedule, int N,
                               GridSpacing spacing = GridSpacing::UniformInTime) {
  if (N < 1) throw InvalidParameter("make_fine_grid requires N >= 1");
  const double lo = schedule.t_min();
  const double hi = schedule.t_max();
  std::vector<double> times(static_cast<std::size_t>(N) + 1);
  if (spacing == GridSpacing::UniformInTime) {
    for (int i = 0; i <= N; ++i) {
      times[static_cast<std::size_t>(i)] = hi - (hi - lo) * static_cast<double>(i) / N;
    }
  } else {
    // Evenly spaced discrete training indices, mapped back onto continuous time.
    if (N > kDiscreteTrainSteps) {
      throw InvalidParameter("discrete-index spacing supports at most " +
                             std::to_string(kDiscreteTrainSteps) + " steps");
    }
    for (int i = 0; i <= N; ++i) {
      const auto k = std::lround(static_cast<double>(N - i) * kDiscreteTrainSteps / N);
      times[static_cast<std::size_t>(i)] =
          lo + (hi - lo) * static_cast<double>(k) / kDiscreteTrainSteps;
    }
  }
  times.front() = hi;
  times.back() = lo;
  return FineGrid(std::move(times), spacing);
}

inline std::string_view to_string(GridSpacing s) {
  return s == GridSpacing::UniformInTime ? "uniform-in-t" : "uniform-in-discrete-index";
}

inline std::string_view to_string(ScheduleKind k) {
  return k == ScheduleKind::VariancePreservingLinear ? "vp" : "flow";
}

}  // namespace thg
