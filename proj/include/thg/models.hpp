#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "thg/error.hpp"
#include "thg/schedules.hpp"
#include "thg/vector.hpp"

namespace thg {

/// What the oracle returns: the noise estimate (epsilon) or the flow velocity.
enum class PredictionMode { Epsilon, Velocity };

struct MixtureComponent {
  double weight;
  Vector mean;
  double scale;  ///< isotropic standard deviation s, covariance s^2 I
};

using Mixture = std::vector<MixtureComponent>;

/// Conditional and unconditional branch outputs at one (x, t).
struct Prediction {
  Vector cond;
  Vector uncond;
  Vector delta;  ///< cond - uncond

  Prediction(Vector c, Vector u) : cond(std::move(c)), uncond(std::move(u)), delta(cond - uncond) {}
};

/// Closed-form guided model: p(x0 | c) and p(x0) are isotropic Gaussian
/// mixtures, so every noise estimate and velocity under the forward process
/// is exact. Immutable; prediction is a pure function.
class GuidedModel {
 public:
  GuidedModel(PredictionMode mode, Mixture cond, Mixture uncond)
      : mode_(mode), cond_(std::move(cond)), uncond_(std::move(uncond)) {
    if (cond_.empty() || uncond_.empty()) throw InvalidParameter("mixtures must be non-empty");
    dim_ = cond_.front().mean.size();
    if (dim_ < 1) throw InvalidParameter("model dimension must be positive");
    validate(cond_, "cond");
    validate(uncond_, "uncond");
  }

  PredictionMode mode() const noexcept { return mode_; }
  Eigen::Index dim() const noexcept { return dim_; }
  const Mixture& cond_components() const noexcept { return cond_; }
  const Mixture& uncond_components() const noexcept { return uncond_; }

 private:
  void validate(const Mixture& mix, const char* name) const {
    double total = 0.0;
    for (const auto& c : mix) {
      if (c.mean.size() != dim_) {
        throw DimensionMismatch(std::string(name) + " component mean has wrong dimension");
      }
      if (!(c.scale > 0.0) || !std::isfinite(c.scale)) {
        throw InvalidParameter(std::string(name) + " component scale must be positive");
      }
      if (!(c.weight >= 0.0)) {
        throw InvalidParameter(std::string(name) + " component weight must be non-negative");
      }
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw InvalidParameter(std::string(name) + " mixture weights must sum to 1");
    }
  }

  PredictionMode mode_;
  Mixture cond_;
  Mixture uncond_;
  Eigen::Index dim_ = 0;
};

namespace detail {

/// Posterior responsibilities of each component given x_t, via max-shifted
/// log-sum-exp. Also returns the log-normaliser (log p_t(x) up to the
/// Gaussian constant) when requested.
inline std::vector<double> responsibilities(const Mixture& mix, const Vector& x, double alpha,
                                            double sigma, double* log_norm = nullptr) {
  const auto d = static_cast<double>(x.size());
  std::vector<double> logits(mix.size());
  for (std::size_t k = 0; k < mix.size(); ++k) {
    const auto& c = mix[k];
    const double r2 = alpha * alpha * c.scale * c.scale + sigma * sigma;
    const double dist2 = (x - alpha * c.mean).squaredNorm();
    logits[k] = (c.weight > 0.0 ? std::log(c.weight) : -INFINITY) - 0.5 * d * std::log(r2) -
                0.5 * dist2 / r2;
  }
  const double shift = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& l : logits) {
    l = std::exp(l - shift);
    sum += l;
  }
  for (double& l : logits) l /= sum;
  if (log_norm != nullptr) *log_norm = shift + std::log(sum);
  return logits;
}

}  // namespace detail

/// log p_t(x) for the mixture pushed through the forward process
/// x_t = alpha_t x_0 + sigma_t noise.
inline double mixture_log_density(const Mixture& mix, const Vector& x, double t,
                                  const NoiseSchedule& schedule) {
  double log_norm = 0.0;
  detail::responsibilities(mix, x, schedule.alpha(t), schedule.sigma(t), &log_norm);
  return log_norm - 0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi);
}

/// Exact prediction of a single branch.
///   epsilon:  -sigma_t grad log p_t(x) = sigma sum_k g_k (x - alpha mu_k) / r_k^2
///   velocity: E[noise - x_0 | x_t]     = sum_k g_k [(sigma - alpha s_k^2)(x - alpha mu_k)/r_k^2 - mu_k]
/// with r_k^2 = alpha^2 s_k^2 + sigma^2 and g_k the posterior responsibilities.
inline Vector predict_branch(const Mixture& mix, PredictionMode mode, const Vector& x, double t,
                             const NoiseSchedule& schedule) {
  const double alpha = schedule.alpha(t);
  const double sigma = schedule.sigma(t);
  const auto gamma = detail::responsibilities(mix, x, alpha, sigma);
  Vector out = Vector::Zero(x.size());
  for (std::size_t k = 0; k < mix.size(); ++k) {
    if (gamma[k] == 0.0) continue;
    const auto& c = mix[k];
    const double s2 = c.scale * c.scale;
    const double r2 = alpha * alpha * s2 + sigma * sigma;
    if (mode == PredictionMode::Epsilon) {
      out += (gamma[k] * sigma / r2) * (x - alpha * c.mean);
    } else {
      out += gamma[k] * (((sigma - alpha * s2) / r2) * (x - alpha * c.mean) - c.mean);
    }
  }
  return out;
}

inline Prediction predict(const GuidedModel& model, const Vector& x, double t,
                          const NoiseSchedule& schedule) {
  schedule.check_time(t);
  require_dim(x, model.dim(), "predict");
  return Prediction(predict_branch(model.cond_components(), model.mode(), x, t, schedule),
                    predict_branch(model.uncond_components(), model.mode(), x, t, schedule));
}

/// Guided estimate cond + (omega - 1) * delta, i.e. uncond + omega * delta.
inline Vector cfg_combine(const Prediction& p, double omega) {
  return p.cond + (omega - 1.0) * p.delta;
}

/// Right-hand side of the probability-flow ODE for a given (possibly guided)
/// prediction: f x + g^2/(2 sigma) pred in epsilon mode, pred in velocity mode.
inline Vector ode_rhs(PredictionMode mode, const NoiseSchedule& schedule, const Vector& x,
                      const Vector& pred, double t) {
  if (mode == PredictionMode::Velocity) return pred;
  return schedule.f(t) * x + schedule.eps_coefficient(t) * pred;
}

inline std::string_view to_string(PredictionMode m) {
  return m == PredictionMode::Epsilon ? "epsilon" : "velocity";
}

/// Evaluates a model while counting every branch evaluation. One conditional
/// or unconditional evaluation is one NFE.
class CountingModel {
 public:
  CountingModel(const GuidedModel& model, const NoiseSchedule& schedule)
      : model_(&model), schedule_(&schedule) {}

  Vector cond(const Vector& x, double t) {
    check(x, t);
    ++nfe_;
    return predict_branch(model_->cond_components(), model_->mode(), x, t, *schedule_);
  }

  Vector uncond(const Vector& x, double t) {
    check(x, t);
    ++nfe_;
    return predict_branch(model_->uncond_components(), model_->mode(), x, t, *schedule_);
  }

  Prediction both(const Vector& x, double t) {
    Vector c = cond(x, t);
    return Prediction(std::move(c), uncond(x, t));
  }

  long nfe() const noexcept { return nfe_; }
  const GuidedModel& model() const noexcept { return *model_; }
  const NoiseSchedule& schedule() const noexcept { return *schedule_; }

 private:
  void check(const Vector& x, double t) const {
    schedule_->check_time(t);
    require_dim(x, model_->dim(), "model evaluation");
  }

  const GuidedModel* model_;
  const NoiseSchedule* schedule_;
  long nfe_ = 0;
};

}  // namespace thg
