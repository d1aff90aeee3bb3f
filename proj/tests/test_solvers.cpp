#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"

using namespace thg;
using thg::testing::constant;
using thg::testing::SingleGaussian;

namespace {

const SolverStep kDdim{SolverKind::DdimExponential};
const SolverStep kEuler{SolverKind::Euler};
const SolverStep kMidpoint{SolverKind::Midpoint2};

double single_step_error(const SolverStep& solver, const SingleGaussian& g, const NoiseSchedule& s,
                         double omega, const Vector& x, double t0, double h) {
  const auto m = g.model();
  CountingModel c(m, s);
  const Vector got = step_full(solver, c, x, omega, t0, t0 - h).state;
  return (got - g.exact_flow(s, omega, x, t0, t0 - h)).norm();
}

}  // namespace

TEST(SolverStep, OrdersAndCosts) {
  EXPECT_EQ(kDdim.order(), 1);
  EXPECT_EQ(kEuler.order(), 1);
  EXPECT_EQ(kMidpoint.order(), 2);
  EXPECT_EQ(kDdim.nfe_per_full_step(), 2);
  EXPECT_EQ(kMidpoint.nfe_per_full_step(), 4);
  EXPECT_EQ(parse_solver("euler"), kEuler);
  EXPECT_EQ(parse_solver("midpoint2"), kMidpoint);
  EXPECT_FALSE(parse_solver("rk4"));
  EXPECT_EQ(to_string(SolverKind::DdimExponential), "ddim");
}

TEST(FixedPrediction, DdimZeroPredictionIsPureDrift) {
  const auto s = make_vp_schedule(0.1, 20.0, 1.0);
  const Vector x = constant(0.3);
  const Vector got = step_with_fixed_prediction(kDdim, PredictionMode::Epsilon, x,
                                                Vector::Zero(x.size()), 0.7, 0.5, s);
  EXPECT_LT((got - (s.alpha(0.5) / s.alpha(0.7)) * x).norm(), 1e-15);
}

TEST(FixedPrediction, EqualTimesIsIdentity) {
  const auto s = make_vp_schedule(0.1, 20.0, 1.0);
  const Vector x = constant(0.3);
  for (const auto& solver : {kDdim, kEuler, kMidpoint}) {
    EXPECT_EQ(step_with_fixed_prediction(solver, PredictionMode::Epsilon, x, constant(2.0), 0.4,
                                         0.4, s),
              x);
  }
}

TEST(FixedPrediction, EulerScalarStep) {
  const auto s = make_flow_schedule();
  const Vector x = constant(1.0, 1);
  // dx/dt = pred; stepping from t = 1 to t = 0.9 subtracts 0.1 * pred.
  EXPECT_NEAR(step_with_fixed_prediction(kEuler, PredictionMode::Velocity, x, constant(-1.0, 1),
                                         1.0, 0.9, s)[0],
              1.1, 1e-15);
  // Read as a reverse-time derivative of -1 the same step lands on 0.9.
  EXPECT_NEAR(step_with_fixed_prediction(kEuler, PredictionMode::Velocity, x, constant(1.0, 1),
                                         1.0, 0.9, s)[0],
              0.9, 1e-15);
}

TEST(FixedPrediction, RejectsForwardTimeAndSizeMismatch) {
  const auto s = make_vp_schedule(0.1, 20.0, 1.0);
  EXPECT_THROW(step_with_fixed_prediction(kDdim, PredictionMode::Epsilon, constant(0.0),
                                          constant(0.0), 0.3, 0.4, s),
               TimeRangeError);
  EXPECT_THROW(step_with_fixed_prediction(kDdim, PredictionMode::Epsilon, constant(0.0),
                                          constant(0.0, 3), 0.4, 0.3, s),
               DimensionMismatch);
}

TEST(FixedPrediction, DdimExactForConstantNoise) {
  // A near point mass keeps eps = (x - alpha mu) / sigma constant along its flow.
  const auto s = make_vp_schedule(0.1, 20.0, 1.0);
  const SingleGaussian g{constant(0.4), constant(0.4), 1e-9};
  const Vector x = constant(-0.2);
  const auto m = g.model();
  const Vector eps = predict(m, x, 0.8, s).cond;
  const Vector got = step_with_fixed_prediction(kDdim, PredictionMode::Epsilon, x, eps, 0.8, 0.3, s);
  EXPECT_LT((got - g.exact_flow(s, 1.0, x, 0.8, 0.3)).norm(), 1e-12);
}

TEST(StepFull, CountsEvaluations) {
  const auto g = thg::testing::single_gaussian();
  const auto m = g.model();
  const auto s = thg::testing::single_schedule();
  for (const auto& solver : {kDdim, kEuler, kMidpoint}) {
    CountingModel c(m, s);
    const auto r = step_full(solver, c, constant(0.5), 3.0, 0.6, 0.5);
    EXPECT_EQ(r.nfe_used, solver.nfe_per_full_step());
    EXPECT_EQ(c.nfe(), solver.nfe_per_full_step());
  }
}

TEST(StepFull, OmegaOneIsConditionalOnly) {
  const auto m = thg::testing::two_component_model();
  const auto s = thg::testing::two_component_schedule();
  const Vector x = constant(0.2);
  CountingModel c(m, s);
  const Vector guided = step_full(kDdim, c, x, 1.0, 0.6, 0.5).state;
  const Vector cond = predict(m, x, 0.6, s).cond;
  EXPECT_EQ(guided, step_with_fixed_prediction(kDdim, m.mode(), x, cond, 0.6, 0.5, s));
}

TEST(StepFull, HalvingStepScalesLocalError) {
  const auto s = make_vp_schedule(0.1, 20.0, 1.0);
  const SingleGaussian g{constant(1.0), constant(0.0), 0.5};
  const Vector x = 0.5 * initial_noise(s, PredictionMode::Epsilon, thg::testing::kDim, 3);
  for (const auto& [solver, expected] : {std::pair{kEuler, 4.0}, std::pair{kMidpoint, 8.0}}) {
    const double h = std::ldexp(1.0, -7);
    const double ratio = single_step_error(solver, g, s, 3.0, x, 0.7, h) /
                         single_step_error(solver, g, s, 3.0, x, 0.7, h / 2);
    EXPECT_NEAR(ratio, expected, 0.15 * expected) << to_string(solver.kind);
  }
}

TEST(StepFull, VelocityStepsAgreeOnFlow) {
  const auto s = make_flow_schedule();
  SingleGaussian g{constant(1.0), constant(0.0), 1.0, PredictionMode::Velocity};
  const Vector x = initial_noise(s, PredictionMode::Velocity, thg::testing::kDim, 2);
  // all kinds reduce to x + h v for a frozen velocity
  const Vector v = constant(0.25);
  const Vector a = step_with_fixed_prediction(kDdim, PredictionMode::Velocity, x, v, 0.5, 0.25, s);
  const Vector b = step_with_fixed_prediction(kMidpoint, PredictionMode::Velocity, x, v, 0.5, 0.25, s);
  EXPECT_EQ(a, b);
  EXPECT_LT(single_step_error(kMidpoint, g, s, 2.0, x, 0.5, 1.0 / 64), 1e-4);
}
