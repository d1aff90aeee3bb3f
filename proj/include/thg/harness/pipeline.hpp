#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "thg/calibration.hpp"
#include "thg/diagnostics.hpp"
#include "thg/harness/config.hpp"
#include "thg/harness/io.hpp"
#include "thg/harness/oracle.hpp"
#include "thg/rng.hpp"
#include "thg/sampler.hpp"

namespace thg::harness {

inline std::vector<Vector> initial_batch(const ExperimentConfig& cfg, std::uint64_t base_seed,
                                         int count) {
  const auto schedule = cfg.make_schedule();
  std::vector<Vector> batch;
  batch.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    batch.push_back(initial_noise(schedule, cfg.prediction_mode(), cfg.model.dim,
                                  trajectory_seed(base_seed, static_cast<std::uint64_t>(k))));
  }
  return batch;
}

inline ErrorConstantProfile run_calibration(const ExperimentConfig& cfg) {
  const auto schedule = cfg.make_schedule();
  const auto model = cfg.make_model();
  const auto batch = initial_batch(cfg, cfg.calibration_seed, cfg.calibration_batch);
  return richardson_profile(model, schedule, cfg.make_grid(), cfg.omega, cfg.make_solver(), batch);
}

inline nlohmann::json calibration_metadata(const ExperimentConfig& cfg,
                                           const ErrorConstantProfile& profile) {
  return {{"config", to_json(cfg)},
          {"fine_times", profile.times},
          {"batch_size", profile.batch_size},
          {"nfe", profile.nfe},
          {"order", cfg.make_solver().order()}};
}

struct ComparisonRow {
  std::string method;
  std::string seed;  ///< trajectory seed, or "mean" for the aggregate row
  double nfe;
  double endpoint_error;
  double max_deviation_vs_cfg;
  double wall_time_ms;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;

  const ComparisonRow& aggregate(const std::string& method) const {
    for (const auto& r : rows) {
      if (r.method == method && r.seed == "mean") return r;
    }
    throw std::out_of_range("no aggregate row for " + method);
  }
};

inline constexpr std::string_view kReportHeader =
    "method,seed,nfe,endpoint_error,max_deviation_vs_cfg,wall_time_ms";

inline std::string report_csv_row(const ComparisonRow& r) {
  return r.method + ',' + r.seed + ',' + fmt(r.nfe) + ',' + fmt(r.endpoint_error) + ',' +
         fmt(r.max_deviation_vs_cfg) + ',' + fmt(r.wall_time_ms) + '\n';
}

/// CFG vs THG against the reference oracle, one row per method per seed and a
/// mean row per method. `sink` receives each row as soon as it is computed.
inline ComparisonReport run_comparison(const ExperimentConfig& cfg, const CoarseGrid& grid,
                                       const std::function<void(const ComparisonRow&)>& sink = {}) {
  const auto schedule = cfg.make_schedule();
  const auto model = cfg.make_model();
  const auto solver = cfg.make_solver();
  const FineGrid& fine = grid.fine();
  const ThgConfig thg_cfg{cfg.omega, cfg.rho, cfg.boost, cfg.i_hi, grid, solver, cfg.always_boost};
  thg_cfg.validate();

  ComparisonReport report;
  auto emit = [&](ComparisonRow row) {
    if (sink) sink(row);
    report.rows.push_back(std::move(row));
  };
  using clock = std::chrono::steady_clock;
  auto ms_since = [](clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  };

  ComparisonRow mean_cfg{"cfg", "mean", 0, 0, 0, 0};
  ComparisonRow mean_thg{"thg", "mean", 0, 0, 0, 0};
  for (int k = 0; k < cfg.compare_seeds; ++k) {
    const auto seed = trajectory_seed(cfg.compare_seed, static_cast<std::uint64_t>(k));
    const Vector x_T = initial_noise(schedule, model.mode(), model.dim(), seed);
    const Vector reference = reference_oracle(model, schedule, cfg.omega, x_T, cfg.oracle_substeps);

    auto t0 = clock::now();
    const auto cfg_rec = sample_cfg(model, schedule, fine, cfg.omega, solver, x_T);
    const double cfg_ms = ms_since(t0);
    t0 = clock::now();
    const auto thg_rec = sample_thg(model, schedule, thg_cfg, x_T);
    const double thg_ms = ms_since(t0);

    ComparisonRow a{"cfg", std::to_string(seed), static_cast<double>(cfg_rec.nfe),
                    endpoint_error(cfg_rec, reference), 0.0, cfg_ms};
    ComparisonRow b{"thg", std::to_string(seed), static_cast<double>(thg_rec.nfe),
                    endpoint_error(thg_rec, reference), max_state_deviation(thg_rec, cfg_rec),
                    thg_ms};
    for (auto* m : {&mean_cfg, &mean_thg}) {
      const auto& r = m == &mean_cfg ? a : b;
      m->nfe += r.nfe;
      m->endpoint_error += r.endpoint_error;
      m->max_deviation_vs_cfg += r.max_deviation_vs_cfg;
      m->wall_time_ms += r.wall_time_ms;
    }
    emit(std::move(a));
    emit(std::move(b));
  }
  const auto n = static_cast<double>(cfg.compare_seeds);
  for (auto* m : {&mean_cfg, &mean_thg}) {
    m->nfe /= n;
    m->endpoint_error /= n;
    m->max_deviation_vs_cfg /= n;
    m->wall_time_ms /= n;
    emit(*m);
  }
  return report;
}

}  // namespace thg::harness
